#!/usr/bin/env python3
"""Single-window scale smoke test with wall-clock and peak-RSS reporting.

Generates a large population, builds one 6-week window graph with the
out-of-core pair aggregator forced to spill, runs community detection,
and prints timing plus resource usage.
"""

import argparse
import resource
import sys
import time
from datetime import date
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from colograph.community import louvain_first_level
from colograph.graph import BuildParams, build_graph
from colograph.ingest import WindowSpec, parse_event_file
from colograph.metrics import compute_metrics
from colograph.synth import MixingSchedule, PopulationSpec, generate_events


def rss_gb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1e6


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--households", type=int, default=50_000)
    ap.add_argument("--workplaces", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--max-pairs-in-memory", type=int, default=200_000)
    ap.add_argument("--out", default="scale-run")
    args = ap.parse_args()

    pop = PopulationSpec(
        households=args.households,
        workplaces=args.workplaces,
        household_size_range=(1, 3),
        devices_per_person=1,
        workplace_assignment_fraction=0.3,
        seed=args.seed,
    )
    start = date(2020, 1, 20)

    t0 = time.perf_counter()
    summary = generate_events(pop, MixingSchedule((0.5,) * 6), start, Path(args.out))
    print(f"synth: {summary['events_written']} events in {time.perf_counter()-t0:.1f}s, rss {rss_gb():.2f} GB")

    t1 = time.perf_counter()
    epoched, report = parse_event_file(summary["events"], window=WindowSpec(date(2020, 2, 10)))
    print(f"ingest: {report.parsed} parsed in {time.perf_counter()-t1:.1f}s, rss {rss_gb():.2f} GB")

    t2 = time.perf_counter()
    graph = build_graph(
        epoched, BuildParams(), max_pairs_in_memory=args.max_pairs_in_memory
    )
    print(
        f"build: {graph.node_count} nodes, {graph.edge_count} edges "
        f"in {time.perf_counter()-t2:.1f}s, rss {rss_gb():.2f} GB"
    )

    t3 = time.perf_counter()
    partition = louvain_first_level(graph, seed=7)
    m = compute_metrics(graph, partition)
    print(
        f"communities: {partition.community_count} "
        f"(Q={m.q:.4f}, R={m.r:.4f}) in {time.perf_counter()-t3:.1f}s"
    )
    print(f"total: {time.perf_counter()-t0:.1f}s, peak rss {rss_gb():.2f} GB")
    return 0


if __name__ == "__main__":
    sys.exit(main())
