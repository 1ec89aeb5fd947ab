"""Weighted device-graph construction from epoched colocation entries.

Pair weights accumulate as 1/N per (epoch, IP) group of N colocated devices,
with groups larger than a fan-out cap skipped; edges below a strict weight
cutoff are dropped from the final graph.
"""

from __future__ import annotations

import heapq
import os
import tempfile
from dataclasses import dataclass
from itertools import combinations, groupby
from pathlib import Path
from typing import Iterator

from .ingest import EpochedEvents

EDGE_HEADER = "#colograph-edges v1"


@dataclass(frozen=True)
class BuildParams:
    """Fan-out cap and edge cutoff for graph construction."""

    n_max: int = 50
    gamma: float = 0.8

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be at least 2")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph; edges keyed by lexicographic (i, j), i < j.

    Isolated nodes are permitted: the node set is fixed independently of
    which edges survive the cutoff.
    """

    nodes: frozenset[str]
    edges: dict[tuple[str, str], float]

    def validate(self) -> None:
        for (i, j), w in self.edges.items():
            if i >= j:
                raise ValueError(f"edge key not ordered: {(i, j)}")
            if w <= 0:
                raise ValueError(f"non-positive weight on {(i, j)}")
            if i not in self.nodes or j not in self.nodes:
                raise ValueError(f"edge endpoint outside node set: {(i, j)}")

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return sum(self.edges.values())

    def adjacency(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (i, j), w in self.edges.items():
            adj[i][j] = w
            adj[j][i] = w
        return adj


def edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


def _pair_stream(
    events: EpochedEvents, n_max: int
) -> Iterator[tuple[tuple[str, str], float]]:
    """Yield (pair, 1/N) contributions group by (epoch, ip)."""
    entries = sorted(events.entries)
    for (_, _), group in groupby(entries, key=lambda e: (e[0], e[1])):
        devices = sorted({d for _, _, d in group})
        n = len(devices)
        if n < 2 or n > n_max:
            continue
        w = 1.0 / n
        for pair in combinations(devices, 2):
            yield pair, w


def _spill_run(acc: dict[tuple[str, str], float], tmp_dir: str) -> str:
    fd, path = tempfile.mkstemp(prefix="colograph-run-", suffix=".tsv", dir=tmp_dir)
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        for (i, j), w in sorted(acc.items()):
            fh.write(f"{i}\t{j}\t{w!r}\n")
    return path


def _read_run(path: str) -> Iterator[tuple[tuple[str, str], float]]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            i, j, w = line.rstrip("\n").split("\t")
            yield (i, j), float(w)


def build_graph(
    events: EpochedEvents,
    params: BuildParams,
    max_pairs_in_memory: int = 4_000_000,
    tmp_dir: str | None = None,
) -> WeightedGraph:
    """Accumulate pair weights over all (epoch, IP) groups and apply the cutoff.

    When the in-memory accumulator exceeds max_pairs_in_memory, sorted runs
    are spilled to disk and merge-aggregated, bounding memory at large scale.
    """
    nodes = frozenset(events.device_ids)
    acc: dict[tuple[str, str], float] = {}
    runs: list[str] = []
    spill_dir = None
    try:
        for pair, w in _pair_stream(events, params.n_max):
            acc[pair] = acc.get(pair, 0.0) + w
            if len(acc) > max_pairs_in_memory:
                if spill_dir is None:
                    spill_dir = tempfile.mkdtemp(prefix="colograph-", dir=tmp_dir)
                runs.append(_spill_run(acc, spill_dir))
                acc.clear()

        edges: dict[tuple[str, str], float] = {}
        if runs:
            streams = [_read_run(p) for p in runs]
            streams.append(iter(sorted(acc.items())))
            merged = heapq.merge(*streams, key=lambda kv: kv[0])
            for pair, chunk in groupby(merged, key=lambda kv: kv[0]):
                w = sum(v for _, v in chunk)
                if w > params.gamma:
                    edges[pair] = w
        else:
            edges = {p: w for p, w in acc.items() if w > params.gamma}
    finally:
        for p in runs:
            os.unlink(p)
        if spill_dir is not None:
            os.rmdir(spill_dir)
    return WeightedGraph(nodes=nodes, edges=edges)


def apply_cutoff(graph: WeightedGraph, gamma: float) -> WeightedGraph:
    """Keep edges with weight strictly above gamma; node set is unchanged."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    return WeightedGraph(
        nodes=graph.nodes,
        edges={k: w for k, w in graph.edges.items() if w > gamma},
    )


def graph_stats(graph: WeightedGraph) -> dict:
    return {
        "node_count": graph.node_count,
        "edge_count": graph.edge_count,
        "total_weight": graph.total_weight,
    }


def write_graph(graph: WeightedGraph, out_dir, provenance: list[str] | None = None) -> None:
    """Write edges.tsv (sorted, 9 significant digits) and nodes.txt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w", encoding="utf-8") as fh:
        fh.write(EDGE_HEADER + "\n")
        for line in provenance or []:
            fh.write(f"# {line}\n")
        for (i, j), w in sorted(graph.edges.items()):
            fh.write(f"{i}\t{j}\t{w:.9g}\n")
    with open(out / "nodes.txt", "w", encoding="utf-8") as fh:
        for n in sorted(graph.nodes):
            fh.write(n + "\n")


def read_graph(in_dir) -> WeightedGraph:
    src = Path(in_dir)
    edges: dict[tuple[str, str], float] = {}
    with open(src / "edges.tsv", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != EDGE_HEADER:
            raise ValueError(f"unexpected edge file header: {header!r}")
        for line in fh:
            if line.startswith("#"):
                continue
            i, j, w = line.rstrip("\n").split("\t")
            edges[(i, j)] = float(w)
    with open(src / "nodes.txt", encoding="utf-8") as fh:
        nodes = frozenset(line.strip() for line in fh if line.strip())
    g = WeightedGraph(nodes=nodes, edges=edges)
    g.validate()
    return g
