"""Modularity and cross-community edge ratio, per graph and over timelines.

Q = sum_s (l_s / L - (d_s / 2L)^2) over communities s, where l_s is the
intra-community edge mass, d_s the total degree of the community's nodes,
and L the total edge mass.  R is the fraction of edge mass whose endpoints
lie in different communities.  Weighted mode uses edge weights; unweighted
counts each edge as 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .community import Partition
from .graph import WeightedGraph
from .ingest import WindowSpec

MODES = ("weighted", "unweighted")


class MetricError(Exception):
    pass


class UndefinedMetricError(MetricError):
    """The metric has no value (no edge mass to normalize by)."""


class InvalidPartitionError(MetricError):
    """The partition does not cover exactly the graph's nodes."""


@dataclass(frozen=True)
class GraphMetrics:
    q: float
    r: float
    l_total: float
    per_community: list[tuple[int, float, float]]  # (community_id, l_s, d_s)


def _check(graph: WeightedGraph, partition: Partition, mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if set(partition.assignment) != set(graph.nodes):
        raise InvalidPartitionError("partition must cover exactly the graph's nodes")


def compute_metrics(
    graph: WeightedGraph, partition: Partition, mode: str = "weighted"
) -> GraphMetrics:
    _check(graph, partition, mode)
    l_total = 0.0
    intra = [0.0] * partition.community_count
    degree = [0.0] * partition.community_count
    assign = partition.assignment
    for (i, j), w in graph.edges.items():
        mass = w if mode == "weighted" else 1.0
        l_total += mass
        ci, cj = assign[i], assign[j]
        if ci == cj:
            # one doubled add keeps degree bit-identical to 2*l_total when
            # everything is intra, so the one-community Q is exactly 0
            degree[ci] += 2.0 * mass
            intra[ci] += mass
        else:
            degree[ci] += mass
            degree[cj] += mass
    if l_total <= 0:
        raise UndefinedMetricError("graph has no edge mass; Q and R are undefined")
    q = sum(
        intra[c] / l_total - (degree[c] / (2.0 * l_total)) ** 2
        for c in range(partition.community_count)
    )
    r = (l_total - sum(intra)) / l_total
    per_community = [
        (c, intra[c], degree[c]) for c in range(partition.community_count)
    ]
    return GraphMetrics(q=q, r=r, l_total=l_total, per_community=per_community)


def modularity(
    graph: WeightedGraph, partition: Partition, mode: str = "weighted"
) -> float:
    return compute_metrics(graph, partition, mode).q


def cross_ratio(
    graph: WeightedGraph, partition: Partition, mode: str = "weighted"
) -> float:
    return compute_metrics(graph, partition, mode).r


@dataclass(frozen=True)
class TimelineRow:
    center_date: date
    q: float | None
    r: float | None
    node_count: int
    edge_count: int


def metric_timeline(
    windows: list[tuple[WindowSpec, WeightedGraph, Partition]],
    mode: str = "weighted",
) -> list[TimelineRow]:
    """One row per window; edgeless windows yield explicit null rows."""
    if not windows:
        raise ValueError("windows must be non-empty")
    centers = [w.center_date for w, _, _ in windows]
    if any(a >= b for a, b in zip(centers, centers[1:])):
        raise ValueError("window center dates must be strictly increasing")
    rows: list[TimelineRow] = []
    for spec, graph, partition in windows:
        try:
            m = compute_metrics(graph, partition, mode)
            q, r = m.q, m.r
        except UndefinedMetricError:
            q, r = None, None
        except MetricError as exc:
            raise type(exc)(f"window {spec.center_date}: {exc}") from exc
        rows.append(
            TimelineRow(
                center_date=spec.center_date,
                q=q,
                r=r,
                node_count=graph.node_count,
                edge_count=graph.edge_count,
            )
        )
    return rows


def write_timeline(rows: list[TimelineRow], path, provenance: list[str] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in provenance or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["center_date", "q", "r", "node_count", "edge_count"])
        for row in rows:
            writer.writerow(
                [
                    row.center_date.isoformat(),
                    "" if row.q is None else f"{row.q:.9g}",
                    "" if row.r is None else f"{row.r:.9g}",
                    row.node_count,
                    row.edge_count,
                ]
            )


def read_timeline(path) -> list[TimelineRow]:
    rows: list[TimelineRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        data = [ln for ln in fh if not ln.startswith("#")]
    for rec in csv.DictReader(data):
        rows.append(
            TimelineRow(
                center_date=date.fromisoformat(rec["center_date"]),
                q=float(rec["q"]) if rec["q"] else None,
                r=float(rec["r"]) if rec["r"] else None,
                node_count=int(rec["node_count"]),
                edge_count=int(rec["edge_count"]),
            )
        )
    return rows
