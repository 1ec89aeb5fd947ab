"""Louvain community detection with deterministic, seeded sweep order.

The first-level partition is the default granularity; the full hierarchy is
available as a coarsening sequence of partitions of the original node set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graph import WeightedGraph

PARTITION_HEADER = "#colograph-partition v1"

# smallest modularity-gain improvement worth a move; avoids fp livelock
MIN_GAIN = 1e-12


@dataclass(frozen=True)
class Partition:
    """Total assignment of nodes to dense community ids 0..community_count-1."""

    assignment: dict[str, int]
    community_count: int

    def validate(self, graph: WeightedGraph | None = None) -> None:
        if graph is not None and set(self.assignment) != set(graph.nodes):
            raise ValueError("partition does not cover exactly the graph's nodes")
        seen = set(self.assignment.values())
        if seen != set(range(self.community_count)):
            raise ValueError("community ids must be contiguous and non-empty")

    def members(self) -> dict[int, set[str]]:
        out: dict[int, set[str]] = {c: set() for c in range(self.community_count)}
        for node, cid in self.assignment.items():
            out[cid].add(node)
        return out

    @classmethod
    def from_assignment(cls, raw: dict[str, int]) -> "Partition":
        """Relabel arbitrary community labels densely, ordered by the smallest
        member node; deterministic for a given assignment."""
        groups: dict[int, str] = {}
        for node in sorted(raw):
            cid = raw[node]
            if cid not in groups:
                groups[cid] = node
        order = sorted(groups, key=lambda c: groups[c])
        relabel = {old: new for new, old in enumerate(order)}
        return cls(
            assignment={n: relabel[c] for n, c in raw.items()},
            community_count=len(order),
        )


class _LouvainState:
    """One aggregation level: adjacency over current super-nodes."""

    def __init__(
        self,
        adj: dict[int, dict[int, float]],
        self_w: dict[int, float],
    ):
        self.adj = adj
        self.self_w = self_w
        self.degree = {
            n: 2.0 * self_w[n] + sum(adj[n].values()) for n in adj
        }
        self.m2 = sum(self.degree.values())
        self.community = {n: n for n in adj}
        self.tot = dict(self.degree)

    def one_pass(self, rng: random.Random, resolution: float) -> bool:
        """Local-move sweeps until no move improves modularity.

        Returns True when at least one move was made."""
        if self.m2 <= 0:
            return False
        nodes = sorted(self.adj)
        moved_any = False
        while True:
            rng.shuffle(nodes)
            moved = False
            for node in nodes:
                current = self.community[node]
                k = self.degree[node]
                links: dict[int, float] = {}
                for nb, w in self.adj[node].items():
                    if nb != node:
                        links[self.community[nb]] = (
                            links.get(self.community[nb], 0.0) + w
                        )
                self.tot[current] -= k
                links.setdefault(current, 0.0)

                def gain(c: int) -> float:
                    return links[c] - resolution * self.tot[c] * k / self.m2

                # a move must beat staying by MIN_GAIN; among improving
                # candidates, sorted iteration with strict > keeps lowest id
                best, best_gain = current, gain(current) + MIN_GAIN
                for c in sorted(links):
                    if c == current:
                        continue
                    g = gain(c)
                    if g > best_gain:
                        best, best_gain = c, g
                self.tot[best] += k
                if best != current:
                    self.community[node] = best
                    moved = True
                    moved_any = True
            if not moved:
                break
        return moved_any

    def aggregate(self) -> "_LouvainState":
        """Collapse communities into super-nodes, keeping internal weight as
        self weight."""
        label = {}
        for n in sorted(self.adj):
            c = self.community[n]
            if c not in label:
                label[c] = len(label)
        new_adj: dict[int, dict[int, float]] = {i: {} for i in range(len(label))}
        new_self = {i: 0.0 for i in range(len(label))}
        for n, nbrs in self.adj.items():
            cn = label[self.community[n]]
            new_self[cn] += self.self_w[n]
            for nb, w in nbrs.items():
                cb = label[self.community[nb]]
                if cn == cb:
                    if n < nb:
                        new_self[cn] += w
                else:
                    new_adj[cn][cb] = new_adj[cn].get(cb, 0.0) + w
        state = _LouvainState(new_adj, new_self)
        state._label = label  # community id -> new node id
        return state


def _initial_state(graph: WeightedGraph) -> tuple[_LouvainState, list[str]]:
    nodes = sorted(graph.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    adj: dict[int, dict[int, float]] = {i: {} for i in range(len(nodes))}
    for (i, j), w in graph.edges.items():
        a, b = index[i], index[j]
        adj[a][b] = adj[a].get(b, 0.0) + w
        adj[b][a] = adj[b].get(a, 0.0) + w
    self_w = {i: 0.0 for i in range(len(nodes))}
    return _LouvainState(adj, self_w), nodes


def louvain_first_level(
    graph: WeightedGraph, seed: int = 0, resolution: float = 1.0
) -> Partition:
    """Partition after the first Louvain pass converges.

    Deterministic for a given (graph, seed, resolution); isolated nodes end
    up as singleton communities."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    state, nodes = _initial_state(graph)
    rng = random.Random(seed)
    state.one_pass(rng, resolution)
    raw = {nodes[n]: state.community[n] for n in range(len(nodes))}
    part = Partition.from_assignment(raw)
    part.validate(graph)
    return part


def louvain_hierarchy(
    graph: WeightedGraph, seed: int = 0, resolution: float = 1.0
) -> list[Partition]:
    """Coarsening sequence of partitions of the original node set, one per
    completed Louvain pass; modularity is non-decreasing along it."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    state, nodes = _initial_state(graph)
    rng = random.Random(seed)
    # node index -> current super-node
    where = {i: i for i in range(len(nodes))}
    partitions: list[Partition] = []
    while True:
        moved = state.one_pass(rng, resolution)
        raw = {nodes[i]: state.community[where[i]] for i in range(len(nodes))}
        if moved or not partitions:
            partitions.append(Partition.from_assignment(raw))
        if not moved:
            break
        new_state = state.aggregate()
        label = new_state._label
        where = {i: label[state.community[s]] for i, s in where.items()}
        state = new_state
    for p in partitions:
        p.validate(graph)
    return partitions


def write_partition(
    partition: Partition, path, provenance: list[str] | None = None
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(PARTITION_HEADER + "\n")
        for line in provenance or []:
            fh.write(f"# {line}\n")
        for node in sorted(partition.assignment):
            fh.write(f"{node}\t{partition.assignment[node]}\n")


def read_partition(path) -> Partition:
    assignment: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != PARTITION_HEADER:
            raise ValueError(f"unexpected partition header: {header!r}")
        for line in fh:
            if line.startswith("#"):
                continue
            node, cid = line.rstrip("\n").split("\t")
            assignment[node] = int(cid)
    part = Partition(assignment=assignment, community_count=len(set(assignment.values())))
    part.validate()
    return part
