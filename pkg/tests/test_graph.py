import math
import random
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colograph.graph import (
    BuildParams,
    WeightedGraph,
    apply_cutoff,
    build_graph,
    graph_stats,
    read_graph,
    write_graph,
)
from colograph.ingest import EpochedEvents, WindowSpec

from reference import naive_build, random_instance

WINDOW = WindowSpec(date(2020, 4, 1))


def epoched(entries) -> EpochedEvents:
    return EpochedEvents(window=WINDOW, entries=frozenset(entries))


class TestBuildGraph:
    def test_hand_trace(self, hand_trace_events):
        g = build_graph(hand_trace_events, BuildParams(n_max=10, gamma=0.0))
        assert g.edges[("A", "B")] == pytest.approx(5 / 6, abs=1e-15)
        assert g.edges[("A", "C")] == pytest.approx(1 / 3, abs=1e-15)
        assert g.edges[("B", "C")] == pytest.approx(1 / 3, abs=1e-15)

    def test_hand_trace_with_cutoff(self, hand_trace_events):
        g = build_graph(hand_trace_events, BuildParams(n_max=10, gamma=0.5))
        assert set(g.edges) == {("A", "B")}
        assert g.nodes == {"A", "B", "C"}

    def test_high_volume_ip_skipped_but_nodes_kept(self):
        devices = [f"d{i}" for i in range(6)]
        g = build_graph(
            epoched({(0, "10.0.0.1", d) for d in devices}),
            BuildParams(n_max=5, gamma=0.0),
        )
        assert g.edges == {}
        assert g.nodes == set(devices)

    def test_empty_events(self):
        g = build_graph(epoched(set()), BuildParams())
        assert g.nodes == frozenset() and g.edges == {}

    def test_spill_path_matches_in_memory(self, tmp_path):
        rng = random.Random(5)
        entries = random_instance(rng, max_events=80)
        params = BuildParams(n_max=6, gamma=0.0)
        full = build_graph(epoched(entries), params)
        spilled = build_graph(
            epoched(entries), params, max_pairs_in_memory=2, tmp_dir=str(tmp_path)
        )
        assert spilled.nodes == full.nodes
        assert set(spilled.edges) == set(full.edges)
        for k in full.edges:
            assert spilled.edges[k] == pytest.approx(full.edges[k], abs=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    def test_oracle_equivalence(self, seed):
        rng = random.Random(seed)
        entries = random_instance(rng)
        n_max = rng.choice([2, 3, 5, 10])
        gamma = rng.choice([0.0, 0.3, 0.8])
        g = build_graph(epoched(entries), BuildParams(n_max=n_max, gamma=gamma))
        nodes, edges = naive_build(entries, n_max, gamma)
        assert g.nodes == nodes
        assert set(g.edges) == set(edges)
        for k, w in edges.items():
            assert g.edges[k] == pytest.approx(w, abs=1e-12)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            BuildParams(n_max=1)
        with pytest.raises(ValueError):
            BuildParams(gamma=-0.1)


class TestCutoff:
    def test_zero_gamma_is_identity(self, two_triangle):
        assert apply_cutoff(two_triangle, 0.0).edges == two_triangle.edges

    def test_large_gamma_empties_edges(self, two_triangle):
        g = apply_cutoff(two_triangle, 99.0)
        assert g.edges == {} and g.nodes == two_triangle.nodes

    def test_cutoff_is_strict(self):
        g = WeightedGraph(
            nodes=frozenset("abcd"),
            edges={("a", "b"): 0.3, ("b", "c"): 0.8, ("c", "d"): 0.8},
        )
        assert apply_cutoff(g, 0.8).edges == {}
        assert set(apply_cutoff(g, 0.3).edges) == {("b", "c"), ("c", "d")}

    def test_cutoff_commutes_with_build(self, hand_trace_events):
        direct = build_graph(hand_trace_events, BuildParams(n_max=10, gamma=0.5))
        two_step = apply_cutoff(
            build_graph(hand_trace_events, BuildParams(n_max=10, gamma=0.0)), 0.5
        )
        assert direct.nodes == two_step.nodes and direct.edges == two_step.edges


class TestGraphStats:
    def test_empty(self):
        g = WeightedGraph(nodes=frozenset(), edges={})
        assert graph_stats(g) == {"node_count": 0, "edge_count": 0, "total_weight": 0.0}

    def test_two_triangle(self, two_triangle):
        assert graph_stats(two_triangle) == {
            "node_count": 6,
            "edge_count": 7,
            "total_weight": 7.0,
        }


entry_strategy = st.tuples(
    st.integers(min_value=0, max_value=5),
    st.sampled_from(["10.0.0.1", "10.0.0.2", "10.0.0.3"]),
    st.sampled_from([f"d{i}" for i in range(8)]),
)


@given(st.sets(entry_strategy, max_size=60), st.integers(0, 2**32))
@settings(max_examples=50, deadline=None)
def test_gamma_monotonicity(entries, seed):
    rng = random.Random(seed)
    g1, g2 = sorted([rng.uniform(0, 1.5), rng.uniform(0, 1.5)])
    low = build_graph(epoched(entries), BuildParams(n_max=5, gamma=g1))
    high = build_graph(epoched(entries), BuildParams(n_max=5, gamma=g2))
    assert set(high.edges) <= set(low.edges)
    assert high.nodes == low.nodes


@given(st.sets(entry_strategy, max_size=60))
@settings(max_examples=50, deadline=None)
def test_epoch_relabeling_invariance(entries):
    # permuting epoch indices must not change the graph
    perm = {t: 5 - t for t in range(6)}
    relabeled = {(perm[t], ip, d) for t, ip, d in entries}
    params = BuildParams(n_max=5, gamma=0.0)
    a = build_graph(epoched(entries), params)
    b = build_graph(epoched(relabeled), params)
    assert a.nodes == b.nodes
    assert set(a.edges) == set(b.edges)
    for k in a.edges:
        assert a.edges[k] == pytest.approx(b.edges[k], abs=1e-12)


@given(st.sets(entry_strategy, max_size=60))
@settings(max_examples=50, deadline=None)
def test_additivity_over_disjoint_epoch_ranges(entries):
    first = {e for e in entries if e[0] < 3}
    second = entries - first
    params = BuildParams(n_max=5, gamma=0.0)
    combined = build_graph(epoched(entries), params)
    wa = build_graph(epoched(first), params).edges
    wb = build_graph(epoched(second), params).edges
    summed = dict(wa)
    for k, w in wb.items():
        summed[k] = summed.get(k, 0.0) + w
    assert set(summed) == set(combined.edges)
    for k in summed:
        assert summed[k] == pytest.approx(combined.edges[k], abs=1e-12)


def test_single_group_weight_bound():
    # each (epoch, IP) group of N devices contributes exactly 1/N per pair
    for n in range(2, 8):
        entries = {(0, "10.0.0.1", f"d{i}") for i in range(n)}
        g = build_graph(epoched(entries), BuildParams(n_max=10, gamma=0.0))
        assert all(w == pytest.approx(1 / n, abs=1e-15) for w in g.edges.values())
        assert len(g.edges) == n * (n - 1) // 2


class TestGraphIO:
    def test_round_trip(self, two_triangle, tmp_path):
        write_graph(two_triangle, tmp_path)
        back = read_graph(tmp_path)
        assert back.nodes == two_triangle.nodes
        assert back.edges == two_triangle.edges

    def test_isolated_nodes_survive_round_trip(self, tmp_path):
        g = WeightedGraph(nodes=frozenset({"a", "b", "lonely"}), edges={("a", "b"): 1.5})
        write_graph(g, tmp_path)
        assert read_graph(tmp_path).nodes == g.nodes

    def test_edge_file_format(self, two_triangle, tmp_path):
        write_graph(two_triangle, tmp_path)
        lines = (tmp_path / "edges.tsv").read_text().splitlines()
        assert lines[0] == "#colograph-edges v1"
        body = [ln for ln in lines[1:] if not ln.startswith("#")]
        assert body == sorted(body)
        for ln in body:
            i, j, _ = ln.split("\t")
            assert i < j

    def test_header_mismatch_rejected(self, tmp_path):
        (tmp_path / "edges.tsv").write_text("#wrong\n")
        (tmp_path / "nodes.txt").write_text("")
        with pytest.raises(ValueError, match="header"):
            read_graph(tmp_path)
