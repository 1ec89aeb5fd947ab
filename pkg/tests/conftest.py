import sys
from datetime import date
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from colograph.graph import WeightedGraph
from colograph.ingest import EpochedEvents, WindowSpec


@pytest.fixture
def two_triangle() -> WeightedGraph:
    """Two unit-weight triangles joined by one bridge edge; Q* = 5/14."""
    edges = {
        ("a", "b"): 1.0,
        ("a", "c"): 1.0,
        ("b", "c"): 1.0,
        ("d", "e"): 1.0,
        ("d", "f"): 1.0,
        ("e", "f"): 1.0,
        ("c", "d"): 1.0,
    }
    return WeightedGraph(nodes=frozenset("abcdef"), edges=edges)


@pytest.fixture
def hand_trace_events() -> EpochedEvents:
    """Epoch 1: {A,B,C} on one IP; epoch 2: {A,B} on the same IP."""
    entries = frozenset(
        {
            (0, "10.0.0.1", "A"),
            (0, "10.0.0.1", "B"),
            (0, "10.0.0.1", "C"),
            (1, "10.0.0.1", "A"),
            (1, "10.0.0.1", "B"),
        }
    )
    return EpochedEvents(window=WindowSpec(date(2020, 4, 1)), entries=entries)
