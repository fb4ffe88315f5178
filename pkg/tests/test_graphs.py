import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pushsim.graphs import (
    Digraph,
    digraph,
    format_graph_sequence,
    generate_sequence,
    is_strongly_connected,
    parse_graph_sequence,
    uniform_connectivity_window,
    union_graph,
)


def test_digraph_requires_self_arcs():
    with pytest.raises(ValueError, match="self-arc"):
        Digraph(n=2, arcs=frozenset({(0, 0), (0, 1)}))
    g = digraph(2, [(0, 1)])
    assert (0, 0) in g.arcs and (1, 1) in g.arcs


def test_digraph_rejects_out_of_range_arcs():
    with pytest.raises(ValueError, match="out of range"):
        digraph(2, [(0, 2)])
    with pytest.raises(ValueError):
        Digraph(n=0, arcs=frozenset())


def test_neighborhoods():
    g = digraph(3, [(0, 1), (2, 1)])
    assert g.in_neighbors(1) == {0, 1, 2}
    assert g.out_neighbors(0) == {0, 1}
    assert g.out_degree(2) == 2
    a = g.adjacency()
    assert a[0, 1] and a[2, 1] and not a[1, 0]
    assert all(a[i, i] for i in range(3))


def test_strong_connectivity_examples():
    assert is_strongly_connected(digraph(1))
    assert not is_strongly_connected(digraph(2, [(0, 1)]))
    assert is_strongly_connected(digraph(2, [(0, 1), (1, 0)]))
    ring = digraph(5, [(j, (j + 1) % 5) for j in range(5)])
    assert is_strongly_connected(ring)


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(2, 6),
    data=st.data(),
)
def test_strong_connectivity_matches_networkx(n, data):
    import networkx as nx

    pairs = [(j, i) for j in range(n) for i in range(n) if i != j]
    chosen = data.draw(st.sets(st.sampled_from(pairs)))
    g = digraph(n, chosen)
    h = nx.DiGraph()
    h.add_nodes_from(range(n))
    h.add_edges_from(g.arcs)
    assert is_strongly_connected(g) == nx.is_strongly_connected(h)


def test_union_graph():
    a = digraph(3, [(0, 1)])
    b = digraph(3, [(1, 2)])
    u = union_graph([a, b])
    assert (0, 1) in u.arcs and (1, 2) in u.arcs
    with pytest.raises(ValueError):
        union_graph([])
    with pytest.raises(ValueError):
        union_graph([a, digraph(2)])


def test_generators_are_deterministic():
    s1 = generate_sequence("random-walkable", 4, 30, seed=9)
    s2 = generate_sequence("random-walkable", 4, 30, seed=9)
    assert s1 == s2
    assert s1 != generate_sequence("random-walkable", 4, 30, seed=10)


def test_generators_are_prefix_stable():
    short = generate_sequence("random-walkable", 5, 20, seed=3)
    long = generate_sequence("random-walkable", 5, 60, seed=3)
    assert long.graphs[:20] == short.graphs


def test_generator_rejects_bad_arguments():
    with pytest.raises(ValueError, match="unknown generator"):
        generate_sequence("nope", 3, 10)
    with pytest.raises(ValueError):
        generate_sequence("static-cycle", 0, 10)
    with pytest.raises(ValueError):
        generate_sequence("static-cycle", 3, 0)
    with pytest.raises(ValueError):
        generate_sequence("random-walkable", 3, 10, arc_prob=1.5)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_rotating_arc_window_is_n(n):
    seq = generate_sequence("rotating-arc", n, 4 * n, seed=0)
    assert uniform_connectivity_window(seq) == n


def test_static_cycle_window_is_one():
    seq = generate_sequence("static-cycle", 4, 12)
    assert uniform_connectivity_window(seq) == 1


def test_self_arcs_only_has_no_window():
    g = digraph(3)
    seq_graphs = tuple(g for _ in range(10))
    from pushsim.graphs import GraphSequence

    seq = GraphSequence(n=3, horizon=10, kind="custom", seed=0, graphs=seq_graphs)
    assert uniform_connectivity_window(seq) is None


def test_random_walkable_window_at_most_injection_period():
    for n in (2, 4, 6):
        seq = generate_sequence("random-walkable", n, 40, seed=1)
        w = uniform_connectivity_window(seq)
        assert w is not None and w <= 5


def test_text_round_trip():
    seq = generate_sequence("random-walkable", 4, 15, seed=5)
    text = format_graph_sequence(seq)
    back = parse_graph_sequence(text)
    assert back.n == seq.n and back.horizon == seq.horizon
    assert back.graphs == seq.graphs
    # canonical text is reproduced exactly on a second round
    assert format_graph_sequence(back) == text


def test_text_format_is_one_indexed_without_self_arcs():
    seq = generate_sequence("rotating-arc", 3, 2, seed=0)
    text = format_graph_sequence(seq)
    lines = text.splitlines()
    assert lines[0] == "3 2"
    assert lines[1] == "0: 1>2"
    assert lines[2] == "1: 2>3"


@pytest.mark.parametrize(
    "text, msg",
    [
        ("", "empty"),
        ("3\n0:", "header"),
        ("2 2\n0: 1>2", "step lines"),
        ("2 1\n1: 1>2", "out of order"),
        ("2 1\n0: 1-2", "arc token"),
        ("2 1\n0: 1>3", "out of range"),
    ],
)
def test_parse_rejects_malformed_text(text, msg):
    with pytest.raises(ValueError, match=msg):
        parse_graph_sequence(text)


def test_parse_tolerates_explicit_self_arcs():
    seq = parse_graph_sequence("2 1\n0: 1>1 1>2\n")
    assert seq.graphs[0].arcs == frozenset({(0, 0), (1, 1), (0, 1)})
