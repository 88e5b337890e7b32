import itertools

import numpy as np
import pytest

from pushsum import digraph
from pushsum.digraph import DirectedGraph
from pushsum.errors import CapabilityError, DimensionError


def path_exists(g: DirectedGraph, src: int, dst: int) -> bool:
    """Oracle: BFS path search, independent of the SCC implementation."""
    seen = {src}
    frontier = [src]
    while frontier:
        v = frontier.pop()
        if v == dst:
            return True
        for (a, b) in g.edges:
            if a == v and b not in seen:
                seen.add(b)
                frontier.append(b)
    return False


def sc_oracle(g: DirectedGraph) -> bool:
    return all(
        path_exists(g, i, j) for i in range(g.n) for j in range(g.n) if i != j
    )


def loops(n):
    return {(v, v) for v in range(n)}


def test_from_positive_pattern_identity():
    g = digraph.from_positive_pattern(np.eye(3))
    assert g.edges == frozenset(loops(3))


def test_from_positive_pattern_all_ones():
    g = digraph.from_positive_pattern(np.ones((2, 2)))
    assert len(g.edges) == 4


def test_from_positive_pattern_hand_enumerated():
    # edge (j, i) iff M[i, j] > 0; positive entries of M are (0,0), (1,0), (1,1)
    m = np.array([[0.5, 0.0], [0.5, 1.0]])
    g = digraph.from_positive_pattern(m)
    assert g.edges == frozenset({(0, 0), (0, 1), (1, 1)})


def test_from_positive_pattern_respects_tol():
    m = np.array([[1.0, 1e-15], [0.0, 1.0]])
    assert len(digraph.from_positive_pattern(m, tol=1e-12).edges) == 2
    assert len(digraph.from_positive_pattern(m, tol=0.0).edges) == 3


def test_from_positive_pattern_rejects_nonsquare():
    with pytest.raises(DimensionError):
        digraph.from_positive_pattern(np.ones((2, 3)))


def test_strongly_connected_cycle():
    assert digraph.is_strongly_connected(digraph.cycle_graph(3))


def test_not_strongly_connected_self_loops_only():
    g = DirectedGraph(2, frozenset(loops(2)))
    assert not digraph.is_strongly_connected(g)


def test_not_strongly_connected_chain():
    # no path from node 2 back to node 0, confirmed by the path oracle
    g = DirectedGraph(3, frozenset(loops(3) | {(0, 1), (1, 2)}))
    assert not path_exists(g, 2, 0)
    assert not digraph.is_strongly_connected(g)


def test_single_node_strongly_connected():
    assert digraph.is_strongly_connected(DirectedGraph(1, frozenset({(0, 0)})))
    assert digraph.is_strongly_connected(DirectedGraph(1, frozenset()))


def test_scc_agrees_with_path_oracle_randomized():
    rng = np.random.default_rng(7)
    for _ in range(300):
        n = int(rng.integers(1, 7))
        edges = {
            (i, j)
            for i in range(n)
            for j in range(n)
            if rng.random() < 0.3
        }
        g = DirectedGraph(n, frozenset(edges))
        assert digraph.is_strongly_connected(g) == sc_oracle(g)
        assert digraph.is_strongly_connected_bruteforce(g) == sc_oracle(g)


def test_scc_decomposition_partitions_nodes():
    g = DirectedGraph(4, frozenset(loops(4) | {(0, 1), (1, 0), (2, 3)}))
    comps = digraph.strongly_connected_components(g)
    assert sorted(sorted(c) for c in comps) == [[0, 1], [2], [3]]


def test_union_idempotent():
    g = digraph.cycle_graph(4)
    assert digraph.union([g, g]).edges == g.edges


def test_union_two_directions_complete():
    a = DirectedGraph(2, frozenset(loops(2) | {(0, 1)}))
    b = DirectedGraph(2, frozenset(loops(2) | {(1, 0)}))
    assert digraph.union([a, b]).edges == digraph.complete_graph(2).edges


def test_union_hand_computed():
    gs = [
        DirectedGraph(4, frozenset(loops(4) | {(0, 1)})),
        DirectedGraph(4, frozenset(loops(4) | {(1, 2)})),
        DirectedGraph(4, frozenset(loops(4) | {(2, 3)})),
    ]
    u = digraph.union(gs)
    assert u.edges == frozenset(loops(4) | {(0, 1), (1, 2), (2, 3)})


def test_union_commutative_associative_randomized():
    rng = np.random.default_rng(11)
    for _ in range(50):
        gs = [
            digraph.random_strongly_connected_graph(4, rng, extra_edge_prob=0.2)
            for _ in range(3)
        ]
        for perm in itertools.permutations(gs):
            assert digraph.union(list(perm)).edges == digraph.union(gs).edges
        nested = digraph.union([digraph.union(gs[:2]), gs[2]])
        assert nested.edges == digraph.union(gs).edges


def test_union_rejects_mismatched_n():
    with pytest.raises(DimensionError):
        digraph.union([digraph.cycle_graph(2), digraph.cycle_graph(3)])

    with pytest.raises(DimensionError):
        digraph.union([])


def test_out_degrees():
    assert digraph.out_degrees(DirectedGraph(3, frozenset(loops(3)))).tolist() == [1, 1, 1]
    assert digraph.out_degrees(digraph.complete_graph(2)).tolist() == [2, 2]
    g = DirectedGraph(2, frozenset(loops(2) | {(0, 1)}))
    assert digraph.out_degrees(g).tolist() == [2, 1]


def test_random_strongly_connected_graph_properties():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        g = digraph.random_strongly_connected_graph(n, rng)
        assert g.has_all_self_loops
        assert digraph.is_strongly_connected(g)
        assert (digraph.out_degrees(g) >= 1).all()


def test_bruteforce_guard():
    g = DirectedGraph(21, frozenset((v, v) for v in range(21)))
    with pytest.raises(CapabilityError):
        digraph.is_strongly_connected_bruteforce(g)


def test_edge_out_of_range_rejected():
    with pytest.raises(DimensionError):
        DirectedGraph(2, frozenset({(0, 2)}))
