from functools import reduce

import numpy as np
import pytest

from pushsum import digraph, stochmat
from pushsum.digraph import DirectedGraph
from pushsum.errors import (
    CapabilityError,
    DimensionError,
    DomainError,
    ProtocolError,
    RangeError,
)
from pushsum.stochmat import COLUMN, ROW, StochasticMatrix


def brute_product(mats, s, t):
    """Oracle: fold the product A(t) ... A(s) with plain numpy."""
    return reduce(lambda acc, a: a @ acc, [m.entries for m in mats[s : t + 1]])


def loops(n):
    return {(v, v) for v in range(n)}


def cycle_weight(n):
    return stochmat.weight_from_graph(digraph.cycle_graph(n))


def test_weight_complete_graph_n2():
    w = stochmat.weight_from_graph(digraph.complete_graph(2))
    assert np.array_equal(w.entries, np.full((2, 2), 0.5))


def test_weight_self_loops_only_identity():
    g = DirectedGraph(3, frozenset(loops(3)))
    w = stochmat.weight_from_graph(g)
    assert np.array_equal(w.entries, np.eye(3))


def test_weight_cycle_hand_applied():
    # out-degree 2 everywhere: half stays, half moves to the successor
    w = cycle_weight(3).entries
    expected = np.array([[0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
    assert np.array_equal(w, expected)


def test_weight_requires_self_loops():
    g = DirectedGraph(2, frozenset({(0, 0), (0, 1)}))
    with pytest.raises(ProtocolError):
        stochmat.weight_from_graph(g)


def test_weight_columns_sum_exactly_and_diag_positive():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        g = digraph.random_strongly_connected_graph(n, rng)
        w = stochmat.weight_from_graph(g)
        assert np.abs(w.entries.sum(axis=0) - 1.0).max() <= 1e-12
        assert w.entries.diagonal().min() > 0
        positives = w.entries[w.entries > 0]
        assert positives.min() >= 1.0 / n


def test_product_range_single_matrix():
    w = cycle_weight(3)
    p = stochmat.product_range([w], 0, 0)
    assert np.array_equal(p.entries, w.entries)


def test_product_range_identity_sequence():
    ident = StochasticMatrix(np.eye(4), COLUMN)
    p = stochmat.product_range([ident] * 5, 0, 4)
    assert np.array_equal(p.entries, np.eye(4))


def test_product_range_idempotent_complete_graph():
    w = stochmat.weight_from_graph(digraph.complete_graph(2))
    p = stochmat.product_range([w, w, w], 0, 2)
    assert np.array_equal(p.entries, np.full((2, 2), 0.5))


def test_product_range_matches_brute_fold():
    rng = np.random.default_rng(9)
    mats = [
        stochmat.weight_from_graph(digraph.random_strongly_connected_graph(4, rng))
        for _ in range(8)
    ]
    for (s, t) in [(0, 7), (2, 5), (3, 3)]:
        assert np.allclose(
            stochmat.product_range(mats, s, t).entries,
            brute_product(mats, s, t),
            atol=0,
            rtol=0,
        )


def test_product_range_rejects_bad_range():
    w = cycle_weight(2)
    with pytest.raises(RangeError):
        stochmat.product_range([w, w], 1, 0)
    with pytest.raises(RangeError):
        stochmat.product_range([w, w], 0, 5)


def test_product_range_preserves_column_sums_long_horizon():
    # drift stays within 1e-12 even after 1e4 factors
    rng = np.random.default_rng(13)
    mats = [
        stochmat.weight_from_graph(digraph.random_strongly_connected_graph(5, rng))
        for _ in range(200)
    ]
    acc = mats[0].entries
    worst = 0.0
    for t in range(1, 10_000):
        acc = mats[t % 200].entries @ acc
        worst = max(worst, float(np.abs(acc.sum(axis=0) - 1.0).max()))
    assert worst <= 1e-12
    StochasticMatrix(acc, COLUMN)  # constructible within tolerance


def test_cut_flow_identity_zero():
    ident = StochasticMatrix(np.eye(3), COLUMN)
    for subset in ([0], [1], [0, 2]):
        assert stochmat.cut_flow(ident, subset) == 0.0


def test_cut_flow_half_matrix():
    m = StochasticMatrix(np.full((2, 2), 0.5), COLUMN)
    assert stochmat.cut_flow(m, [0]) == 0.5


def test_cut_flow_cycle_hand_summed():
    w = cycle_weight(3)
    # cross entries from {0,1} rows to column 2: W[0,2] + W[1,2] = 0.5 + 0
    assert stochmat.cut_flow(w, [0, 1]) == 0.5


def test_cut_flow_rejects_trivial_subset():
    w = cycle_weight(3)
    with pytest.raises(DomainError):
        stochmat.cut_flow(w, [])
    with pytest.raises(DomainError):
        stochmat.cut_flow(w, [0, 1, 2])


def test_max_min_column_gap():
    rank_one = np.outer(np.ones(3), [0.2, 0.3, 0.5])
    assert np.array_equal(
        stochmat.max_min_column_gap(StochasticMatrix(rank_one, ROW)),
        np.zeros(3),
    )
    assert np.array_equal(
        stochmat.max_min_column_gap(np.eye(2)), np.array([1.0, 1.0])
    )
    m = np.array([[0.75, 0.25], [0.5, 0.5]])
    assert np.allclose(stochmat.max_min_column_gap(m), [0.25, 0.25])


def test_is_positive():
    assert stochmat.is_positive(np.full((3, 3), 1 / 3))
    assert not stochmat.is_positive(np.eye(2))
    assert not stochmat.is_positive(np.full((2, 2), 0.5), tol=0.5)


def test_check_entry_bounds_complete_graph():
    w = stochmat.weight_from_graph(digraph.complete_graph(2))
    report = stochmat.check_entry_bounds([w, w, w], 0, 2, gamma=0.5)
    assert report.ok
    assert report.threshold == 0.125


def test_check_entry_bounds_identity():
    ident = StochasticMatrix(np.eye(3), COLUMN)
    report = stochmat.check_entry_bounds([ident] * 4, 0, 3, gamma=1.0)
    assert report.ok


def test_check_entry_bounds_randomized():
    # 200 random windowed sequences, gamma = 1/n, validated against the
    # brute-fold product
    rng = np.random.default_rng(17)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        length = int(rng.integers(1, 6))
        mats = [
            stochmat.weight_from_graph(
                digraph.random_strongly_connected_graph(n, rng)
            )
            for _ in range(length)
        ]
        report = stochmat.check_entry_bounds(mats, 0, length - 1, gamma=1.0 / n)
        assert report.ok, report.violations
        prod = brute_product(mats, 0, length - 1)
        thresh = (1.0 / n) ** length
        assert prod.diagonal().min() >= thresh


def test_check_entry_bounds_gamma_precondition():
    w = cycle_weight(3)  # positive entries are 1/2
    with pytest.raises(DomainError):
        stochmat.check_entry_bounds([w], 0, 0, gamma=0.75)


def test_check_entry_bounds_underflow_cap():
    w = stochmat.weight_from_graph(digraph.complete_graph(2))
    with pytest.raises(CapabilityError):
        stochmat.check_entry_bounds([w] * 10, 0, 9, gamma=1e-200)


def test_positive_product_of_irreducibles():
    # product of n-1 irreducible weight matrices is strictly positive with
    # entries >= n**-(n-1)
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        mats = [
            stochmat.weight_from_graph(
                digraph.random_strongly_connected_graph(n, rng)
            )
            for _ in range(max(1, n - 1))
        ]
        prod = brute_product(mats, 0, len(mats) - 1)
        assert stochmat.is_positive(prod)
        assert prod.min() >= float(n) ** (-(n - 1)) - 1e-12


def test_stochastic_matrix_validation():
    with pytest.raises(DomainError):
        StochasticMatrix(np.array([[0.5, 0.5], [0.7, 0.5]]), COLUMN)
    with pytest.raises(DomainError):
        StochasticMatrix(np.array([[1.5, -0.5], [-0.5, 1.5]]), COLUMN)
    with pytest.raises(DimensionError):
        StochasticMatrix(np.ones((2, 3)) / 3, ROW)
    # row orientation sums across rows
    StochasticMatrix(np.array([[0.2, 0.8], [0.9, 0.1]]), ROW)


def test_stochastic_matrix_entries_frozen():
    w = cycle_weight(3)
    with pytest.raises(ValueError):
        w.entries[0, 0] = 0.9


def test_transpose_flips_orientation():
    w = cycle_weight(3)
    wt = w.transpose()
    assert wt.orientation == ROW
    assert np.array_equal(wt.entries, w.entries.T)
