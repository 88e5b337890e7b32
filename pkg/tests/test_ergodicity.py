import numpy as np
import pytest

from pushsum import digraph, ergodicity, randgen, stochmat
from pushsum.digraph import DirectedGraph
from pushsum.errors import CapabilityError, DomainError, RangeError
from pushsum.ergodicity import (
    KSequenceTracker,
    compute_k_sequence,
    infinite_flow_report,
    lambda_product,
    phi_deviation,
    phi_vector,
)
from pushsum.randgen import RandomStream
from pushsum.stochmat import COLUMN, ROW, StochasticMatrix


def loops(n):
    return {(v, v) for v in range(n)}


def complete_w(n):
    return stochmat.weight_from_graph(digraph.complete_graph(n))


def cycle_w(n):
    return stochmat.weight_from_graph(digraph.cycle_graph(n))


def k_sequence_oracle(patterns):
    """Oracle: direct evaluation of the renewal definition by re-unioning
    from scratch and testing every cut with path enumeration."""
    n = patterns[0].shape[0]
    ks = [0]
    start = 0
    while True:
        closed = None
        for t_prime in range(start + 1, len(patterns) + 1):
            union = np.zeros((n, n), dtype=bool)
            for r in range(start, t_prime):
                union |= patterns[r] > 0
            g = digraph.from_positive_pattern(union.astype(float))
            if digraph.is_strongly_connected_bruteforce(g):
                closed = t_prime
                break
        if closed is None:
            return ks, True
        ks.append(closed)
        start = closed
        if start >= len(patterns):
            return ks, False


def test_static_complete_graph_renewals_every_step():
    mats = [complete_w(2)] * 6
    tl = compute_k_sequence(mats)
    assert tl.k == [0, 1, 2, 3, 4, 5, 6]
    assert tl.l == [2, 2, 2]
    assert tl.lam == [0.75, 0.75, 0.75]
    assert not tl.truncated
    oracle_k, oracle_trunc = k_sequence_oracle([m.entries for m in mats])
    assert (tl.k, tl.truncated) == (oracle_k, oracle_trunc)


def test_static_cycle_every_step_window_is_n():
    mats = [cycle_w(4)] * 9
    tl = compute_k_sequence(mats)
    assert tl.k == list(range(10))
    assert tl.l == [4, 4]  # two complete groups of n=4 renewals


def test_alternating_single_direction():
    # t even: only 0 -> 1; t odd: only 1 -> 0. Each window needs both.
    fw = stochmat.weight_from_graph(DirectedGraph(2, frozenset(loops(2) | {(0, 1)})))
    bw = stochmat.weight_from_graph(DirectedGraph(2, frozenset(loops(2) | {(1, 0)})))
    mats = [fw if t % 2 == 0 else bw for t in range(8)]
    tl = compute_k_sequence(mats)
    assert tl.k == [0, 2, 4, 6, 8]
    assert tl.l == [4, 4]
    assert tl.lam == [1 - 2**-4, 1 - 2**-4]
    oracle_k, _ = k_sequence_oracle([m.entries for m in mats])
    assert tl.k == oracle_k


def test_self_loops_only_truncates():
    ident = StochasticMatrix(np.eye(3), COLUMN)
    tl = compute_k_sequence([ident] * 20)
    assert tl.k == [0]
    assert tl.truncated
    assert tl.l == [] and tl.lam == []
    assert tl.lambda_at(20) == 1.0


def test_minimality_of_renewals_randomized():
    rng = np.random.default_rng(41)
    ps = randgen.two_phase_cycle_family(3, 0.5)
    stream = RandomStream(17, 0)
    mats = [randgen.sample_weight_array(ps, t, stream) for t in range(120)]
    tl = compute_k_sequence(mats)
    assert len(tl.k) > 1
    for q in range(1, len(tl.k)):
        lo, hi = tl.k[q - 1], tl.k[q]
        union = np.zeros((3, 3), dtype=bool)
        for r in range(lo, hi):
            union |= mats[r] > 0
        assert digraph.is_strongly_connected(
            digraph.from_positive_pattern(union.astype(float))
        )
        if hi - lo >= 2:
            union_short = np.zeros((3, 3), dtype=bool)
            for r in range(lo, hi - 1):
                union_short |= mats[r] > 0
            assert not digraph.is_strongly_connected(
                digraph.from_positive_pattern(union_short.astype(float))
            )


def test_scc_equals_brute_cut_randomized():
    rng = np.random.default_rng(55)
    for _ in range(60):
        n = int(rng.integers(2, 7))
        horizon = int(rng.integers(5, 60))
        mats = []
        for _t in range(horizon):
            pattern = (rng.random((n, n)) < 0.25).astype(float)
            np.fill_diagonal(pattern, 1.0)
            mats.append(pattern / pattern.sum(axis=0))
        tl_scc = compute_k_sequence(mats, mode="scc")
        tl_cut = compute_k_sequence(mats, mode="brute-cut")
        assert tl_scc.k == tl_cut.k
        assert tl_scc.truncated == tl_cut.truncated
        assert tl_scc.l == tl_cut.l


def test_brute_cut_guard():
    with pytest.raises(CapabilityError):
        KSequenceTracker(21, mode="brute-cut")
    with pytest.raises(DomainError):
        KSequenceTracker(3, mode="nonsense")


def test_lambda_product_empty_index_set():
    tl = compute_k_sequence([complete_w(2)] * 3)
    assert lambda_product(tl, 0, 1) == 1.0  # first group closes at k_2 = 2
    assert lambda_product(tl, 0, 0) == 1.0


def test_lambda_product_static_complete_n2():
    tl = compute_k_sequence([complete_w(2)] * 6)
    assert lambda_product(tl, 0, 4) == pytest.approx(9 / 16)
    assert tl.lambda_at(4) == pytest.approx(9 / 16)
    assert tl.lambda_at(5) == pytest.approx(9 / 16)
    assert tl.lambda_at(6) == pytest.approx(27 / 64)


def test_lambda_product_static_cycle_n3():
    mats = [cycle_w(3)] * 12
    tl = compute_k_sequence(mats)
    assert tl.l == [3, 3, 3, 3]
    assert tl.lam == [pytest.approx(26 / 27)] * 4
    for t in range(13):
        assert tl.lambda_at(t) == pytest.approx((26 / 27) ** (t // 3))


def test_lambda_product_respects_start_time():
    tl = compute_k_sequence([complete_w(2)] * 8)
    # groups close at 2, 4, 6, 8 and open at 0, 2, 4, 6
    assert lambda_product(tl, 2, 6) == pytest.approx((3 / 4) ** 2)
    assert lambda_product(tl, 3, 6) == pytest.approx(3 / 4)
    with pytest.raises(RangeError):
        lambda_product(tl, 4, 2)


def test_lambda_at_many_matches_scalar():
    ps = randgen.bernoulli_family(3, 0.5)
    stream = RandomStream(3, 0)
    mats = [randgen.sample_weight_array(ps, t, stream) for t in range(100)]
    tl = compute_k_sequence(mats)
    ts = np.arange(101)
    vec = tl.lambda_at_many(ts)
    assert all(vec[t] == tl.lambda_at(int(t)) for t in ts)
    assert all(np.diff(vec) <= 0)


def test_phi_vector_rank_one_row_case():
    v = np.array([0.2, 0.3, 0.5])
    m = np.outer(np.ones(3), v)
    assert np.allclose(phi_vector(m, ROW), v)
    assert phi_deviation(m, ROW) == 0.0


def test_phi_vector_identity_row_case():
    assert np.array_equal(phi_vector(np.eye(2), ROW), np.zeros(2))
    assert phi_deviation(np.eye(2), ROW) == 1.0


def test_phi_vector_complete_graph_column_case():
    prod = stochmat.product_range([complete_w(2)] * 2, 0, 1)
    assert np.allclose(phi_vector(prod, COLUMN), [0.5, 0.5])
    assert phi_deviation(prod, COLUMN) == 0.0


def test_row_contraction_bounded_by_lambda():
    # transposed weight sequences are row-stochastic; every column's spread
    # of the running product stays below the accumulated contraction factor
    rng = np.random.default_rng(4)
    for n in (2, 3, 5):
        ps = randgen.bernoulli_family(n, 0.5)
        stream = RandomStream(1000 + n, 0)
        mats = [randgen.sample_weight_array(ps, t, stream) for t in range(200)]
        rows = [m.T for m in mats]
        tracker = KSequenceTracker(n)
        prod = np.eye(n)
        for t, a in enumerate(rows):
            prod = a @ prod
            tracker.ingest(a)
            tl = tracker.timeline()
            gap = float(stochmat.max_min_column_gap(prod).max())
            assert gap <= tl.lambda_at(t) + 1e-12


def test_column_contraction_bounded_by_lambda():
    for n in (2, 4):
        ps = randgen.two_phase_cycle_family(n, 0.5)
        stream = RandomStream(2000 + n, 0)
        mats = [randgen.sample_weight_array(ps, t, stream) for t in range(200)]
        tracker = KSequenceTracker(n)
        prod = np.eye(n)
        for t, w in enumerate(mats):
            prod = w @ prod
            tracker.ingest(w)
            tl = tracker.timeline()
            assert phi_deviation(prod, COLUMN) <= tl.lambda_at(t) + 1e-12


def test_group_window_products_are_positive_with_floor():
    # the product across each completed group of n renewals is entrywise
    # at least n**(-l)
    n = 3
    ps = randgen.bernoulli_family(n, 0.5)
    stream = RandomStream(12, 0)
    mats = [
        randgen.sample_weight_matrix(ps, t, stream) for t in range(150)
    ]
    tl = compute_k_sequence([m.entries for m in mats])
    assert tl.groups >= 2
    for g in range(tl.groups):
        lo, hi = tl.group_start[g], tl.group_close[g]
        prod = stochmat.product_range(mats, lo, hi - 1)
        floor = float(n) ** (-tl.l[g])
        assert prod.entries.min() >= floor - 1e-12


def test_infinite_flow_static_complete():
    report = infinite_flow_report([complete_w(2)] * 100)
    assert report.min_total == pytest.approx(50.0)
    assert report.slope == pytest.approx(0.5, abs=1e-9)


def test_infinite_flow_self_loops_only():
    ident = StochasticMatrix(np.eye(2), COLUMN)
    report = infinite_flow_report([ident] * 50)
    assert report.min_total == 0.0
    assert report.slope == 0.0


def test_infinite_flow_bernoulli_expectation():
    # each cut gains 1/2 with probability 1/2 per step: expectation 2500
    ps = randgen.bernoulli_family(2, 0.5)
    stream = RandomStream(9, 0)
    mats = [randgen.sample_weight_array(ps, t, stream) for t in range(10_000)]
    report = infinite_flow_report(mats)
    sigma = np.sqrt(10_000 / 16)  # per-step variance 1/16
    assert abs(report.min_total - 2500.0) <= 4 * sigma
    assert report.slope == pytest.approx(0.25, abs=0.02)


def test_infinite_flow_guard():
    big = [np.eye(21)]
    with pytest.raises(CapabilityError):
        infinite_flow_report(big)


def test_single_node_timeline():
    tl = compute_k_sequence([np.eye(1)] * 5)
    assert tl.k == [0, 1, 2, 3, 4, 5]
    assert tl.l == [1] * 5
    assert tl.lam == [0.0] * 5


def test_general_window_contraction():
    # the contraction statement holds for arbitrary windows [s, t], with
    # the group factors taken from the timeline of the full sequence
    ps = randgen.bernoulli_family(3, 0.5)
    stream = RandomStream(33, 0)
    mats = [randgen.sample_weight_array(ps, t, stream) for t in range(100)]
    rows = [StochasticMatrix(m.T, ROW) for m in mats]
    tl = compute_k_sequence([m.entries for m in rows])
    for (s, t) in [(0, 99), (10, 60), (25, 80), (40, 41), (7, 7)]:
        prod = stochmat.product_range(rows, s, t)
        gap = float(stochmat.max_min_column_gap(prod).max())
        assert gap <= lambda_product(tl, s, t) + 1e-12


def test_divergence_diagnostic():
    tl = compute_k_sequence([complete_w(2)] * 8)  # four groups of length 2
    total, rate = tl.divergence_diagnostic()
    assert total == pytest.approx(4 * 0.25)
    assert rate == pytest.approx(0.25)
    empty = compute_k_sequence([StochasticMatrix(np.eye(2), COLUMN)] * 4)
    assert empty.divergence_diagnostic() == (0.0, 0.0)
