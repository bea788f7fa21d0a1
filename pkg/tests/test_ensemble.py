import itertools
from collections import Counter

import numpy as np
import pytest

from qgraph_switch import fixtures, metric
from qgraph_switch.ensemble import (
    LengthArrangement,
    SpectrumCache,
    shift_vs_distance,
    swap_distance,
    unfold,
    unfold_and_spacings,
    visit_uniformity,
    walk,
)
from qgraph_switch.graph import PreconditionError, canonical
from qgraph_switch.shift import interlacing_degree
from qgraph_switch.transform import edge_swap

CYCLE4 = fixtures.cycle([1.0, 1.0, 1.0, 1.0])
LENGTHS4 = [1.0, 1.3, 1.7, 2.2]


def test_swap_distance_examples():
    assert swap_distance([0, 1, 2, 3], [0, 1, 2, 3]) == 0
    assert swap_distance([0, 1, 2, 3], [1, 0, 2, 3]) == 1
    assert swap_distance([0, 1, 2, 3], [1, 2, 3, 0]) == 3
    assert swap_distance([0, 1, 2, 3], [1, 0, 3, 2]) == 2
    with pytest.raises(PreconditionError):
        swap_distance([0, 1], [0, 1, 2])


def test_swap_distance_is_a_metric():
    perms = list(itertools.permutations(range(4)))
    D = np.array([[swap_distance(p, q) for q in perms] for p in perms])
    assert np.all(np.diag(D) == 0)
    assert np.all(D == D.T)
    assert np.all((D > 0) | np.eye(len(perms), dtype=bool))
    # triangle inequality over all triples
    assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :])
    assert D.max() == 3


def test_arrangement_graph_and_swap():
    a = LengthArrangement(CYCLE4, LENGTHS4, (0, 1, 2, 3))
    assert a.graph().lengths() == LENGTHS4
    b = a.swapped(0, 2)
    assert b.graph().lengths() == [1.7, 1.3, 1.0, 2.2]
    assert canonical(b.graph()) == canonical(edge_swap(a.graph(), 0, 2))
    with pytest.raises(PreconditionError):
        LengthArrangement(CYCLE4, LENGTHS4, (0, 0, 1, 2))
    with pytest.raises(PreconditionError):
        LengthArrangement(CYCLE4, LENGTHS4[:3], (0, 1, 2))


def test_walk_zero_steps():
    res = walk(CYCLE4, LENGTHS4, 0, seed=1)
    assert res.perms.shape == (1, 4)
    assert res.swaps.shape == (0, 2)


def test_walk_moves_by_one_swap():
    res = walk(CYCLE4, LENGTHS4, 500, seed=2)
    steps = [swap_distance(p, q) for p, q in zip(res.perms[:-1].tolist(), res.perms[1:].tolist())]
    assert set(steps) == {1}
    d = res.distances()
    assert d[0] == 0 and np.all(np.abs(np.diff(d)) == 1)


def test_walk_deterministic():
    a, b = walk(CYCLE4, LENGTHS4, 200, seed=7), walk(CYCLE4, LENGTHS4, 200, seed=7)
    np.testing.assert_array_equal(a.perms, b.perms)
    assert not np.array_equal(a.perms, walk(CYCLE4, LENGTHS4, 200, seed=8).perms)


def test_transition_counts_reversible():
    # uniform stationary law and a symmetric kernel: flows i -> j and j -> i balance
    res = walk(CYCLE4, LENGTHS4, 100_000, seed=3)
    flows = Counter(zip(map(tuple, res.perms[:-1].tolist()), map(tuple, res.perms[1:].tolist())))
    imbalance = [abs(c - flows.get((b, a), 0)) / c for (a, b), c in flows.items() if c > 200]
    assert max(imbalance) < 0.25


def test_visit_uniformity():
    res = walk(CYCLE4, LENGTHS4, 200_000, seed=0)
    stat, p, seen = visit_uniformity(res, burn_in=100)
    assert seen == 24
    assert p > 1e-3


def test_summary_uses_cache():
    res = walk(CYCLE4, LENGTHS4, 20, seed=4, n_levels=30)
    s0 = res.summary(0)
    assert len(res.cache) == 1
    assert res.summary(0) is s0
    ref = metric.first_levels(LengthArrangement(CYCLE4, LENGTHS4, tuple(res.perms[5])).graph(), 30)
    np.testing.assert_allclose(res.summary(5).wavenumbers()[:30], ref.wavenumbers()[:30])


def test_unfold_interval():
    spec = metric.first_levels(fixtures.interval(1.0), 150)
    s = unfold_and_spacings(spec)
    np.testing.assert_allclose(s[:149], 1.0, atol=1e-10)


def test_unfold_loop_degenerate_pairs():
    spec = metric.first_levels(fixtures.loop(1.0), 200)
    s = unfold_and_spacings(spec)
    np.testing.assert_allclose(s[0::2][:90], 0.0, atol=1e-9)
    np.testing.assert_allclose(s[1::2][:90], 2.0, atol=1e-9)
    assert unfold(spec)[0] == pytest.approx(2.0)


def test_unfold_tetrahedron_mean(tetra):
    s = unfold_and_spacings(metric.first_levels(tetra, 1000))
    assert s.mean() == pytest.approx(1.0, abs=0.02)
    assert np.all(s >= -1e-9)


def test_unfold_needs_levels():
    with pytest.raises(PreconditionError):
        unfold_and_spacings(metric.first_levels(fixtures.interval(1.0), 20))


def test_shift_bounded_by_distance():
    rows = shift_vs_distance(CYCLE4, LENGTHS4, n_pairs=25, seed=5, n_levels=150)
    assert {d for d, _ in rows} >= {0, 1, 2}
    for d, r in rows:
        assert r <= 2 * d
        if d == 0:
            assert r == 0


def test_cache_reuses_equal_permutations():
    cache = SpectrumCache(CYCLE4, LENGTHS4, 40)
    a = cache.get((0, 1, 2, 3))
    assert cache.get(np.array([0, 1, 2, 3])) is a
    b = cache.get((1, 0, 2, 3))
    assert interlacing_degree(a, b) <= 2
