import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgraph_switch import fixtures
from qgraph_switch.discrete import (
    DiscreteGraph,
    DiscreteGraphError,
    assemble,
    check_hermitian,
    counting,
    counts,
    discrete_edge_switch,
    eigenvalues,
    lambda_family,
    random_discrete_graph,
    safe_energies,
    split_endpoints,
    switch_conjugate,
)
from qgraph_switch.graph import DomainError, EdgeEndpoint, PreconditionError
from qgraph_switch.lemmas import numerical_rank, signed_rank
from qgraph_switch.oracle import discretize
from qgraph_switch.transform import edge_switch


def path(n, V=None):
    return DiscreteGraph(n, [(i, i + 1, 1.0, 0.0) for i in range(n - 1)], V or [0.0] * n)


def cycle(n):
    return DiscreteGraph(n, [(i, (i + 1) % n, 1.0, 0.0) for i in range(n)], [0.0] * n)


def test_three_path_spectrum():
    H = assemble(path(3))
    np.testing.assert_allclose(eigenvalues(H), [-math.sqrt(2), 0, math.sqrt(2)], atol=1e-14)
    assert counting(H, -0.5) == 1 and counting(H, 0.5) == 2


def test_four_cycle_spectrum():
    H = assemble(cycle(4))
    np.testing.assert_allclose(eigenvalues(H), [-2, 0, 0, 2], atol=1e-14)
    assert counting(H, 2.0) == 3


def test_trace_and_frobenius(rng):
    dg, _ = random_discrete_graph(rng)
    H = assemble(dg)
    ev = eigenvalues(H)
    assert ev.sum() == pytest.approx(sum(dg.potential), abs=1e-10)
    assert np.sum(ev**2) == pytest.approx(np.sum(np.abs(H) ** 2), rel=1e-12)


def test_embedding_matches_hermitian(rng):
    dg, _ = random_discrete_graph(rng)
    H = assemble(dg)
    np.testing.assert_allclose(eigenvalues(H, "embed"), eigenvalues(H), atol=1e-12)
    with pytest.raises(ValueError):
        eigenvalues(H, "qr")


@pytest.mark.parametrize(
    "couplings, match",
    [
        ([(0, 1, 1.0, 0.0), (0, 1, 1.0, 0.0)], "duplicate"),
        ([(1, 1, 1.0, 0.0)], "self-coupling"),
        ([(0, 1, 1.0, 0.3), (1, 0, 1.0, 0.1)], "asymmetric"),
        ([(0, 1, 0.0, 0.0)], "J ="),
        ([(0, 5, 1.0, 0.0)], "missing site"),
    ],
)
def test_validation(couplings, match):
    with pytest.raises(DiscreteGraphError, match=match):
        assemble(DiscreteGraph(3, couplings, [0.0] * 3))


def test_non_hermitian_rejected():
    with pytest.raises(DiscreteGraphError):
        check_hermitian(np.array([[0, 1], [2, 0]], dtype=complex))


def test_triangle_flux_gauge():
    # only the total flux around the triangle matters
    a = DiscreteGraph(3, [(0, 1, 1.0, 0.4), (1, 2, 1.0, 0.0), (2, 0, 1.0, 0.0)], [0.0] * 3)
    b = DiscreteGraph(3, [(0, 1, 1.0, 0.1), (1, 2, 1.0, 0.2), (2, 0, 1.0, 0.1)], [0.0] * 3)
    c = DiscreteGraph(3, [(0, 1, 1.0, 1.0), (1, 2, 1.0, 0.0), (2, 0, 1.0, 0.0)], [0.0] * 3)
    ea, eb, ec = (eigenvalues(assemble(x)) for x in (a, b, c))
    np.testing.assert_allclose(ea, eb, atol=1e-13)
    assert np.abs(ea - ec).max() > 1e-3


def test_json_roundtrip(rng):
    dg, _ = random_discrete_graph(rng)
    back = DiscreteGraph.from_json(json.dumps(dg.to_dict()))
    np.testing.assert_array_equal(assemble(back), assemble(dg))
    with pytest.raises(DiscreteGraphError):
        DiscreteGraph.from_json("{nope")
    with pytest.raises(DiscreteGraphError):
        DiscreteGraph.from_json('{"n": 2}')


def test_counts_is_strict():
    ev = np.array([-1.0, 0.0, 0.0, 2.0])
    assert list(counts(ev, [-2.0, 0.0, 1e-15, 3.0])) == [0, 1, 3, 4]


# six-site path 0-1-2-3-4-5: chains start at A=2 (towards 1) and B=4 (towards 5)
def _path_split(V=None):
    H = assemble(path(6, V))
    return H, split_endpoints(H, 2, 4, (1, 5), (3, 3))


def test_split_dimension_and_bonds():
    H, sp = _path_split()
    assert sp.base.shape == (8, 8)
    assert (sp.a1, sp.a2, sp.b1, sp.b2) == (2, 6, 4, 7)
    assert sp.base[2, 1] == pytest.approx(math.sqrt(2))
    assert sp.base[6, 3] == pytest.approx(math.sqrt(2))
    assert sp.base[2, 3] == 0


def test_split_symmetric_projection():
    # on vectors with psi_A1 = psi_A2 = psi_A / sqrt 2 the split form equals the original
    V = [0.3, -0.2, 0.7, 0.1, -0.5, 0.4]
    H, sp = _path_split(V)
    rng = np.random.default_rng(3)
    for _ in range(5):
        psi = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        up = np.zeros(8, dtype=complex)
        up[:6] = psi
        up[2] = up[6] = psi[2] / math.sqrt(2)
        up[4] = up[7] = psi[4] / math.sqrt(2)
        assert np.vdot(up, sp.base @ up) == pytest.approx(np.vdot(psi, H @ psi), abs=1e-12)


def test_split_preconditions():
    H = assemble(path(6))
    with pytest.raises(PreconditionError):
        split_endpoints(H, 2, 2, (1, 1), (3, 3))
    with pytest.raises(PreconditionError):
        split_endpoints(H, 2, 3, (1, 4), (3, 2))
    with pytest.raises(PreconditionError, match="neighbours"):
        split_endpoints(H, 2, 4, (0, 5), (3, 3))
    with pytest.raises(DomainError):
        lambda_family(_path_split()[1], -1.0)


def test_large_lambda_recovers_original():
    H, sp = _path_split([0.3, -0.2, 0.7, 0.1, -0.5, 0.4])
    ev = eigenvalues(H)
    big = eigenvalues(lambda_family(sp, 1e6).matrix)
    # two penalty levels run off to ~2 lam; the rest converge to the original
    np.testing.assert_allclose(big[:6], ev, atol=1e-5)
    for E in np.linspace(-3, 1, 17):
        if np.min(np.abs(ev - E)) > 1e-3:
            assert counting(lambda_family(sp, 1e6).matrix, E) == counting(H, E)


def test_lambda_monotone():
    H, sp = _path_split([0.3, -0.2, 0.7, 0.1, -0.5, 0.4])
    scale = np.abs(H).max()
    grid = np.linspace(-3, 3, 61)
    prev = None
    first = None
    for lam in np.array([0, 1, 10, 1e3, 1e6]) * scale:
        c = counts(eigenvalues(lambda_family(sp, lam).matrix), grid)
        if prev is not None:
            assert np.all(c <= prev)
        else:
            first = c
        prev = c
    assert np.all(first - prev <= 2)
    c8 = counts(eigenvalues(lambda_family(sp, 1e8 * scale).matrix), grid)
    np.testing.assert_array_equal(c8, prev)


def test_switch_conjugate_rank_and_parity(rng):
    dg, s = random_discrete_graph(rng)
    H = assemble(dg)
    sp = lambda_family(split_endpoints(H, s.A, s.B, (s.a_next, s.b_next), (s.a_vert, s.b_vert)), 5.0)
    D = switch_conjugate(sp) - sp.matrix
    assert numerical_rank(D) == 2
    assert signed_rank(D) == (1, 1)
    S = sp.transposition()
    np.testing.assert_allclose(S @ D @ S, -D, atol=1e-13)


def test_identical_symmetric_chains_commute():
    # two identical pendant chains on one site: the switch only relabels sites
    dg = DiscreteGraph(5, [(0, 1, 1.0, 0.0), (1, 2, 1.0, 0.0), (0, 3, 1.0, 0.0), (3, 4, 1.0, 0.0)], [0.0] * 5)
    H = assemble(dg)
    sp = lambda_family(split_endpoints(H, 1, 3, (2, 4), (0, 0)), 2.0)
    np.testing.assert_allclose(eigenvalues(switch_conjugate(sp)), eigenvalues(sp.matrix), atol=1e-13)


def test_edge_switch_limit(rng):
    dg, s = random_discrete_graph(rng)
    H = assemble(dg)
    sp = split_endpoints(H, s.A, s.B, (s.a_next, s.b_next), (s.a_vert, s.b_vert))
    target = eigenvalues(discrete_edge_switch(H, s.A, s.B, s.a_next, s.b_next))
    errs = []
    for lam in (1e4, 1e6):
        ev = eigenvalues(switch_conjugate(lambda_family(sp, lam)))
        errs.append(np.abs(ev[: H.shape[0]] - target).max())
    assert errs[1] < 1e-5 and errs[1] < errs[0] / 10


def test_edge_switch_preconditions():
    H = assemble(path(6))
    with pytest.raises(PreconditionError):
        discrete_edge_switch(H, 2, 2, 1, 5)
    with pytest.raises(PreconditionError, match="not coupled"):
        discrete_edge_switch(H, 2, 4, 0, 5)


@pytest.mark.parametrize("seed", range(0, 100, 11))
def test_switch_shift_at_most_one(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        dg, s = random_discrete_graph(rng)
        H = assemble(dg)
        sp = lambda_family(split_endpoints(H, s.A, s.B, (s.a_next, s.b_next), (s.a_vert, s.b_vert)), 3.0)
        Hsw = discrete_edge_switch(H, s.A, s.B, s.a_next, s.b_next)
        assert numerical_rank(Hsw - H) <= 4
        for a, b in ((sp.matrix, switch_conjugate(sp)), (H, Hsw)):
            ea, eb = eigenvalues(a), eigenvalues(b)
            grid, _ = safe_energies([ea, eb], 50, rng, gap=1e-8)
            assert np.abs(counts(ea, grid) - counts(eb, grid)).max() <= 1


@given(seed=st.integers(0, 2**32 - 1))
def test_random_graphs_hermitian(seed):
    dg, s = random_discrete_graph(np.random.default_rng(seed))
    H = assemble(dg)
    check_hermitian(H)
    assert set(dg.neighbors(s.A)) == {s.a_next, s.a_vert}
    assert set(dg.neighbors(s.B)) == {s.b_next, s.b_vert}


def test_switch_commutes_with_discretization():
    # no flux and equal spacing: switching the finite-difference stiffness at the
    # sites next to the moved ends equals discretizing the switched graph
    g = fixtures.tetrahedron([1.0] * 6)
    ppe = {e.id: 8 for e in g.edges}
    d = discretize(g, points_per_edge=ppe)
    A, a_prev = d.edge_sites[0][-1], d.edge_sites[0][-2]
    B, b_prev = d.edge_sites[5][-1], d.edge_sites[5][-2]
    # exchanging the end sites A, B between the two chains moves the heads
    Ksw = discrete_edge_switch(d.stiffness, a_prev, b_prev, A, B)
    sw = discretize(edge_switch(g, EdgeEndpoint(0, "head"), EdgeEndpoint(5, "head")), points_per_edge=ppe)
    np.testing.assert_allclose(eigenvalues(Ksw), eigenvalues(sw.stiffness), atol=1e-10)
