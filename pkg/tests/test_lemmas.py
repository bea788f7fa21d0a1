import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgraph_switch.discrete import counts, eigenvalues
from qgraph_switch.graph import PreconditionError
from qgraph_switch.lemmas import (
    PerturbationFixture,
    make_fixture,
    numerical_rank,
    random_hermitian,
    random_involution,
    random_unitary,
    rank_one_chain,
    signed_rank,
    verify_rank_bound,
    verify_reflection_bound,
)


def test_zero_perturbation(rng):
    H0 = random_hermitian(6, rng)
    rep = verify_rank_bound(PerturbationFixture(H0, np.zeros((6, 6)), None, 0, 0), n_energies=200)
    assert rep.max_shift == 0 and rep.bound == 0 and rep.ok


def test_positive_rank_one_only_lowers_count(rng):
    H0 = random_hermitian(8, rng)
    v = random_unitary(8, rng)[:, 0]
    K = 2.0 * np.outer(v, v.conj())
    ea, eb = eigenvalues(H0 + K), eigenvalues(H0)
    grid = np.linspace(ea.min() - 1, ea.max() + 1, 500)
    dN = counts(ea, grid) - counts(eb, grid)
    assert set(dN.tolist()) <= {0, -1}
    assert -1 in dN


def test_unitary_and_involution(rng):
    U = random_unitary(7, rng)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(7), atol=1e-12)
    T = random_involution(7, rng, n_minus=3)
    np.testing.assert_allclose(T @ T, np.eye(7), atol=1e-12)
    np.testing.assert_allclose(T, T.conj().T, atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(T), [-1] * 3 + [1] * 4, atol=1e-12)


def test_signed_rank():
    K = np.diag([2.0, -1.0, 0.0, 1e-14, 3.0])
    assert signed_rank(K) == (2, 1)
    assert numerical_rank(K) == 3
    assert numerical_rank(np.zeros((3, 3))) == 0


@pytest.mark.parametrize("rank", [1, 2, 3, 5])
def test_rank_bound(rank):
    for seed in range(20):
        rep = verify_rank_bound(make_fixture(12, rank, seed), n_energies=300, seed=seed)
        assert rep.rank == rank
        assert rep.ok, rep


def test_rank_bound_attained():
    # K = mu I on a rank-r block pushes r levels past some energy at once
    n, r = 10, 3
    H0 = np.diag(np.arange(n, dtype=float))
    K = np.zeros((n, n))
    K[:r, :r] = 20.0 * np.eye(r)
    rep = verify_rank_bound(PerturbationFixture(H0, K, None, r, 0), n_energies=500)
    assert rep.max_shift == r


@pytest.mark.parametrize("rank", [1, 2, 4])
def test_reflection_bound_random(rank):
    for seed in range(25):
        rep = verify_reflection_bound(make_fixture(10, rank, seed, reflection=True), n_energies=300, seed=seed)
        assert rep.sign_consistent
        assert rep.antisymmetry < 1e-12
        assert rep.max_shift <= rank


@pytest.mark.parametrize("rank", [2, 4, 6])
def test_reflection_bound_anticommuting(rank):
    for seed in range(20):
        fx = make_fixture(12, rank, seed, anticommuting=True)
        np.testing.assert_allclose(fx.T @ fx.K @ fx.T, -fx.K, atol=1e-12)
        assert signed_rank(fx.K) == (rank // 2, rank // 2)
        rep = verify_reflection_bound(fx, n_energies=300, seed=seed)
        assert rep.ok and rep.bound == rank // 2, rep


def test_anticommuting_needs_even_rank():
    with pytest.raises(PreconditionError):
        make_fixture(8, 3, 0, anticommuting=True)


def test_identity_involution_gives_no_shift(rng):
    fx = make_fixture(8, 3, 1)
    rep = verify_reflection_bound(PerturbationFixture(fx.H0, fx.K, np.eye(8), 3, 1), n_energies=200)
    assert rep.max_shift == 0


def test_reflection_bound_needs_antisymmetry():
    # T swaps the first pair of sites with the second; K lives on the first pair.
    # TKT - K has two positive and two negative directions, so two levels can move.
    n, mu = 6, 20.0
    H0 = np.diag([0.0, 0.0, 10.0, 10.0, 20.0, 30.0])
    K = np.zeros((n, n))
    K[0, 0] = K[1, 1] = mu
    T = np.eye(n)[[2, 3, 0, 1, 4, 5]]
    rep = verify_reflection_bound(PerturbationFixture(H0, K, T, 2, 0), n_energies=400)
    assert rep.bound == math.ceil(2 / 2) == 1
    assert (rep.n_positive, rep.n_negative) == (2, 2)
    assert rep.max_shift == 2 and rep.sign_consistent
    assert not rep.ok
    ea, eb = eigenvalues(H0 + T @ K @ T), eigenvalues(H0 + K)
    assert int(counts(ea, [5.0])[0] - counts(eb, [5.0])[0]) == 2


def test_missing_involution():
    with pytest.raises(PreconditionError):
        verify_reflection_bound(make_fixture(6, 2, 0))


@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 4))
def test_rank_one_chain(seed, rank):
    fx = make_fixture(8, rank, seed)
    assert rank_one_chain(fx.H0, fx.K, n_energies=100, seed=seed) <= 1
