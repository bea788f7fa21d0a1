"""Numerical checks of the two counting-shift bounds for finite Hermitian matrices.

* rank bound: ``|N(E; H0 + K) - N(E; H0)| <= rank K``;
* reflection bound: for a Hermitian involution ``T``,
  ``|N(E; H0 + K) - N(E; H0 + TKT)| <= ceil(rank K / 2)``.  This needs the
  difference ``TKT - K`` to have at most ``ceil(rank K / 2)`` eigenvalues of
  either sign; it holds when ``TKT = -K`` and can fail otherwise.

Both are checked on grids of energies kept away from every eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh, qr

from .discrete import counts, safe_energies
from .graph import PreconditionError

__all__ = [
    "PerturbationFixture",
    "LemmaReport",
    "random_unitary",
    "random_hermitian",
    "random_involution",
    "make_fixture",
    "numerical_rank",
    "signed_rank",
    "verify_rank_bound",
    "verify_reflection_bound",
    "rank_one_chain",
]

RANK_RTOL = 1e-10


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR factorization of a complex Gaussian matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (z + z.conj().T)


def random_involution(n: int, rng: np.random.Generator, n_minus: int | None = None) -> np.ndarray:
    """``U diag(+-1) U^*`` with Haar ``U``; ``n_minus`` eigenvalues equal to -1."""
    if n_minus is None:
        n_minus = int(rng.integers(1, n))
    signs = np.ones(n)
    signs[:n_minus] = -1.0
    U = random_unitary(n, rng)
    return (U * signs) @ U.conj().T


def numerical_rank(K: np.ndarray, scale: float | None = None) -> int:
    return sum(signed_rank(K, scale))


def signed_rank(K: np.ndarray, scale: float | None = None) -> tuple[int, int]:
    """Counts of positive and negative eigenvalues above ``1e-10 * scale``."""
    w = eigvalsh(K)
    scale = np.abs(w).max(initial=0.0) if scale is None else scale
    thr = RANK_RTOL * max(scale, np.finfo(float).tiny)
    return int(np.sum(w > thr)), int(np.sum(w < -thr))


@dataclass(frozen=True)
class PerturbationFixture:
    H0: np.ndarray
    K: np.ndarray
    T: np.ndarray | None
    rank: int
    seed: int

    @property
    def n(self) -> int:
        return self.H0.shape[0]


def make_fixture(n: int, rank: int, seed: int, reflection: bool = False, anticommuting: bool = False) -> PerturbationFixture:
    """Random ``H0`` and a rank-``rank`` Hermitian ``K = sum mu_j phi_j phi_j^*``.

    ``reflection=True`` adds a random involution ``T``.  With
    ``anticommuting=True`` ``K`` is built off-diagonal in the eigenbasis of
    ``T``, so that ``TKT = -K`` (``rank`` must then be even).
    """
    rng = np.random.default_rng(seed)
    H0 = random_hermitian(n, rng)
    if not anticommuting:
        phi = random_unitary(n, rng)[:, :rank]
        mu = rng.uniform(0.5, 3.0, size=rank) * rng.choice([-1.0, 1.0], size=rank)
        K = (phi * mu) @ phi.conj().T
        T = random_involution(n, rng) if reflection else None
        return PerturbationFixture(H0, 0.5 * (K + K.conj().T), T, rank, seed)
    if rank % 2:
        raise PreconditionError("an anticommuting perturbation has even rank")
    m = n // 2
    if rank // 2 > min(m, n - m):
        raise PreconditionError("rank too large for the involution blocks")
    P, Q = random_unitary(m, rng), random_unitary(n - m, rng)
    X = (P[:, : rank // 2] * rng.uniform(0.5, 3.0, size=rank // 2)) @ Q[:, : rank // 2].conj().T
    Kb = np.zeros((n, n), dtype=complex)
    Kb[:m, m:] = X
    Kb[m:, :m] = X.conj().T
    U = random_unitary(n, rng)
    K = U @ Kb @ U.conj().T
    T = (U * np.r_[np.ones(m), -np.ones(n - m)]) @ U.conj().T
    return PerturbationFixture(H0, 0.5 * (K + K.conj().T), 0.5 * (T + T.conj().T), rank, seed)


@dataclass(frozen=True)
class LemmaReport:
    max_shift: int
    bound: int
    n_energies: int
    resampled: int
    rank: int
    n_positive: int = 0
    n_negative: int = 0
    antisymmetry: float = 0.0
    sign_consistent: bool = True

    @property
    def ok(self) -> bool:
        return self.max_shift <= self.bound and self.sign_consistent


def _shift(Ha: np.ndarray, Hb: np.ndarray, n_energies: int, rng: np.random.Generator):
    ea, eb = eigvalsh(Ha), eigvalsh(Hb)
    scale = max(np.abs(ea).max(), np.abs(eb).max(), 1.0)
    grid, rejected = safe_energies([ea, eb], n_energies, rng, gap=1e-6 * scale)
    dN = counts(ea, grid) - counts(eb, grid)
    return dN, rejected


def verify_rank_bound(fx: PerturbationFixture, n_energies: int = 1000, seed: int = 0) -> LemmaReport:
    rng = np.random.default_rng(seed)
    dN, rejected = _shift(fx.H0 + fx.K, fx.H0, n_energies, rng)
    pos, neg = signed_rank(fx.K)
    # positive directions can only lower the count, negative ones only raise it
    signed = bool(dN.min() >= -pos and dN.max() <= neg)
    return LemmaReport(
        int(np.abs(dN).max()), pos + neg, n_energies, rejected, pos + neg, pos, neg, sign_consistent=signed
    )


def verify_reflection_bound(fx: PerturbationFixture, n_energies: int = 1000, seed: int = 0) -> LemmaReport:
    """Shift between ``H0 + K`` and ``H0 + TKT`` against ``ceil(rank K / 2)``.

    ``n_positive``/``n_negative`` count the signed eigenvalues of
    ``dH = TKT - K``; adding ``dH`` one rank-one term at a time confines the
    shift to ``[-n_positive, n_negative]``, and ``sign_consistent`` records
    that this held.  ``antisymmetry`` is ``max|T dH T + dH|``.
    """
    if fx.T is None:
        raise PreconditionError("fixture has no involution")
    T = fx.T
    dH = T @ fx.K @ T - fx.K
    anti = float(np.abs(T @ dH @ T + dH).max(initial=0.0))
    rng = np.random.default_rng(seed)
    Ha, Hb = fx.H0 + T @ fx.K @ T, fx.H0 + fx.K
    dN, rejected = _shift(0.5 * (Ha + Ha.conj().T), Hb, n_energies, rng)
    pos, neg = signed_rank(dH)
    r = numerical_rank(fx.K)
    signed = bool(dN.min() >= -pos and dN.max() <= neg)
    return LemmaReport(
        int(np.abs(dN).max()), math.ceil(r / 2), n_energies, rejected, r, pos, neg, anti, signed
    )


def rank_one_chain(H: np.ndarray, K: np.ndarray, n_energies: int = 1000, seed: int = 0) -> int:
    """Largest shift between consecutive partial sums of the spectral expansion of ``K``.

    Every step adds a rank-one term, so each value must be at most one.
    """
    rng = np.random.default_rng(seed)
    w, v = np.linalg.eigh(K)
    thr = RANK_RTOL * max(np.abs(w).max(initial=0.0), np.finfo(float).tiny)
    cur = H.copy()
    worst = 0
    for j in np.nonzero(np.abs(w) > thr)[0]:
        nxt = cur + w[j] * np.outer(v[:, j], v[:, j].conj())
        dN, _ = _shift(nxt, cur, n_energies, rng)
        worst = max(worst, int(np.abs(dN).max()))
        cur = nxt
    return worst
