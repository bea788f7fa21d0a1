"""Discrete graph Hamiltonians and the vertex-splitting construction for a switch.

A discrete graph carries hopping amplitudes ``J_uv exp(i theta(u, v))`` with
``theta(v, u) = -theta(u, v)`` and a diagonal potential.  Chains of degree-2
sites play the role of metric edges; clusters of other sites play the role of
vertices.

The split construction doubles the chain endpoints ``A`` and ``B`` of two chains
into ``(A1, A2)`` and ``(B1, B2)``: ``A1`` keeps the chain bond, ``A2`` the bond
to the cluster, each amplified by ``sqrt 2``.  Tying the halves back together
with a penalty ``lam`` recovers the original operator as ``lam -> inf``; tying
``A1`` to ``B2`` and ``B1`` to ``A2`` instead recovers the switched one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh

from .graph import DomainError, PreconditionError

__all__ = [
    "DiscreteGraph",
    "DiscreteGraphError",
    "SplitOperator",
    "SwitchSite",
    "assemble",
    "check_hermitian",
    "eigenvalues",
    "counting",
    "counts",
    "split_endpoints",
    "lambda_family",
    "switch_conjugate",
    "discrete_edge_switch",
    "random_discrete_graph",
    "safe_energies",
]

HERMITIAN_TOL = 1e-12
SQRT2 = math.sqrt(2.0)


class DiscreteGraphError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteGraph:
    n: int
    couplings: tuple  # (u, v, J, theta)
    potential: tuple

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(tuple(c) for c in self.couplings))
        object.__setattr__(self, "potential", tuple(float(x) for x in self.potential))

    def validate(self) -> None:
        if len(self.potential) != self.n:
            raise DiscreteGraphError(f"potential has {len(self.potential)} entries for {self.n} sites")
        seen: dict[tuple[int, int], tuple[float, float]] = {}
        for u, v, J, theta in self.couplings:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise DiscreteGraphError(f"coupling ({u}, {v}) references a missing site")
            if u == v:
                raise DiscreteGraphError(f"self-coupling at site {u}")
            if not J > 0:
                raise DiscreteGraphError(f"coupling ({u}, {v}) has J = {J} <= 0")
            if (u, v) in seen:
                raise DiscreteGraphError(f"duplicate coupling ({u}, {v})")
            if (v, u) in seen:
                J2, th2 = seen[(v, u)]
                if J2 != J or math.remainder(th2 + theta, 2 * math.pi) != 0.0:
                    raise DiscreteGraphError(f"asymmetric specification of coupling ({u}, {v})")
                raise DiscreteGraphError(f"duplicate coupling ({u}, {v}) given in both directions")
            seen[(u, v)] = (J, theta)

    def neighbors(self, u: int) -> list[int]:
        out = []
        for a, b, _, _ in self.couplings:
            if a == u:
                out.append(b)
            elif b == u:
                out.append(a)
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "couplings": [list(c) for c in self.couplings], "potential": list(self.potential)}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteGraph":
        try:
            dg = cls(int(data["n"]), tuple(
                (int(u), int(v), float(J), float(t)) for u, v, J, t in data["couplings"]
            ), tuple(data.get("potential", [0.0] * int(data["n"]))))
        except (KeyError, TypeError, ValueError) as exc:
            raise DiscreteGraphError(f"malformed discrete graph: {exc}") from exc
        return dg

    @classmethod
    def from_json(cls, text: str) -> "DiscreteGraph":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DiscreteGraphError(f"invalid JSON: {exc}") from exc


def assemble(dg: DiscreteGraph) -> np.ndarray:
    """Dense Hermitian matrix: ``H[u, v] = J exp(i theta)``, ``H[u, u] = V_u``."""
    dg.validate()
    H = np.zeros((dg.n, dg.n), dtype=complex)
    for u, v, J, theta in dg.couplings:
        H[u, v] = J * np.exp(1j * theta)
        H[v, u] = J * np.exp(-1j * theta)
    H[np.diag_indices(dg.n)] = dg.potential
    return H


def check_hermitian(H: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DiscreteGraphError("operator must be a square matrix")
    scale = max(1.0, float(np.abs(H).max(initial=0.0)))
    err = float(np.abs(H - H.conj().T).max(initial=0.0))
    if err > tol * scale:
        raise DiscreteGraphError(f"operator is not Hermitian (error {err:.2e})")
    return H


def eigenvalues(H: np.ndarray, method: str = "hermitian") -> np.ndarray:
    """All eigenvalues in ascending order.

    ``method="embed"`` diagonalizes the real symmetric ``2n x 2n`` matrix
    ``[[Re H, -Im H], [Im H, Re H]]``, whose spectrum is that of ``H`` with
    every eigenvalue doubled, and keeps every other value.
    """
    H = check_hermitian(H)
    if method == "hermitian":
        return eigvalsh(H)
    if method == "embed":
        R, I = H.real, H.imag
        big = np.block([[R, -I], [I, R]])
        w = eigvalsh(0.5 * (big + big.T))
        return w[0::2]
    raise ValueError(f"unknown method {method!r}")


def counting(H: np.ndarray, E: float) -> int:
    """Number of eigenvalues strictly below ``E``."""
    return int(np.searchsorted(eigenvalues(H), E, side="left"))


def counts(ev: np.ndarray, energies) -> np.ndarray:
    """Vectorized strict counting from precomputed sorted eigenvalues."""
    return np.searchsorted(ev, np.asarray(energies), side="left")


@dataclass(frozen=True)
class SwitchSite:
    """Chain endpoints ``A``, ``B`` with their chain-side and cluster-side neighbours."""

    A: int
    B: int
    a_next: int
    b_next: int
    a_vert: int
    b_vert: int


@dataclass(frozen=True)
class SplitOperator:
    """``H_hat + lam [ (A1 - A2)(A1 - A2)^* + (B1 - B2)(B1 - B2)^* ]``."""

    base: np.ndarray
    a1: int
    a2: int
    b1: int
    b2: int
    lam: float = 0.0

    def penalty(self) -> np.ndarray:
        n = self.base.shape[0]
        out = np.zeros((n, n))
        for x, y in ((self.a1, self.a2), (self.b1, self.b2)):
            out[x, x] += 1.0
            out[y, y] += 1.0
            out[x, y] -= 1.0
            out[y, x] -= 1.0
        return out

    @property
    def matrix(self) -> np.ndarray:
        if self.lam == 0.0:
            return self.base.copy()
        return self.base + self.lam * self.penalty()

    def transposition(self) -> np.ndarray:
        """Permutation matrix exchanging ``A2`` and ``B2``."""
        n = self.base.shape[0]
        perm = np.arange(n)
        perm[self.a2], perm[self.b2] = self.b2, self.a2
        return np.eye(n)[perm]


def _require_neighbors(H: np.ndarray, site: int, expected: set[int], name: str) -> None:
    row = np.abs(H[site]).copy()
    row[site] = 0.0
    actual = set(np.nonzero(row)[0].tolist())
    if actual != expected:
        raise PreconditionError(
            f"{name} = {site} must have exactly the neighbours {sorted(expected)}, found {sorted(actual)}"
        )


def split_endpoints(H: np.ndarray, A: int, B: int, edge_neighbors, vertex_neighbors) -> SplitOperator:
    """Double the chain endpoints ``A`` and ``B``.

    ``A1`` (index ``A``) keeps the bond to ``a_next`` and ``A2`` (index ``n``) the
    bond to ``a_vert``, both multiplied by ``sqrt 2``; both halves carry ``V_A``.
    Likewise ``B1`` (index ``B``) and ``B2`` (index ``n + 1``).
    """
    H = check_hermitian(H)
    a_next, b_next = edge_neighbors
    a_vert, b_vert = vertex_neighbors
    if A == B:
        raise PreconditionError("A and B must differ")
    if H[A, B] != 0:
        raise PreconditionError("A and B must not be adjacent")
    _require_neighbors(H, A, {a_next, a_vert}, "A")
    _require_neighbors(H, B, {b_next, b_vert}, "B")
    if a_next == a_vert or b_next == b_vert:
        raise PreconditionError("chain-side and cluster-side neighbours must differ")
    n = H.shape[0]
    out = np.zeros((n + 2, n + 2), dtype=complex)
    out[:n, :n] = H
    for site, nxt, vert, twin in ((A, a_next, a_vert, n), (B, b_next, b_vert, n + 1)):
        out[site, vert] = out[vert, site] = 0.0
        out[site, nxt] = SQRT2 * H[site, nxt]
        out[nxt, site] = SQRT2 * H[nxt, site]
        out[twin, vert] = SQRT2 * H[site, vert]
        out[vert, twin] = SQRT2 * H[vert, site]
        out[twin, twin] = H[site, site]
    return SplitOperator(out, A, n, B, n + 1, 0.0)


def lambda_family(split: SplitOperator, lam: float) -> SplitOperator:
    if lam < 0:
        raise DomainError("lambda must be non-negative")
    return SplitOperator(split.base, split.a1, split.a2, split.b1, split.b2, float(lam))


def switch_conjugate(split: SplitOperator) -> np.ndarray:
    """``H_hat + S K S`` where ``K`` is the penalty term and ``S`` swaps ``A2`` and ``B2``.

    The penalty then ties ``A1`` to ``B2`` and ``B1`` to ``A2``, which is the
    switched graph in the ``lam -> inf`` limit.  The difference to
    ``split.matrix`` is rank two and odd under ``S``.
    """
    S = split.transposition()
    K = split.lam * split.penalty()
    return split.base + S @ K @ S


def discrete_edge_switch(H: np.ndarray, A: int, B: int, a_next: int, b_next: int) -> np.ndarray:
    """Move the bond ``A - a_next`` to ``B - a_next`` and ``B - b_next`` to ``A - b_next``.

    Each bond keeps its amplitude, and both endpoints take the mean potential
    ``(V_A + V_B) / 2``.  This is the ``lam -> inf`` limit of
    :func:`switch_conjugate` with the penalty eigenvalues removed.  The
    difference to ``H`` lives in the block spanned by ``A, a_next, B, b_next``.
    """
    H = check_hermitian(H)
    if len({A, B, a_next, b_next}) != 4:
        raise PreconditionError("switch sites must be four distinct indices")
    if H[A, a_next] == 0 or H[B, b_next] == 0:
        raise PreconditionError("designated neighbours are not coupled")
    out = H.copy()
    ha, hb = H[a_next, A], H[b_next, B]
    out[A, a_next] = out[a_next, A] = 0.0
    out[B, b_next] = out[b_next, B] = 0.0
    out[a_next, B] += ha
    out[B, a_next] += np.conj(ha)
    out[b_next, A] += hb
    out[A, b_next] += np.conj(hb)
    out[A, A] = out[B, B] = 0.5 * (H[A, A] + H[B, B])
    return out


def random_discrete_graph(
    rng: np.random.Generator,
    n_clusters: tuple[int, int] = (2, 4),
    cluster_size: tuple[int, int] = (1, 4),
    n_chains: tuple[int, int] = (2, 5),
    chain_length: tuple[int, int] = (2, 8),
) -> tuple[DiscreteGraph, SwitchSite]:
    """Clusters joined by chains of degree-2 sites, with a switch site on two chains.

    Amplitudes ``J ~ U[0.5, 1.5]``, phases ``theta ~ U[-pi, pi]``, potential ``V ~ U[-1, 1]``.
    """
    couplings = []
    cluster_sites = []
    n = 0

    def bond(u, v):
        couplings.append((u, v, float(rng.uniform(0.5, 1.5)), float(rng.uniform(-math.pi, math.pi))))

    for _ in range(int(rng.integers(n_clusters[0], n_clusters[1] + 1))):
        size = int(rng.integers(cluster_size[0], cluster_size[1] + 1))
        sites = list(range(n, n + size))
        n += size
        for a, b in zip(sites[:-1], sites[1:]):
            bond(a, b)
        if size >= 3 and rng.random() < 0.5:
            bond(sites[0], sites[-1])
        cluster_sites.extend(sites)
    chains = []
    for _ in range(int(rng.integers(n_chains[0], n_chains[1] + 1))):
        length = int(rng.integers(chain_length[0], chain_length[1] + 1))
        u, w = (int(cluster_sites[i]) for i in rng.integers(0, len(cluster_sites), size=2))
        sites = list(range(n, n + length))
        n += length
        bond(u, sites[0])
        for a, b in zip(sites[:-1], sites[1:]):
            bond(a, b)
        bond(sites[-1], w)
        chains.append((u, sites))
    potential = tuple(float(x) for x in rng.uniform(-1.0, 1.0, size=n))
    i, j = rng.choice(len(chains), size=2, replace=False)
    (ua, sa), (ub, sb) = chains[int(i)], chains[int(j)]
    site = SwitchSite(A=sa[0], B=sb[0], a_next=sa[1], b_next=sb[1], a_vert=ua, b_vert=ub)
    return DiscreteGraph(n, tuple(couplings), potential), site


def safe_energies(spectra, n: int, rng: np.random.Generator, gap: float, margin: float = 1.0):
    """``n`` energies drawn uniformly over the joint spectral range, each at
    least ``gap`` away from every eigenvalue in ``spectra``.

    Returns the energies and the number of rejected draws.
    """
    allev = np.sort(np.concatenate([np.asarray(s) for s in spectra]))
    lo, hi = allev[0] - margin, allev[-1] + margin
    out = []
    rejected = 0
    while len(out) < n:
        E = float(rng.uniform(lo, hi))
        i = np.searchsorted(allev, E)
        near = min(abs(E - allev[max(i - 1, 0)]), abs(E - allev[min(i, len(allev) - 1)]))
        if near < gap:
            rejected += 1
            continue
        out.append(E)
    return np.array(out), rejected
