"""Laplacian spectra of compact metric graphs via the bond scattering matrix.

For wavenumber ``k > 0`` the quantization condition is ``det(I - U(k)) = 0`` with
``U(k) = D(k) S``, where ``D(k) = diag(exp(i (k L_b + alpha_b)))`` acts on the
``2|E|`` directed bonds and ``S`` collects the vertex scattering matrices.
Every eigenphase of ``U(k)`` increases strictly with ``k`` (for Kirchhoff,
Dirichlet and non-negative delta couplings), so the number of eigenvalues in
``(0, k)`` equals the number of times the eigenphases have passed through
zero.  Writing ``Theta(k)`` for the continuous argument of ``det U(k)``, which is
known in closed form, that number is

    ( [Theta(k) - sum_j phi_j(k)] - [Theta(0+) - sum_j phi_j(0+)] ) / (2 pi)

with the eigenphases ``phi_j`` reduced to ``[0, 2 pi)``.  No tracking of
individual eigenphases is needed, and non-integral results flag numerical
trouble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .graph import DIRICHLET, MetricGraph, Vertex, check, insert_kirchhoff_vertex, total_length, DomainError

__all__ = [
    "SpectrumError",
    "AmbiguousCountError",
    "NumericalConsistencyError",
    "RefinementError",
    "BondBasis",
    "Spectrum",
    "vertex_scattering",
    "scattering_matrix",
    "evolution_operator",
    "eigenphases",
    "zero_modes",
    "count",
    "eigenvalues_up_to",
    "first_levels",
    "weyl_ratio",
    "dirichlet_decouple",
]

TWO_PI = 2.0 * math.pi
ZERO_PHASE_TOL = 1e-8  # eigenphases of U(0+) closer than this to 0 sit exactly at 0


class SpectrumError(RuntimeError):
    """Base class for solver failures."""


class AmbiguousCountError(SpectrumError):
    """The requested energy coincides with an eigenvalue; perturb it."""


class NumericalConsistencyError(SpectrumError):
    pass


class RefinementError(SpectrumError):
    pass


def vertex_scattering(d: int, bc, k: float | None = None) -> np.ndarray:
    """``d x d`` vertex scattering matrix, incoming end ``j`` to outgoing end ``i``.

    Kirchhoff: ``2/d - delta``; Dirichlet: ``-I``; delta coupling of strength
    ``chi``: ``2/(d + i chi/k) - delta``, which needs ``k``.
    """
    if d < 1:
        raise ValueError("vertex scattering needs degree >= 1")
    return _coupling(bc, d, k) * np.ones((d, d)) - np.eye(d)


def _coupling(bc, d: int, k: float | None) -> complex:
    if bc.kind == "dirichlet":
        return 0.0
    if bc.is_kirchhoff:
        return 2.0 / d
    if k is None:
        raise ValueError("delta coupling is k-dependent; pass k")
    if k == 0:
        return 0.0
    return 2.0 / (d + 1j * bc.strength / k)


@dataclass(frozen=True)
class BondBasis:
    """Directed bonds: bond ``2i`` runs along edge ``i`` tail->head, ``2i+1`` backwards.

    ``i`` indexes ``graph.edges`` (sorted by id).
    """

    origin: np.ndarray
    terminus: np.ndarray
    length: np.ndarray
    alpha: np.ndarray
    edge_ids: tuple

    @classmethod
    def of(cls, g: MetricGraph) -> "BondBasis":
        m = len(g.edges)
        origin = np.empty(2 * m, dtype=int)
        terminus = np.empty(2 * m, dtype=int)
        length = np.empty(2 * m)
        alpha = np.empty(2 * m)
        for i, e in enumerate(g.edges):
            origin[2 * i], terminus[2 * i] = e.tail, e.head
            origin[2 * i + 1], terminus[2 * i + 1] = e.head, e.tail
            length[2 * i] = length[2 * i + 1] = e.length
            alpha[2 * i], alpha[2 * i + 1] = e.alpha, -e.alpha
        return cls(origin, terminus, length, alpha, tuple(g.edge_ids))

    @property
    def size(self) -> int:
        return len(self.origin)

    @staticmethod
    def reverse(b):
        return np.bitwise_xor(b, 1)


class _Secular:
    """Precomputed pieces of ``U(k) = D(k) S(k)`` for one graph."""

    def __init__(self, g: MetricGraph):
        check(g)
        self.graph = g
        self.bonds = bonds = BondBasis.of(g)
        n = bonds.size
        deg = g.degrees()
        self.total_length = total_length(g)
        # -P: minus the pairing of an incoming bond with its own reversal
        base = np.zeros((n, n), dtype=complex)
        b = np.arange(n)
        base[BondBasis.reverse(b), b] = -1.0
        fixed = base.copy()
        self.delta = []  # (mask, degree, strength) for k-dependent vertices
        for v in g.vertices:
            d = deg[v.id]
            if d == 0:
                continue
            mask = np.outer(bonds.origin == v.id, bonds.terminus == v.id).astype(float)
            if v.bc.kind == "dirichlet":
                continue
            if v.bc.is_kirchhoff:
                fixed += (2.0 / d) * mask
            else:
                if v.bc.strength < 0:
                    raise NotImplementedError(
                        "negative delta strengths produce negative energies; not supported by this solver"
                    )
                self.delta.append((mask, d, v.bc.strength))
        self.S_fixed = fixed
        # det S(k) = det S(inf) * prod_v exp(-2i arctan(chi_v / (k d_v)))
        S_inf = fixed + sum((2.0 / d) * mask for mask, d, _ in self.delta)
        self.theta_inf = float(np.angle(np.linalg.det(S_inf)))
        self._F0 = None

    def S(self, k: float) -> np.ndarray:
        if not self.delta:
            return self.S_fixed
        out = self.S_fixed.copy()
        for mask, d, chi in self.delta:
            out += _coupling_value(d, chi, k) * mask
        return out

    def U(self, k: float) -> np.ndarray:
        bonds = self.bonds
        phase = np.exp(1j * (k * bonds.length + bonds.alpha))
        return phase[:, None] * self.S(k)

    def U_batch(self, ks: np.ndarray) -> np.ndarray:
        bonds = self.bonds
        phase = np.exp(1j * (np.multiply.outer(ks, bonds.length) + bonds.alpha))
        if not self.delta:
            return phase[:, :, None] * self.S_fixed[None, :, :]
        S = np.broadcast_to(self.S_fixed, (len(ks),) + self.S_fixed.shape).copy()
        for mask, d, chi in self.delta:
            c = np.array([_coupling_value(d, chi, k) for k in ks])
            S += c[:, None, None] * mask[None]
        return phase[:, :, None] * S

    def theta(self, k):
        """Continuous argument of ``det U(k)``."""
        k = np.asarray(k, dtype=float)
        out = 2.0 * k * self.total_length + self.theta_inf
        for _, d, chi in self.delta:
            out = out - 2.0 * np.arctan(chi / (k * d))
        return out

    def F0(self) -> float:
        """``Theta(0+) - sum phi_j(0+)``."""
        if self._F0 is None:
            bonds = self.bonds
            S0 = self.S_fixed  # delta vertices act as Dirichlet at k -> 0+
            U0 = np.exp(1j * bonds.alpha)[:, None] * S0
            ph = np.angle(np.linalg.eigvals(U0))
            ph = np.where(np.abs(ph) < ZERO_PHASE_TOL, 0.0, np.mod(ph, TWO_PI))
            theta0 = self.theta_inf - math.pi * len(self.delta)
            self._F0 = theta0 - math.fsum(ph)
        return self._F0

    def raw_counts(self, ks: np.ndarray, chunk: int = 2048):
        """Crossing counts in ``(0, k]`` (unrounded) and the distance of the
        closest eigenphase to zero, for each ``k``."""
        ks = np.asarray(ks, dtype=float)
        counts = np.empty(len(ks))
        closest = np.empty(len(ks))
        F0 = self.F0()
        for start in range(0, len(ks), chunk):
            kk = ks[start:start + chunk]
            ph = np.angle(np.linalg.eigvals(self.U_batch(kk)))
            closest[start:start + chunk] = np.abs(ph).min(axis=1)
            red = np.mod(ph, TWO_PI)
            # mod can return 2*pi for tiny negative inputs
            red = np.where(red >= TWO_PI, 0.0, red)
            counts[start:start + chunk] = (self.theta(kk) - red.sum(axis=1) - F0) / TWO_PI
        return counts, closest

    def Z(self, k: float) -> float:
        """Real secular function ``Re(det(I - U) exp(-i Theta/2))``."""
        n = self.bonds.size
        z = np.linalg.det(np.eye(n) - self.U(k)) * np.exp(-0.5j * float(self.theta(k)))
        return float(z.real)


def _coupling_value(d: int, chi: float, k: float) -> complex:
    if k == 0:
        return 0.0
    return 2.0 / (d + 1j * chi / k)


def scattering_matrix(g: MetricGraph, k: float | None = None) -> np.ndarray:
    """The bond scattering matrix ``S`` (at ``k`` if delta couplings are present)."""
    sec = _Secular(g)
    if sec.delta and k is None:
        raise ValueError("graph has delta couplings; pass k")
    return sec.S(k if k is not None else 1.0)


def evolution_operator(g: MetricGraph, k: float) -> np.ndarray:
    """``U(k) = D(k) S``."""
    return _Secular(g).U(k)


def eigenphases(g: MetricGraph, k: float, check_unitary: bool = True) -> np.ndarray:
    """Sorted eigenphases of ``U(k)`` in ``(-pi, pi]``."""
    if k <= 0:
        raise DomainError("eigenphases need k > 0")
    U = _Secular(g).U(k)
    if check_unitary:
        err = np.abs(U @ U.conj().T - np.eye(len(U))).max()
        if err > 1e-10:
            raise NumericalConsistencyError(f"U(k) is not unitary (error {err:.2e})")
    ph = np.angle(np.linalg.eigvals(U))
    ph = np.where(ph <= -math.pi, math.pi, ph)
    return np.sort(ph)


def zero_modes(g: MetricGraph, tol: float = 1e-9) -> int:
    """Number of eigenvalues at ``E = 0``.

    A component carries one exactly when it has no Dirichlet or nonzero delta
    vertex and its fluxes are gauge-trivial (every cycle encloses a multiple
    of ``2 pi``).
    """
    check(g)
    count_ = 0
    for comp in g.components():
        cset = set(comp)
        edges = [e for e in g.edges if e.tail in cset]
        if not edges:
            continue
        if any(not g.vertex(v).bc.is_kirchhoff for v in comp):
            continue
        phase = {comp[0]: 0.0}
        stack = [comp[0]]
        adj: dict[int, list] = {}
        for e in edges:
            adj.setdefault(e.tail, []).append((e.head, e.alpha))
            adj.setdefault(e.head, []).append((e.tail, -e.alpha))
        while stack:
            u = stack.pop()
            for w, a in adj.get(u, []):
                if w not in phase:
                    phase[w] = phase[u] + a
                    stack.append(w)
        ok = True
        for e in edges:
            r = math.remainder(phase[e.head] - phase[e.tail] - e.alpha, TWO_PI)
            if abs(r) > tol:
                ok = False
                break
        count_ += ok
    return count_


def count(g: MetricGraph, k: float, tol: float = 1e-9) -> int:
    """Number of eigenvalues ``E_n < k**2`` with multiplicity, zero modes included."""
    if k <= 0:
        raise DomainError("count needs k > 0")
    sec = _Secular(g)
    raw, closest = sec.raw_counts(np.array([k]))
    if closest[0] < tol:
        raise AmbiguousCountError(
            f"k = {k!r} lies within {tol:g} (eigenphase) of an eigenvalue; perturb the energy"
        )
    return zero_modes(g) + _as_int(raw[0])


def _as_int(x: float, tol: float = 1e-6) -> int:
    n = round(x)
    if abs(x - n) > tol:
        raise NumericalConsistencyError(f"winding count {x!r} is not integral")
    return int(n)


@dataclass(frozen=True)
class Spectrum:
    """Distinct wavenumbers ``k`` (sorted) with multiplicities; every level
    with ``k < k_max`` is present.  ``zero_modes`` counts ``E = 0``."""

    k: np.ndarray
    multiplicity: np.ndarray
    zero_modes: int
    k_max: float
    total_length: float = math.nan

    @property
    def mean_spacing(self) -> float:
        """Mean level spacing in ``k`` from the Weyl law, ``pi / sum L_e``."""
        return math.pi / self.total_length

    @property
    def energies(self) -> np.ndarray:
        return self.k ** 2

    @property
    def E_max(self) -> float:
        return self.k_max ** 2

    def levels(self) -> np.ndarray:
        """All energies with multiplicity, zero modes first."""
        return np.concatenate([np.zeros(self.zero_modes), np.repeat(self.k ** 2, self.multiplicity)])

    def wavenumbers(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.zero_modes), np.repeat(self.k, self.multiplicity)])

    def __len__(self) -> int:
        return int(self.zero_modes + self.multiplicity.sum())

    def counting(self, E: float) -> int:
        """``N(E)``: levels strictly below ``E``."""
        if E > self.E_max:
            raise SpectrumError(f"E = {E} beyond certified range {self.E_max}")
        n = self.zero_modes if E > 0 else 0
        if E > 0:
            i = np.searchsorted(self.k, math.sqrt(E), side="left")
            n += int(self.multiplicity[:i].sum())
        return n

    def truncate(self, k_max: float) -> "Spectrum":
        keep = self.k < k_max
        return Spectrum(
            self.k[keep], self.multiplicity[keep], self.zero_modes, min(k_max, self.k_max), self.total_length
        )


def eigenvalues_up_to(
    g: MetricGraph,
    k_max: float,
    tol: float = 1e-13,
    merge_tol: float = 1e-9,
    residual_tol: float = 1e-7,
) -> Spectrum:
    """All eigenvalues with ``k_n < k_max``.

    Wavenumbers are sampled on a grid of step at most ``pi / (2 sum L)``; cells
    whose winding count increases are refined: a single crossing is located
    with Brent's method on the real secular function, several crossings are
    separated by bisection on the count.  Roots closer than ``merge_tol``
    merge into one degenerate level.
    """
    if k_max <= 0:
        raise DomainError("k_max must be positive")
    sec = _Secular(g)
    step = math.pi / (2.0 * sec.total_length)
    m = max(2, int(math.ceil(k_max / step)))
    grid = np.linspace(0.0, k_max, m + 1)
    raw, _ = sec.raw_counts(grid[1:])
    counts = np.concatenate([[0], np.rint(raw).astype(int)])
    bad = np.abs(raw - counts[1:]).max(initial=0.0)
    if bad > 1e-6:
        raise NumericalConsistencyError(f"winding count off an integer by {bad:.2e}")
    if np.any(np.diff(counts) < 0):
        raise NumericalConsistencyError("winding count decreased along k")

    def count_at(x: float) -> int:
        r, _ = sec.raw_counts(np.array([x]))
        return int(round(r[0]))

    roots: list[tuple[float, int]] = []

    def locate(a: float, b: float, ca: int, cb: int):
        c = cb - ca
        if c <= 0:
            return
        width = tol * max(1.0, b)
        if c == 1:
            za, zb = sec.Z(a), sec.Z(b)
            if za == 0.0:
                roots.append((a, 1))
                return
            if zb == 0.0:
                roots.append((b, 1))
                return
            if za * zb < 0:
                r = brentq(sec.Z, a, b, xtol=width, rtol=4 * np.finfo(float).eps, maxiter=200)
                roots.append((r, 1))
                return
        if b - a <= width:
            roots.append((0.5 * (a + b), c))
            return
        mid = 0.5 * (a + b)
        cm = min(max(count_at(mid), ca), cb)
        locate(a, mid, ca, cm)
        locate(mid, b, cm, cb)

    for i in np.nonzero(np.diff(counts))[0]:
        a, b = grid[i], grid[i + 1]
        if a == 0.0:
            # stay clear of k = 0, where phases of U sit exactly at zero
            a = 1e-9 * step
            if count_at(a) != 0:
                raise RefinementError("levels accumulate at k = 0")
        locate(a, b, counts[i], counts[i + 1])

    if sum(c for _, c in roots) != counts[-1]:
        raise NumericalConsistencyError("located levels disagree with the winding count")
    roots.sort()
    ks: list[float] = []
    mult: list[int] = []
    for r, c in roots:
        if ks and r - ks[-1] <= merge_tol:
            # keep the multiplicity-weighted position
            tot = mult[-1] + c
            ks[-1] = (ks[-1] * mult[-1] + r * c) / tot
            mult[-1] = tot
        else:
            ks.append(r)
            mult.append(c)
    k_arr = np.array(ks)
    m_arr = np.array(mult, dtype=int)
    keep = k_arr < k_max
    k_arr, m_arr = k_arr[keep], m_arr[keep]
    if len(k_arr):
        _, closest = sec.raw_counts(k_arr)
        worst = closest.max()
        if worst > residual_tol:
            i = int(closest.argmax())
            raise RefinementError(
                f"located level k = {k_arr[i]!r} leaves eigenphase residual {worst:.2e} > {residual_tol:g}"
            )
    return Spectrum(k_arr, m_arr, zero_modes(g), float(k_max), sec.total_length)


def first_levels(g: MetricGraph, n: int, **kw) -> Spectrum:
    """Certified spectrum containing at least ``n`` levels (zero modes included)."""
    L = total_length(g)
    k_max = math.pi * (n + 2 * len(g.edges) + 4) / L
    while True:
        spec = eigenvalues_up_to(g, k_max, **kw)
        if len(spec) >= n:
            return spec
        k_max *= 1.1


def weyl_ratio(g: MetricGraph, E: float) -> float:
    """``N(E) / sqrt(E)``; tends to ``sum L_e / pi``."""
    if E <= 0:
        raise DomainError("weyl_ratio needs E > 0")
    k = math.sqrt(E)
    return count(g, k) / k


def dirichlet_decouple(g: MetricGraph, points) -> MetricGraph:
    """Insert Dirichlet vertices at interior points ``(edge, s)``, severing the edges there.

    Positions refer to the coordinates of ``g``; several points per edge are allowed.
    """
    check(g)
    by_edge: dict[int, list[float]] = {}
    for e, s in points:
        L = g.edge(e).length
        if not (0.0 < s < L):
            raise DomainError(f"decoupling point {s} outside (0, {L}) on edge {e}")
        by_edge.setdefault(int(e), []).append(float(s))
    out = g
    for e in sorted(by_edge):
        # cut from the head side first so the remaining coordinates stay valid
        for s in sorted(set(by_edge[e]), reverse=True):
            v = out.next_vertex_id()
            out = insert_kirchhoff_vertex(out, e, s)
            verts = tuple(Vertex(x.id, DIRICHLET) if x.id == v else x for x in out.vertices)
            out = MetricGraph(verts, out.edges)
    return out
