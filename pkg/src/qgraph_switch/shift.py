"""Spectral shift between two metric graphs and the interlacing degree.

``xi(E) = N_A(E) - N_B(E)`` with strict counting.  The interlacing degree of
two sorted level lists is the smallest ``r`` with ``a_{n-r} <= b_n <= a_{n+r}``
for all ``n``, which equals ``max_E |xi(E)|``.  Both are evaluated only on a
common certified range, cut one mean level spacing below the smaller ``k_max``
so that missing levels above the cut cannot fake a violation.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import metric
from .graph import EdgeEndpoint, MetricGraph, PreconditionError, total_length
from .metric import AmbiguousCountError, Spectrum, SpectrumError
from .transform import edge_crossing, edge_reversal, edge_switch

__all__ = [
    "ShiftReport",
    "InsufficientDataError",
    "common_cut",
    "counting_shift",
    "interlacing_degree",
    "degree_from_levels",
    "index_degree",
    "sample_wavenumbers",
    "histogram_from_spectra",
    "shift_histogram",
    "shift_report",
    "AdditivityReport",
    "additivity_check",
    "switch_as_crossing_limit",
]

TIE_RTOL = 1e-9  # levels of A and B closer than this (relative in k) count as coincident
MIN_LEVELS = 10


class InsufficientDataError(SpectrumError):
    pass


def common_cut(a: Spectrum, b: Spectrum) -> float:
    """Largest ``k`` below which both spectra are trusted."""
    k = min(a.k_max, b.k_max)
    guard = max(a.mean_spacing, b.mean_spacing)
    return k - (guard if math.isfinite(guard) else 0.0)


def counting_shift(a: Spectrum, b: Spectrum, E: float, tol: float = 1e-9) -> int:
    """``N_A(E) - N_B(E)``."""
    if E >= min(a.E_max, b.E_max):
        raise SpectrumError(f"E = {E} beyond the certified range {min(a.E_max, b.E_max)}")
    for s in (a, b):
        lv = s.levels()
        if lv.size and np.min(np.abs(lv - E)) < tol * max(1.0, abs(E)):
            raise AmbiguousCountError(f"E = {E} lies on an eigenvalue")
    return a.counting(E) - b.counting(E)


def degree_from_levels(ka: np.ndarray, kb: np.ndarray, tie_rtol: float = TIE_RTOL) -> int:
    """``max |N_A - N_B|`` over all gaps of two sorted level lists (in ``k`` or ``E``).

    Levels of the two lists closer than ``tie_rtol`` are treated as equal, so
    rounding noise at a shared eigenvalue does not register as a shift.
    """
    ka, kb = np.sort(np.asarray(ka, float)), np.sort(np.asarray(kb, float))
    pts = np.sort(np.concatenate([ka, kb]))
    if pts.size == 0:
        return 0
    # evaluate just above each cluster of nearly coincident points
    scale = np.maximum(np.abs(pts), 1.0)
    last = np.r_[np.diff(pts) > tie_rtol * scale[1:], True]
    top = pts[last]
    na = np.searchsorted(ka, top, side="right")
    nb = np.searchsorted(kb, top, side="right")
    return int(np.abs(na - nb).max(initial=0))


def index_degree(a: np.ndarray, b: np.ndarray, tie_rtol: float = TIE_RTOL) -> int:
    """Smallest ``r`` with ``b_n <= a_{n+r}`` and ``a_n <= b_{n+r}`` for all ``n``.

    Lists are padded with ``+inf``: the levels above a common cut are unknown
    but certainly above every listed level.
    """
    a, b = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    n = max(len(a), len(b))
    for r in range(n + 1):
        ok = True
        for x, y in ((a, b), (b, a)):
            # y_i <= x_{i+r}
            m = max(len(x) - r, 0)
            yy, xx = y[:m], x[r : r + m]
            if np.any(yy > xx * (1 + tie_rtol) + tie_rtol):
                ok = False
                break
        if ok:
            return r
    return n


def _truncated(a: Spectrum, b: Spectrum, cut: float | None = None):
    cut = common_cut(a, b) if cut is None else cut
    ka, kb = a.wavenumbers(), b.wavenumbers()
    ka, kb = ka[ka < cut], kb[kb < cut]
    if min(len(ka), len(kb)) < MIN_LEVELS:
        raise InsufficientDataError(f"need at least {MIN_LEVELS} levels in the common range, have {min(len(ka), len(kb))}")
    return ka, kb, cut


def interlacing_degree(a: Spectrum, b: Spectrum) -> int:
    """Interlacing degree over the common certified range."""
    ka, kb, _ = _truncated(a, b)
    return degree_from_levels(ka, kb)


def sample_wavenumbers(spectra, k_cut: float, n: int, rng: np.random.Generator, tol: float = 1e-9):
    """``n`` values uniform in ``(0, k_cut)`` at relative distance ``>= tol`` from every level.

    Returns the samples and the number of redrawn values.
    """
    levels = np.unique(np.concatenate([s.wavenumbers() for s in spectra]))
    out = np.empty(0)
    redrawn = 0
    while out.size < n:
        k = rng.uniform(0.0, k_cut, size=n - out.size)
        i = np.clip(np.searchsorted(levels, k), 1, max(len(levels) - 1, 1))
        if levels.size:
            near = np.minimum(np.abs(k - levels[i - 1]), np.abs(k - levels[np.minimum(i, len(levels) - 1)]))
            good = (near >= tol * np.maximum(k, 1.0)) & (k > 0)
        else:
            good = k > 0
        redrawn += int((~good).sum())
        out = np.concatenate([out, k[good]])
    return out, redrawn


def histogram_from_spectra(a: Spectrum, b: Spectrum, n_samples: int, seed: int = 0):
    """Sample ``xi(E)`` with ``sqrt E`` uniform on the common range.

    Returns ``(counter, dN, k_samples, redrawn)``.
    """
    rng = np.random.default_rng(seed)
    ka, kb, cut = _truncated(a, b)
    ks, redrawn = sample_wavenumbers([a, b], cut, n_samples, rng)
    dN = np.searchsorted(ka, ks, side="left") - np.searchsorted(kb, ks, side="left")
    return Counter(dN.tolist()), dN, ks, redrawn


@dataclass
class ShiftReport:
    k: np.ndarray
    dN: np.ndarray
    degree: int
    histogram: dict
    redrawn: int
    metadata: dict = field(default_factory=dict)

    @property
    def max_abs(self) -> int:
        return int(np.abs(self.dN).max(initial=0))

    def histogram_rows(self) -> list[tuple[int, int]]:
        return sorted(self.histogram.items())

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "max_abs_dN": self.max_abs,
            "histogram": {str(k): v for k, v in self.histogram_rows()},
            "samples": int(len(self.dN)),
            "redrawn": self.redrawn,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def shift_report(a: Spectrum, b: Spectrum, n_samples: int = 10_000, seed: int = 0, metadata=None) -> ShiftReport:
    hist, dN, ks, redrawn = histogram_from_spectra(a, b, n_samples, seed)
    ka, kb, cut = _truncated(a, b)
    meta = {"levels_a": int(len(ka)), "levels_b": int(len(kb)), "k_cut": cut, "seed": seed}
    meta.update(metadata or {})
    return ShiftReport(ks, dN, degree_from_levels(ka, kb), dict(hist), redrawn, meta)


def shift_histogram(ga: MetricGraph, gb: MetricGraph, n_levels: int, n_samples: int, seed: int = 0) -> ShiftReport:
    """Histogram of ``xi`` at energies with ``sqrt E`` uniform, from ``n_levels`` levels of each graph."""
    a = metric.first_levels(ga, n_levels)
    b = metric.first_levels(gb, n_levels)
    return shift_report(a, b, n_samples, seed, {"n_levels": n_levels})


@dataclass(frozen=True)
class AdditivityReport:
    residual: int
    xi: np.ndarray  # xi(E; H, H~)
    xi_0: np.ndarray  # xi(E; H, H0)
    xi_0t: np.ndarray  # xi(E; H~, H0 of the transformed graph)
    decoupled_mismatch: int  # max |N(H0) - N(H0 of the transformed graph)|
    redrawn: int


def additivity_check(
    g: MetricGraph,
    transformed: MetricGraph,
    cut_points,
    n_energies: int = 200,
    seed: int = 0,
    n_levels: int = 200,
) -> AdditivityReport:
    """Compare ``xi(H, H~)`` with ``xi(H, H0) - xi(H~, H0)``.

    ``H0`` is decoupled separately from ``g`` and from ``transformed`` at the
    same cut points, so the identity is tested rather than assumed.
    """
    L = total_length(g)
    k_max = math.pi * (n_levels + 2 * len(g.edges) + 4) / L
    graphs = [g, transformed, metric.dirichlet_decouple(g, cut_points), metric.dirichlet_decouple(transformed, cut_points)]
    specs = [metric.eigenvalues_up_to(x, k_max) for x in graphs]
    rng = np.random.default_rng(seed)
    ks, redrawn = sample_wavenumbers(specs, k_max, n_energies, rng)
    N = [np.searchsorted(s.wavenumbers(), ks, side="left") for s in specs]
    xi = N[0] - N[1]
    xi0 = N[0] - N[2]
    xi0t = N[1] - N[3]
    res = int(np.abs(xi - (xi0 - xi0t)).max(initial=0))
    return AdditivityReport(res, xi, xi0, xi0t, int(np.abs(N[2] - N[3]).max(initial=0)), redrawn)


def _head_oriented(g: MetricGraph, p: EdgeEndpoint) -> MetricGraph:
    return edge_reversal(g, p.edge) if p.end == "tail" else g


def switch_as_crossing_limit(
    g: MetricGraph, p: EdgeEndpoint, q: EdgeEndpoint, eps_sequence, n_levels: int = 20
) -> list[tuple[float, np.ndarray]]:
    """Errors ``|k_n(eps) - k_n(switch)|`` for the first ``n_levels`` levels.

    The ``eps``-crossing cuts both edges at distance ``eps`` from the switched
    ends and crosses them there.  For vanishing magnetic phases the crossed
    graph coincides with the switched one at every ``eps``; with phases the
    short pieces carry their share of the phase and the error is ``O(eps)``.
    """
    eps = [float(x) for x in eps_sequence]
    if any(x <= 0 for x in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise PreconditionError("eps_sequence must be positive and strictly decreasing")
    half = min(g.edge(p.edge).length, g.edge(q.edge).length) / 2
    if eps[0] >= half:
        raise PreconditionError(f"eps = {eps[0]} must be below half the shorter edge ({half})")
    ref = metric.first_levels(edge_switch(g, p, q), n_levels).wavenumbers()[:n_levels]
    h = _head_oriented(_head_oriented(g, p), q)
    Le, Lf = h.edge(p.edge).length, h.edge(q.edge).length
    rows = []
    for x in eps:
        crossed = edge_crossing(h, p.edge, Le - x, q.edge, Lf - x)
        k = metric.first_levels(crossed, n_levels).wavenumbers()[:n_levels]
        rows.append((x, np.abs(k - ref)))
    return rows
