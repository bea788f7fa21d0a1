"""Ensembles of graphs sharing a topology and a multiset of edge lengths.

An arrangement is a permutation ``pi`` placing ``lengths[pi[i]]`` on edge
``i``.  Two arrangements one transposition apart differ by an edge swap, so
the arrangements form a regular meta-graph of degree ``|E|(|E|-1)/2`` on
which a uniform random walk moves by random swaps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import chisquare

from . import metric
from .graph import MetricGraph, PreconditionError, check
from .metric import Spectrum
from .shift import interlacing_degree

__all__ = [
    "LengthArrangement",
    "swap_distance",
    "SpectrumCache",
    "WalkResult",
    "walk",
    "visit_uniformity",
    "unfold",
    "unfold_and_spacings",
    "shift_vs_distance",
]

SUMMARY_LEVELS = 200


@dataclass(frozen=True)
class LengthArrangement:
    topology: MetricGraph
    lengths: tuple
    perm: tuple

    def __post_init__(self):
        n = len(self.topology.edges)
        if len(self.lengths) != n:
            raise PreconditionError(f"{len(self.lengths)} lengths for {n} edges")
        if sorted(self.perm) != list(range(n)):
            raise PreconditionError("perm is not a permutation of the edge indices")
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        object.__setattr__(self, "perm", tuple(int(x) for x in self.perm))

    def graph(self) -> MetricGraph:
        edges = [replace(e, length=self.lengths[p]) for e, p in zip(self.topology.edges, self.perm)]
        return check(self.topology.with_edges(edges))

    def swapped(self, i: int, j: int) -> "LengthArrangement":
        p = list(self.perm)
        p[i], p[j] = p[j], p[i]
        return replace(self, perm=tuple(p))


def _cycles(perm) -> int:
    seen = [False] * len(perm)
    c = 0
    for i in range(len(perm)):
        if not seen[i]:
            c += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
    return c


def swap_distance(pi, sigma) -> int:
    """Fewest transpositions turning ``pi`` into ``sigma``: ``n - cycles(sigma pi^-1)``."""
    pi, sigma = list(pi), list(sigma)
    if len(pi) != len(sigma):
        raise PreconditionError("permutations of different size")
    inv = [0] * len(pi)
    for i, p in enumerate(pi):
        inv[p] = i
    return len(pi) - _cycles([sigma[inv[i]] for i in range(len(pi))])


class SpectrumCache:
    """Spectra of arrangements keyed by permutation."""

    def __init__(self, topology: MetricGraph, lengths, n_levels: int = SUMMARY_LEVELS):
        self.topology = topology
        self.lengths = tuple(lengths)
        self.n_levels = n_levels
        self._store: dict[tuple, Spectrum] = {}

    def __len__(self) -> int:
        return len(self._store)

    def get(self, perm) -> Spectrum:
        perm = tuple(int(x) for x in perm)
        if perm not in self._store:
            g = LengthArrangement(self.topology, self.lengths, perm).graph()
            self._store[perm] = metric.first_levels(g, self.n_levels)
        return self._store[perm]


@dataclass
class WalkResult:
    perms: np.ndarray  # (steps + 1, |E|)
    swaps: np.ndarray  # (steps, 2) transposed positions
    seed: int
    cache: SpectrumCache | None = field(default=None, repr=False)

    def distances(self, ref: int = 0) -> np.ndarray:
        """Swap distance of every state from state ``ref``."""
        base = self.perms[ref].tolist()
        return np.array([swap_distance(base, p) for p in self.perms.tolist()])

    def visit_counts(self) -> dict[tuple, int]:
        keys, counts = np.unique(self.perms, axis=0, return_counts=True)
        return {tuple(int(x) for x in k): int(c) for k, c in zip(keys, counts)}

    def summary(self, step: int) -> Spectrum:
        if self.cache is None:
            raise PreconditionError("walk was run without a topology cache")
        return self.cache.get(self.perms[step])


def walk(topology: MetricGraph, lengths, steps: int, seed: int = 0, start=None, n_levels: int = SUMMARY_LEVELS) -> WalkResult:
    """Random walk by uniformly chosen transpositions.

    Spectra along the trajectory are computed lazily through ``result.summary``.
    """
    n = len(topology.edges)
    rng = np.random.default_rng(seed)
    pairs = np.array(list(itertools.combinations(range(n), 2)))
    choice = rng.integers(0, len(pairs), size=steps)
    perms = np.empty((steps + 1, n), dtype=np.int64)
    perms[0] = np.arange(n) if start is None else np.asarray(start)
    cur = perms[0].copy()
    for t, c in enumerate(choice, start=1):
        i, j = pairs[c]
        cur[i], cur[j] = cur[j], cur[i]
        perms[t] = cur
    return WalkResult(perms, pairs[choice].reshape(-1, 2), seed, SpectrumCache(topology, lengths, n_levels))


def visit_uniformity(result: WalkResult, burn_in: int = 0) -> tuple[float, float, int]:
    """Chi-square statistic and p-value of the visit counts against the uniform law on all ``n!`` states."""
    n = result.perms.shape[1]
    n_states = math.factorial(n)
    # encode each permutation by its Lehmer code rank
    perms = result.perms[burn_in:]
    codes = np.zeros(len(perms), dtype=np.int64)
    for i in range(n):
        smaller = (perms[:, i + 1 :] < perms[:, i : i + 1]).sum(axis=1)
        codes = codes * (n - i) + smaller
    counts = np.bincount(codes, minlength=n_states)
    stat, p = chisquare(counts)
    return float(stat), float(p), int((counts > 0).sum())


def unfold(spec: Spectrum, total_length: float | None = None) -> np.ndarray:
    """Weyl-unfolded levels ``x_n = (sum L_e) k_n / pi`` (zero modes dropped)."""
    L = spec.total_length if total_length is None else total_length
    k = np.repeat(spec.k, spec.multiplicity)
    return L * k / math.pi


def unfold_and_spacings(spec: Spectrum, total_length: float | None = None) -> np.ndarray:
    x = unfold(spec, total_length)
    if len(x) < 100:
        raise PreconditionError(f"need at least 100 levels, have {len(x)}")
    return np.diff(x)


def shift_vs_distance(
    topology: MetricGraph, lengths, n_pairs: int, seed: int = 0, n_levels: int = SUMMARY_LEVELS
) -> list[tuple[int, int]]:
    """``(Delta, r*)`` for random arrangement pairs.

    The second arrangement of each pair is reached from the first by
    ``t`` random transpositions with ``t`` cycling through ``0 .. |E|``, so
    small and large distances are both represented.
    """
    n = len(topology.edges)
    rng = np.random.default_rng(seed)
    cache = SpectrumCache(topology, lengths, n_levels)
    rows = []
    for i in range(n_pairs):
        pi = rng.permutation(n)
        sigma = pi.copy()
        for _ in range(i % (n + 1)):
            a, b = rng.choice(n, size=2, replace=False)
            sigma[a], sigma[b] = sigma[b], sigma[a]
        d = swap_distance(pi, sigma)
        r = interlacing_degree(cache.get(pi), cache.get(sigma))
        rows.append((d, r))
    return rows
