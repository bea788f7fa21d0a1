"""Standard graphs used by tests, the CLI and the experiments."""

from __future__ import annotations

import math

import numpy as np

from .graph import BC, DIRICHLET, KIRCHHOFF, Edge, MetricGraph, Vertex

# Rationally independent stand-in lengths for the tetrahedron experiment.
TETRA_RAW = (math.sqrt(2), math.sqrt(3), math.sqrt(5), math.sqrt(6), math.sqrt(7), math.sqrt(10))
TETRA_TOTAL = 11.2
K4_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def tetra_lengths() -> list[float]:
    s = math.fsum(TETRA_RAW)
    return [TETRA_TOTAL * x / s for x in TETRA_RAW]


def interval(length: float = 1.0, bc: BC = DIRICHLET) -> MetricGraph:
    return MetricGraph.build(2, [(0, 1, length)], {0: bc, 1: bc})


def loop(length: float = 1.0, alpha: float = 0.0) -> MetricGraph:
    return MetricGraph.build(1, [(0, 0, length, alpha)])


def star(lengths, tip_bc: BC = DIRICHLET, center_bc: BC = KIRCHHOFF) -> MetricGraph:
    n = len(lengths)
    bc = {0: center_bc, **{i + 1: tip_bc for i in range(n)}}
    return MetricGraph.build(n + 1, [(0, i + 1, L) for i, L in enumerate(lengths)], bc)


def cycle(lengths) -> MetricGraph:
    n = len(lengths)
    return MetricGraph.build(n, [(i, (i + 1) % n, L) for i, L in enumerate(lengths)])


def tetrahedron(lengths=None, alphas=None) -> MetricGraph:
    lengths = tetra_lengths() if lengths is None else list(lengths)
    alphas = [0.0] * 6 if alphas is None else list(alphas)
    return MetricGraph.build(4, [(u, v, L, a) for (u, v), L, a in zip(K4_EDGES, lengths, alphas)])


def random_graph(
    rng: np.random.Generator,
    n_edges: tuple[int, int] = (5, 8),
    n_vertices: tuple[int, int] = (3, 5),
    length_range: tuple[float, float] = (0.5, 3.0),
    mixed_bc: bool = False,
    magnetic: bool = False,
) -> MetricGraph:
    """Random multigraph with i.i.d. uniform lengths; loops and parallel edges allowed."""
    nv = int(rng.integers(n_vertices[0], n_vertices[1] + 1))
    ne = int(rng.integers(n_edges[0], n_edges[1] + 1))
    verts = []
    for i in range(nv):
        bc = KIRCHHOFF
        if mixed_bc:
            r = rng.random()
            if r < 0.2:
                bc = DIRICHLET
            elif r < 0.35:
                bc = BC.delta(float(rng.uniform(0.0, 5.0)))
        verts.append(Vertex(i, bc))
    edges = []
    for j in range(ne):
        if j < nv - 1:
            # spanning path keeps most samples connected
            u, v = j, j + 1
        else:
            u, v = (int(x) for x in rng.integers(0, nv, size=2))
        L = float(rng.uniform(*length_range))
        a = float(rng.uniform(-math.pi, math.pi)) if magnetic else 0.0
        edges.append(Edge(j, u, v, L, a))
    return MetricGraph(tuple(verts), tuple(edges))
