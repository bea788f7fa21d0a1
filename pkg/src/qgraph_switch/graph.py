"""Compact metric graphs with local vertex conditions.

Graphs are immutable values. Every edit returns a new graph; vertex and edge
ids are stable integers and new ids are always ``max(existing) + 1`` so that
edit sequences replay deterministically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

__all__ = [
    "BC",
    "KIRCHHOFF",
    "DIRICHLET",
    "Vertex",
    "Edge",
    "EdgeEndpoint",
    "MetricGraph",
    "ValidationReport",
    "GraphError",
    "PreconditionError",
    "DomainError",
    "validate",
    "check",
    "total_length",
    "insert_kirchhoff_vertex",
    "remove_kirchhoff_degree2",
    "canonical",
    "same_graph",
]


class GraphError(ValueError):
    """A graph failed validation."""


class PreconditionError(ValueError):
    """An operation was applied outside its precondition."""


class DomainError(ValueError):
    """A numeric parameter lies outside its admissible range."""


@dataclass(frozen=True)
class BC:
    """Vertex condition: ``kirchhoff``, ``dirichlet`` or ``delta`` with a strength."""

    kind: str = "kirchhoff"
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in ("kirchhoff", "dirichlet", "delta"):
            raise GraphError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "delta" and not math.isfinite(self.strength):
            raise GraphError("delta strength must be finite")

    @classmethod
    def delta(cls, strength: float) -> "BC":
        return cls("delta", float(strength))

    @property
    def is_kirchhoff(self) -> bool:
        # delta(0) is Kirchhoff
        return self.kind == "kirchhoff" or (self.kind == "delta" and self.strength == 0.0)

    def to_json(self):
        if self.kind == "delta":
            return {"delta": self.strength}
        return self.kind

    @classmethod
    def from_json(cls, obj) -> "BC":
        if isinstance(obj, str):
            return cls(obj.lower())
        if isinstance(obj, dict) and set(obj) == {"delta"}:
            return cls.delta(obj["delta"])
        raise GraphError(f"cannot parse boundary condition {obj!r}")


KIRCHHOFF = BC("kirchhoff")
DIRICHLET = BC("dirichlet")


@dataclass(frozen=True)
class Vertex:
    id: int
    bc: BC = KIRCHHOFF


@dataclass(frozen=True)
class Edge:
    """A metrized edge from ``tail`` to ``head``.

    ``alpha`` is the line integral of the magnetic potential along the edge,
    measured in the tail-to-head direction.
    """

    id: int
    tail: int
    head: int
    length: float
    alpha: float = 0.0

    def end_vertex(self, end: str) -> int:
        return self.tail if end == "tail" else self.head


@dataclass(frozen=True)
class EdgeEndpoint:
    edge: int
    end: str  # "tail" or "head"

    def __post_init__(self):
        if self.end not in ("tail", "head"):
            raise PreconditionError(f"endpoint must be 'tail' or 'head', got {self.end!r}")


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    message: str = ""

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    _vindex: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _eindex: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices, key=lambda v: v.id)))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.id)))
        object.__setattr__(self, "_vindex", {v.id: v for v in self.vertices})
        object.__setattr__(self, "_eindex", {e.id: e for e in self.edges})

    # lookups -------------------------------------------------------------

    def vertex(self, vid: int) -> Vertex:
        try:
            return self._vindex[vid]
        except KeyError:
            raise PreconditionError(f"no vertex with id {vid}") from None

    def edge(self, eid: int) -> Edge:
        try:
            return self._eindex[eid]
        except KeyError:
            raise PreconditionError(f"no edge with id {eid}") from None

    def has_edge(self, eid: int) -> bool:
        return eid in self._eindex

    @property
    def vertex_ids(self) -> list[int]:
        return [v.id for v in self.vertices]

    @property
    def edge_ids(self) -> list[int]:
        return [e.id for e in self.edges]

    def next_vertex_id(self) -> int:
        return max(self._vindex, default=-1) + 1

    def next_edge_id(self) -> int:
        return max(self._eindex, default=-1) + 1

    def incidences(self, vid: int) -> list[EdgeEndpoint]:
        """Edge ends attached to ``vid``; a loop contributes two."""
        out = []
        for e in self.edges:
            if e.tail == vid:
                out.append(EdgeEndpoint(e.id, "tail"))
            if e.head == vid:
                out.append(EdgeEndpoint(e.id, "head"))
        return out

    def degree(self, vid: int) -> int:
        return len(self.incidences(vid))

    def degrees(self) -> dict[int, int]:
        deg = {v.id: 0 for v in self.vertices}
        for e in self.edges:
            deg[e.tail] += 1
            deg[e.head] += 1
        return deg

    def endpoint_vertex(self, p: EdgeEndpoint) -> int:
        return self.edge(p.edge).end_vertex(p.end)

    def lengths(self) -> list[float]:
        return [e.length for e in self.edges]

    def components(self) -> list[list[int]]:
        """Vertex sets of connected components (isolated vertices included)."""
        parent = {v: v for v in self._vindex}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            ra, rb = find(e.tail), find(e.head)
            if ra != rb:
                parent[ra] = rb
        groups: dict[int, list[int]] = {}
        for v in self._vindex:
            groups.setdefault(find(v), []).append(v)
        return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])

    # construction helpers -----------------------------------------------

    def with_edges(self, edges: Iterable[Edge]) -> "MetricGraph":
        return MetricGraph(self.vertices, tuple(edges))

    def replace_edge(self, edge: Edge) -> "MetricGraph":
        return self.with_edges(edge if e.id == edge.id else e for e in self.edges)

    @classmethod
    def build(cls, n_vertices: int, edges, bc=None) -> "MetricGraph":
        """Shorthand: ``edges`` is a list of ``(tail, head, length[, alpha])``.

        ``bc`` maps vertex id to a :class:`BC`; unspecified vertices are Kirchhoff.
        """
        bc = bc or {}
        verts = tuple(Vertex(i, bc.get(i, KIRCHHOFF)) for i in range(n_vertices))
        es = []
        for i, item in enumerate(edges):
            tail, head, length, *rest = item
            es.append(Edge(i, int(tail), int(head), float(length), float(rest[0]) if rest else 0.0))
        return cls(verts, tuple(es))

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v.id, "bc": v.bc.to_json()} for v in self.vertices],
            "edges": [
                {"id": e.id, "tail": e.tail, "head": e.head, "length": e.length, "alpha": e.alpha}
                for e in self.edges
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricGraph":
        try:
            verts = tuple(
                Vertex(int(v["id"]), BC.from_json(v.get("bc", "kirchhoff"))) for v in data["vertices"]
            )
            edges = tuple(
                Edge(
                    int(e["id"]),
                    int(e["tail"]),
                    int(e["head"]),
                    float(e["length"]),
                    float(e.get("alpha", 0.0)),
                )
                for e in data["edges"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"malformed graph description: {exc}") from exc
        return cls(verts, edges)

    @classmethod
    def from_json(cls, text: str) -> "MetricGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def validate(g: MetricGraph) -> ValidationReport:
    """Check the graph invariants and report the first violation."""
    vids = [v.id for v in g.vertices]
    if len(set(vids)) != len(vids):
        return ValidationReport(False, "duplicate vertex id")
    eids = [e.id for e in g.edges]
    if len(set(eids)) != len(eids):
        return ValidationReport(False, "duplicate edge id")
    known = set(vids)
    for e in g.edges:
        for vid in (e.tail, e.head):
            if vid not in known:
                return ValidationReport(False, f"dangling incidence: edge {e.id} references missing vertex {vid}")
        if not math.isfinite(e.length):
            return ValidationReport(False, f"nonfinite length on edge {e.id}")
        if e.length <= 0.0:
            return ValidationReport(False, f"nonpositive length on edge {e.id}")
        if not math.isfinite(e.alpha):
            return ValidationReport(False, f"nonfinite alpha on edge {e.id}")
    if not g.edges:
        return ValidationReport(False, "graph has no edges (total length must be positive)")
    return ValidationReport(True, "ok")


def check(g: MetricGraph) -> MetricGraph:
    report = validate(g)
    if not report.ok:
        raise GraphError(report.message)
    return g


def total_length(g: MetricGraph) -> float:
    return math.fsum(e.length for e in g.edges)


def insert_kirchhoff_vertex(g: MetricGraph, e: int, s: float) -> MetricGraph:
    """Split edge ``e`` at distance ``s`` from its tail by a degree-2 Kirchhoff vertex.

    Edge ``e`` keeps its id and becomes the tail segment; the head segment gets
    id ``g.next_edge_id()`` and the new vertex ``g.next_vertex_id()``.
    """
    edge = g.edge(e)
    if not (0.0 < s < edge.length):
        raise DomainError(f"cut position {s} outside (0, {edge.length}) on edge {e}")
    v = g.next_vertex_id()
    frac = s / edge.length
    first = replace(edge, head=v, length=s, alpha=edge.alpha * frac)
    second = Edge(g.next_edge_id(), v, edge.head, edge.length - s, edge.alpha * (1.0 - frac))
    edges = [first if x.id == e else x for x in g.edges] + [second]
    return MetricGraph(g.vertices + (Vertex(v, KIRCHHOFF),), tuple(edges))


def remove_kirchhoff_degree2(g: MetricGraph, v: int) -> MetricGraph:
    """Merge the two edges at a degree-2 Kirchhoff vertex into one.

    The merged edge keeps the smaller of the two ids and runs from the far
    end of that edge, through ``v``, to the far end of the other.
    """
    vert = g.vertex(v)
    if not vert.bc.is_kirchhoff:
        raise PreconditionError(f"vertex {v} is not Kirchhoff")
    inc = g.incidences(v)
    if len(inc) != 2:
        raise PreconditionError(f"vertex {v} has degree {len(inc)}, expected 2")
    if inc[0].edge == inc[1].edge:
        raise PreconditionError(f"vertex {v} carries a loop; cannot merge an edge with itself")
    e1, e2 = sorted((g.edge(p.edge) for p in inc), key=lambda x: x.id)
    # walk e1 towards v, then e2 away from v
    if e1.head == v:
        start, a1 = e1.tail, e1.alpha
    else:
        start, a1 = e1.head, -e1.alpha
    if e2.tail == v:
        stop, a2 = e2.head, e2.alpha
    else:
        stop, a2 = e2.tail, -e2.alpha
    merged = Edge(e1.id, start, stop, e1.length + e2.length, a1 + a2)
    edges = [merged if x.id == e1.id else x for x in g.edges if x.id != e2.id]
    verts = tuple(x for x in g.vertices if x.id != v)
    return MetricGraph(verts, tuple(edges))


def canonical(g: MetricGraph, digits: int = 10) -> str:
    """Serialization with ids renumbered by rank and reals rounded.

    Two graphs equal up to id relabeling by an order-preserving map, and up
    to rounding, share the same canonical string.
    """
    vmap = {v.id: i for i, v in enumerate(g.vertices)}
    data = {
        "vertices": [[vmap[v.id], v.bc.kind, round(v.bc.strength, digits)] for v in g.vertices],
        "edges": [
            [vmap[e.tail], vmap[e.head], round(e.length, digits), round(e.alpha, digits) + 0.0]
            for e in g.edges
        ],
    }
    return json.dumps(data, separators=(",", ":"))


def same_graph(a: MetricGraph, b: MetricGraph, rtol: float = 1e-12) -> bool:
    """Equality up to order-preserving id relabeling, reals compared to ``rtol``."""
    if len(a.vertices) != len(b.vertices) or len(a.edges) != len(b.edges):
        return False
    va = {v.id: i for i, v in enumerate(a.vertices)}
    vb = {v.id: i for i, v in enumerate(b.vertices)}
    for x, y in zip(a.vertices, b.vertices):
        if x.bc != y.bc:
            return False
    for x, y in zip(a.edges, b.edges):
        if (va[x.tail], va[x.head]) != (vb[y.tail], vb[y.head]):
            return False
        if not math.isclose(x.length, y.length, rel_tol=rtol, abs_tol=0.0):
            return False
        if not math.isclose(x.alpha, y.alpha, rel_tol=rtol, abs_tol=rtol):
            return False
    return True
