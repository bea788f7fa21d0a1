"""Edge switch and the rewirings generated from it.

Composite edits (crossing, segment exchange) are *defined* by their
decomposition into vertex insertions, one switch and vertex removals, so
replaying :func:`decompose` is the same computation as applying the edit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable

from .graph import (
    DomainError,
    EdgeEndpoint,
    MetricGraph,
    PreconditionError,
    check,
    insert_kirchhoff_vertex,
    remove_kirchhoff_degree2,
)

__all__ = [
    "Transformation",
    "SHIFT_BOUND",
    "edge_switch",
    "edge_crossing",
    "edge_reversal",
    "edge_swap",
    "segment_exchange",
    "apply",
    "apply_all",
    "decompose",
    "replay",
    "shift_bound",
    "read_log",
    "write_log",
]

# Interlacing degree guaranteed for each edit.
SHIFT_BOUND = {
    "switch": 1,
    "crossing": 1,
    "reversal": 1,
    "swap": 2,
    "segment_exchange": 2,
    "insert": 0,
    "remove": 0,
}

KINDS = tuple(SHIFT_BOUND)


@dataclass(frozen=True, eq=True)
class Transformation:
    """A replayable edit. ``params`` holds JSON-compatible values only."""

    kind: str
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown transformation kind {self.kind!r}")

    # constructors
    @classmethod
    def switch(cls, p: EdgeEndpoint, q: EdgeEndpoint) -> "Transformation":
        return cls("switch", {"p": [p.edge, p.end], "q": [q.edge, q.end]})

    @classmethod
    def crossing(cls, e: int, s_e: float, f: int, s_f: float) -> "Transformation":
        return cls("crossing", {"e": e, "s_e": s_e, "f": f, "s_f": s_f})

    @classmethod
    def reversal(cls, e: int) -> "Transformation":
        return cls("reversal", {"e": e})

    @classmethod
    def swap(cls, e: int, f: int) -> "Transformation":
        return cls("swap", {"e": e, "f": f})

    @classmethod
    def segment_exchange(cls, e: int, s: tuple[float, float], f: int, t: tuple[float, float]) -> "Transformation":
        return cls("segment_exchange", {"e": e, "s": list(s), "f": f, "t": list(t)})

    @classmethod
    def insert(cls, e: int, s: float) -> "Transformation":
        return cls("insert", {"e": e, "s": s})

    @classmethod
    def remove(cls, v: int) -> "Transformation":
        return cls("remove", {"v": v})

    @property
    def description(self) -> str:
        p = self.params
        if self.kind == "switch":
            return f"switch {p['p'][1]} of edge {p['p'][0]} with {p['q'][1]} of edge {p['q'][0]}"
        if self.kind == "crossing":
            return f"cross edge {p['e']} at {p['s_e']:g} with edge {p['f']} at {p['s_f']:g}"
        if self.kind == "reversal":
            return f"reverse edge {p['e']}"
        if self.kind == "swap":
            return f"swap edges {p['e']} and {p['f']}"
        if self.kind == "segment_exchange":
            return f"exchange segment {p['s']} of edge {p['e']} with {p['t']} of edge {p['f']}"
        if self.kind == "insert":
            return f"insert Kirchhoff vertex on edge {p['e']} at {p['s']:g}"
        return f"remove degree-2 vertex {p['v']}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "Transformation":
        data = dict(data)
        kind = data.pop("kind", None)
        if kind is None:
            raise PreconditionError("transformation record lacks 'kind'")
        data.pop("description", None)
        return cls(kind, data)


def _endpoint(x) -> EdgeEndpoint:
    if isinstance(x, EdgeEndpoint):
        return x
    return EdgeEndpoint(int(x[0]), str(x[1]))


def edge_switch(g: MetricGraph, p: EdgeEndpoint, q: EdgeEndpoint) -> MetricGraph:
    """Exchange the vertex attachments of two edge ends.

    Each moved end keeps its role (a tail stays a tail), so lengths, alphas
    and all vertex conditions are untouched.
    """
    check(g)
    p, q = _endpoint(p), _endpoint(q)
    if p.edge == q.edge:
        raise PreconditionError("both endpoints lie on one edge; that is a reversal, not a switch")
    ep, eq = g.edge(p.edge), g.edge(q.edge)
    vp, vq = ep.end_vertex(p.end), eq.end_vertex(q.end)
    ep = replace(ep, **{p.end: vq})
    eq = replace(eq, **{q.end: vp})
    return g.replace_edge(ep).replace_edge(eq)


def _crossing_steps(g: MetricGraph, e: int, s_e: float, f: int, s_f: float) -> list[Transformation]:
    if e == f:
        raise PreconditionError("crossing needs two distinct edges")
    for eid, s in ((e, s_e), (f, s_f)):
        L = g.edge(eid).length
        if not (0.0 < s < L):
            raise DomainError(f"cut position {s} outside (0, {L}) on edge {eid}")
    x = g.next_vertex_id()
    return [
        Transformation.insert(e, s_e),
        Transformation.insert(f, s_f),
        Transformation.switch(EdgeEndpoint(e, "head"), EdgeEndpoint(f, "head")),
        Transformation.remove(x),
        Transformation.remove(x + 1),
    ]


def edge_crossing(g: MetricGraph, e: int, s_e: float, f: int, s_f: float) -> MetricGraph:
    """Cut ``e`` and ``f`` and rejoin the tail piece of each with the head piece of the other.

    Afterwards edge ``e`` runs tail(e) -> head(f) with length ``s_e + L_f - s_f``,
    edge ``f`` runs tail(f) -> head(e).
    """
    check(g)
    return replay(g, _crossing_steps(g, e, s_e, f, s_f))


def edge_reversal(g: MetricGraph, e: int) -> MetricGraph:
    check(g)
    edge = g.edge(e)
    return g.replace_edge(replace(edge, tail=edge.head, head=edge.tail, alpha=-edge.alpha))


def edge_swap(g: MetricGraph, e: int, f: int) -> MetricGraph:
    """Exchange the (length, alpha) payloads of two edges; incidences stay."""
    check(g)
    if e == f:
        raise PreconditionError("swap needs two distinct edges")
    a, b = g.edge(e), g.edge(f)
    return g.replace_edge(replace(a, length=b.length, alpha=b.alpha)).replace_edge(
        replace(b, length=a.length, alpha=a.alpha)
    )


def _segment_crossings(g: MetricGraph, e: int, s, f: int, t) -> tuple[Transformation, Transformation]:
    s1, s2 = (float(x) for x in s)
    t1, t2 = (float(x) for x in t)
    if e == f:
        raise PreconditionError("segment exchange needs two distinct edges")
    Le, Lf = g.edge(e).length, g.edge(f).length
    if not (0.0 < s1 < s2 < Le):
        raise DomainError(f"segment [{s1}, {s2}] is not a proper interior interval of edge {e}")
    if not (0.0 < t1 < t2 < Lf):
        raise DomainError(f"segment [{t1}, {t2}] is not a proper interior interval of edge {f}")
    first = Transformation.crossing(e, s1, f, t1)
    # after the first crossing e = e[0,s1] + f[t1,Lf] and f = f[0,t1] + e[s1,Le]
    second = Transformation.crossing(e, s1 + (t2 - t1), f, t1 + (s2 - s1))
    return first, second


def segment_exchange(g: MetricGraph, e: int, s, f: int, t) -> MetricGraph:
    """Exchange the middle segment ``s`` of ``e`` with the middle segment ``t`` of ``f``."""
    check(g)
    first, second = _segment_crossings(g, e, s, f, t)
    return apply(apply(g, first), second)


def apply(g: MetricGraph, t: Transformation) -> MetricGraph:
    p = t.params
    if t.kind == "switch":
        return edge_switch(g, _endpoint(p["p"]), _endpoint(p["q"]))
    if t.kind == "crossing":
        return edge_crossing(g, int(p["e"]), float(p["s_e"]), int(p["f"]), float(p["s_f"]))
    if t.kind == "reversal":
        return edge_reversal(g, int(p["e"]))
    if t.kind == "swap":
        return edge_swap(g, int(p["e"]), int(p["f"]))
    if t.kind == "segment_exchange":
        return segment_exchange(g, int(p["e"]), p["s"], int(p["f"]), p["t"])
    if t.kind == "insert":
        return insert_kirchhoff_vertex(check(g), int(p["e"]), float(p["s"]))
    return remove_kirchhoff_degree2(check(g), int(p["v"]))


def apply_all(g: MetricGraph, ts: Iterable[Transformation]) -> MetricGraph:
    for t in ts:
        g = apply(g, t)
    return g


def decompose(t: Transformation, g: MetricGraph) -> list[Transformation]:
    """Primitive insert/switch/remove sequence equivalent to ``t`` on ``g``.

    ``g`` is needed because the primitives name the ids of inserted vertices.
    Primitive kinds come back as a one-element list.
    """
    p = t.params
    if t.kind == "crossing":
        return _crossing_steps(g, int(p["e"]), float(p["s_e"]), int(p["f"]), float(p["s_f"]))
    if t.kind == "segment_exchange":
        first, second = _segment_crossings(g, int(p["e"]), p["s"], int(p["f"]), p["t"])
        steps = decompose(first, g)
        mid = replay(g, steps)
        return steps + decompose(second, mid)
    return [t]


def replay(g: MetricGraph, steps: Iterable[Transformation]) -> MetricGraph:
    for step in steps:
        g = apply(g, step)
    return g


def shift_bound(ts: Iterable[Transformation]) -> int:
    """Interlacing degree guaranteed for a sequence of edits (bounds add up)."""
    return sum(SHIFT_BOUND[t.kind] for t in ts)


def read_log(text: str) -> list[Transformation]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.append(Transformation.from_dict(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"transformation log line {n}: {exc}") from exc
    return out


def write_log(ts: Iterable[Transformation]) -> str:
    return "".join(t.to_json() + "\n" for t in ts)
