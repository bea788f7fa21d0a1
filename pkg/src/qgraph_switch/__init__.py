"""Spectra of quantum graphs under edge switching and related rewirings."""

from .graph import (
    BC,
    DIRICHLET,
    KIRCHHOFF,
    DomainError,
    Edge,
    EdgeEndpoint,
    GraphError,
    MetricGraph,
    PreconditionError,
    Vertex,
    validate,
)
from .metric import Spectrum, count, eigenvalues_up_to, first_levels
from .shift import interlacing_degree
from .transform import Transformation, apply, edge_crossing, edge_reversal, edge_swap, edge_switch, segment_exchange

__all__ = [
    "BC",
    "DIRICHLET",
    "KIRCHHOFF",
    "DomainError",
    "Edge",
    "EdgeEndpoint",
    "GraphError",
    "MetricGraph",
    "PreconditionError",
    "Vertex",
    "validate",
    "Spectrum",
    "count",
    "eigenvalues_up_to",
    "first_levels",
    "interlacing_degree",
    "Transformation",
    "apply",
    "edge_crossing",
    "edge_reversal",
    "edge_swap",
    "edge_switch",
    "segment_exchange",
]
