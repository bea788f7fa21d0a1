import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgraph_switch import fixtures
from qgraph_switch.graph import (
    BC,
    DIRICHLET,
    DomainError,
    Edge,
    GraphError,
    MetricGraph,
    PreconditionError,
    Vertex,
    canonical,
    check,
    insert_kirchhoff_vertex,
    remove_kirchhoff_degree2,
    same_graph,
    total_length,
    validate,
)


def test_minimal_loop_validates():
    assert validate(fixtures.loop(1.0)).ok


def test_zero_length_rejected():
    g = MetricGraph((Vertex(0), Vertex(1)), (Edge(0, 0, 1, 0.0),))
    rep = validate(g)
    assert not rep.ok and "nonpositive length" in rep.message


def test_dangling_incidence():
    g = MetricGraph((Vertex(0),), (Edge(0, 0, 7, 1.0),))
    rep = validate(g)
    assert not rep.ok and "dangling incidence" in rep.message
    with pytest.raises(GraphError, match="dangling"):
        check(g)


@pytest.mark.parametrize("length", [math.inf, math.nan, -1.0])
def test_bad_lengths(length):
    g = MetricGraph((Vertex(0), Vertex(1)), (Edge(0, 0, 1, length),))
    assert not validate(g).ok


def test_empty_graph_rejected():
    assert not validate(MetricGraph((Vertex(0),), ())).ok


def test_delta_zero_is_kirchhoff():
    assert BC.delta(0.0).is_kirchhoff
    assert not BC.delta(1.0).is_kirchhoff


def test_total_length_examples():
    assert total_length(fixtures.loop(1.0)) == 1.0
    g = fixtures.tetrahedron([1.1, 1.3, 1.7, 1.9, 2.3, 2.9])
    assert total_length(g) == pytest.approx(11.2, rel=1e-15)
    assert total_length(fixtures.tetrahedron()) == pytest.approx(fixtures.TETRA_TOTAL, rel=1e-14)


def test_json_roundtrip_and_format():
    g = MetricGraph.build(
        3, [(0, 1, 1.5, 0.2), (1, 2, 0.7), (2, 2, 0.3)], {0: DIRICHLET, 2: BC.delta(2.5)}
    )
    data = json.loads(g.to_json())
    assert data["vertices"][0] == {"id": 0, "bc": "dirichlet"}
    assert data["vertices"][1]["bc"] == "kirchhoff"
    assert data["vertices"][2]["bc"] == {"delta": 2.5}
    assert data["edges"][0] == {"id": 0, "tail": 0, "head": 1, "length": 1.5, "alpha": 0.2}
    assert MetricGraph.from_json(g.to_json()) == g


@pytest.mark.parametrize(
    "text",
    ["{", "[]", '{"vertices": [{"id": 0, "bc": "neumannish"}], "edges": []}', '{"vertices": []}'],
)
def test_malformed_json(text):
    with pytest.raises(GraphError):
        MetricGraph.from_json(text)


def test_split_loop_gives_two_cycle():
    g = insert_kirchhoff_vertex(fixtures.loop(1.0), 0, 0.5)
    assert len(g.edges) == 2 and len(g.vertices) == 2
    assert [e.length for e in g.edges] == [0.5, 0.5]
    assert g.degrees() == {0: 2, 1: 2}


def test_split_alpha_proportional():
    g = MetricGraph.build(2, [(0, 1, 2.0, 1.0)])
    h = insert_kirchhoff_vertex(g, 0, 0.5)
    assert [e.alpha for e in h.edges] == [0.25, 0.75]


@pytest.mark.parametrize("s", [0.0, 1.0, -0.1, 2.0])
def test_split_outside_edge(s):
    with pytest.raises(DomainError):
        insert_kirchhoff_vertex(fixtures.interval(1.0), 0, s)


def test_remove_two_cycle_gives_loop():
    g = fixtures.cycle([0.5, 0.5])
    h = remove_kirchhoff_degree2(g, 1)
    assert len(h.edges) == 1 and h.edges[0].tail == h.edges[0].head
    assert h.edges[0].length == 1.0


def test_remove_path_vertex_sums_alpha():
    g = MetricGraph.build(3, [(0, 1, 0.3, 0.1), (1, 2, 0.7, 0.4)], {0: DIRICHLET, 2: DIRICHLET})
    h = remove_kirchhoff_degree2(g, 1)
    (e,) = h.edges
    assert (e.tail, e.head) == (0, 2)
    assert e.length == pytest.approx(1.0)
    assert e.alpha == pytest.approx(0.5)


def test_remove_reverses_alpha_against_orientation():
    # 0 -> 1 <- 2: walking 0 -> 1 -> 2 traverses the second edge backwards
    g = MetricGraph.build(3, [(0, 1, 0.3, 0.1), (2, 1, 0.7, 0.4)])
    (e,) = remove_kirchhoff_degree2(g, 1).edges
    assert (e.tail, e.head, e.alpha) == (0, 2, pytest.approx(-0.3))


def test_remove_preconditions():
    with pytest.raises(PreconditionError, match="degree 3"):
        remove_kirchhoff_degree2(fixtures.star([1, 1, 1]), 0)
    with pytest.raises(PreconditionError, match="not Kirchhoff"):
        remove_kirchhoff_degree2(fixtures.star([1, 1], center_bc=DIRICHLET), 0)
    with pytest.raises(PreconditionError, match="loop"):
        remove_kirchhoff_degree2(fixtures.loop(1.0), 0)


@given(
    seed=st.integers(0, 2**32 - 1),
    frac=st.floats(0.01, 0.99),
)
def test_insert_then_remove_is_identity(seed, frac):
    g = fixtures.random_graph(np.random.default_rng(seed), mixed_bc=True, magnetic=True)
    e = g.edges[seed % len(g.edges)]
    h = insert_kirchhoff_vertex(g, e.id, frac * e.length)
    assert validate(h).ok
    assert total_length(h) == pytest.approx(total_length(g), rel=1e-12)
    back = remove_kirchhoff_degree2(h, h.vertices[-1].id)
    assert same_graph(back, g, rtol=1e-12)
    assert canonical(back) == canonical(g)


def test_components_with_isolated_parts():
    g = MetricGraph.build(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert sorted(map(sorted, g.components())) == [[0, 1], [2, 3]]


def test_loop_counts_twice_in_degree():
    g = MetricGraph.build(2, [(0, 0, 1.0), (0, 1, 1.0)])
    assert g.degree(0) == 3
