import json

import numpy as np
import pytest

from meteor.errors import InvalidSizeError, ValidationError
from meteor.graph import (build_complete, build_cycle, build_graph, build_torus, custom_redistribution,
                          dump_graph_json, graph_from_matrix, load_graph_json, parse_graph_spec,
                          uniform_redistribution)


def test_cycle_neighbors():
    g = build_cycle(4)
    assert sorted(g.neighbors(1).tolist()) == [0, 2]
    assert g.kind == "cycle"


def test_cycle_two_is_single_edge():
    g = build_cycle(2)
    assert g.edges() == [(0, 1)]
    assert g.degrees.tolist() == [1, 1]


def test_cycle_three_is_k3():
    g = build_cycle(3)
    assert g.degrees.tolist() == [2, 2, 2]
    assert sorted(g.edges()) == sorted(build_complete(3).edges())


@pytest.mark.parametrize("k", [0, 1, -3])
def test_cycle_rejects_small(k):
    with pytest.raises(InvalidSizeError):
        build_cycle(k)


@pytest.mark.parametrize("n,d,size,deg", [(3, 2, 9, 4), (4, 3, 64, 6), (5, 1, 5, 2)])
def test_torus_sizes(n, d, size, deg):
    g = build_torus(n, d)
    assert g.vertex_count == size
    assert (g.degrees == deg).all()


def test_torus_one_dim_equals_cycle():
    a, b = build_torus(5, 1), build_cycle(5)
    assert a.edges() == b.edges()


def test_torus_coords_roundtrip():
    g = build_torus(4, 3)
    for v in range(g.vertex_count):
        assert g.index(g.coords(v)) == v
    # neighbors differ by one step in exactly one coordinate
    for u, v in g.edges():
        cu, cv = np.array(g.coords(u)), np.array(g.coords(v))
        diff = (cu - cv) % 4
        assert sorted(diff.tolist()) in ([0, 0, 1], [0, 0, 3])


@pytest.mark.parametrize("n", [1, 2])
def test_torus_rejects_small(n):
    with pytest.raises(InvalidSizeError):
        build_torus(n, 2)


def test_complete():
    assert build_complete(5).n_edges == 10
    assert (build_complete(100).degrees == 99).all()
    assert build_complete(2).edges() == build_cycle(2).edges()
    with pytest.raises(InvalidSizeError):
        build_complete(1)


@pytest.mark.parametrize("g", [build_cycle(7), build_torus(4, 2), build_complete(6), build_cycle(2)])
def test_structure_invariants(g):
    for u in range(g.vertex_count):
        nb = g.neighbors(u).tolist()
        assert u not in nb
        assert nb == sorted(set(nb))
        for v in nb:
            assert g.adjacent(v, u)
    assert (g.bfs_distances(0) >= 0).all()
    assert g.is_connected()


def test_uniform_rows():
    assert uniform_redistribution(build_cycle(4)).row(0) == {1: 0.5, 3: 0.5}
    assert uniform_redistribution(build_complete(3)).row(0) == {1: 0.5, 2: 0.5}
    P = uniform_redistribution(build_torus(3, 2))
    for v in range(9):
        assert list(P.row(v).values()) == [0.25] * 4


def test_custom_accepts_valid_rows():
    g = build_cycle(3)
    P = custom_redistribution(g, [[0, .7, .3], [.5, 0, .5], [.2, .8, 0]])
    assert P.row(0) == {1: 0.7, 2: 0.3}
    assert np.allclose(P.dense().sum(axis=1), 1.0)


@pytest.mark.parametrize("rows,msg", [
    ([[0, .6, .3], [.5, 0, .5], [.2, .8, 0]], "row 0"),
    ([[0, 1.2, -.2], [.5, 0, .5], [.2, .8, 0]], "row 0"),
    ([[.1, .6, .3], [.5, 0, .5], [.2, .8, 0]], "row 0"),
])
def test_custom_rejects(rows, msg):
    with pytest.raises(ValidationError, match=msg):
        custom_redistribution(build_cycle(3), rows)


def test_custom_rejects_non_neighbor():
    g = build_cycle(4)
    rows = np.full((4, 4), 0.0)
    for v in range(4):
        rows[v, (v + 1) % 4] = 0.5
        rows[v, (v + 2) % 4] = 0.5
    with pytest.raises(ValidationError, match="non-neighbor"):
        custom_redistribution(g, rows)


def test_custom_uniform_matches():
    g = build_torus(4, 2)
    U = uniform_redistribution(g)
    C = custom_redistribution(g, U.dense())
    assert np.array_equal(C.weights, U.weights)


def test_graph_from_matrix_and_json_roundtrip():
    rows = [[0, 1, 0], [.5, 0, .5], [0, 1, 0]]
    g, P = graph_from_matrix(rows)
    assert g.edges() == [(0, 1), (1, 2)]
    g2, P2 = load_graph_json(dump_graph_json(g, P))
    assert g2.edges() == g.edges()
    assert np.array_equal(P2.dense(), P.dense())
    g3, _ = load_graph_json({"vertices": 4, "edges": [[0, 1], [1, 2], [2, 3], [3, 0]]})
    assert g3.edges() == build_cycle(4).edges()
    with pytest.raises(ValidationError):
        load_graph_json(json.dumps({"vertices": 3, "edges": [[0, 1]]}))


def test_build_graph_rejects_loops_and_multi_edges():
    with pytest.raises(ValidationError):
        build_graph(3, [(0, 0), (1, 2)])
    with pytest.raises(ValidationError):
        build_graph(3, [(0, 1), (1, 0), (1, 2)])


def test_parse_graph_spec():
    assert parse_graph_spec("torus:4:2").vertex_count == 16
    assert parse_graph_spec("complete:5").n_edges == 10
    with pytest.raises(ValidationError):
        parse_graph_spec("cycle:x")
    with pytest.raises(ValidationError):
        parse_graph_spec("wheel:5")
