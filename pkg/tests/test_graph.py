import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cncah.errors import DisconnectedGraph, FormatError
from cncah.graph import (
    Topology, VisualDrawing, fit_to_frame, grid_topology, hop_matrix, parse_graph,
    path_topology, serialize_graph,
)

from conftest import random_connected


def floyd_warshall(topo):
    n = topo.n
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for u, v in topo.edges:
        d[u, v] = d[v, u] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


def test_hop_matrix_path():
    d = hop_matrix(path_topology(3))
    assert d[0, 2] == 2 and d[0, 1] == 1


def test_hop_matrix_single_node():
    assert hop_matrix(Topology(1)).tolist() == [[0]]


def test_hop_matrix_matches_floyd_warshall(rng):
    for _ in range(120):
        n = int(rng.integers(2, 13))
        topo = random_connected(n, int(rng.integers(0, n)), rng)
        d = hop_matrix(topo)
        assert np.array_equal(d, floyd_warshall(topo))
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0)


def test_hop_matrix_disconnected():
    with pytest.raises(DisconnectedGraph):
        hop_matrix(Topology(3, ((0, 1),)))


def test_fit_to_frame_examples():
    px = fit_to_frame(VisualDrawing(np.array([[0.5, 0.5]])), 1920, 1080)
    assert px.tolist() == [[960.0, 540.0]]
    px = fit_to_frame(VisualDrawing(np.array([[0.25, 0.5]])), 640, 480)
    assert px.tolist() == [[160.0, 240.0]]
    pts = np.array([[0.1, 0.7], [0.33, 0.2]])
    assert np.array_equal(fit_to_frame(VisualDrawing(pts), 1, 1), pts)
    with pytest.raises(ValueError):
        fit_to_frame(VisualDrawing(pts), 0, 10)


def test_topology_invariants():
    for bad in (((0, 0),), ((0, 1), (1, 0)), ((0, 5),)):
        with pytest.raises(ValueError):
            Topology(3, bad)


@st.composite
def graphs(draw):
    n = draw(st.integers(0, 12))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=20)) if pairs else []
    floats = st.floats(-1e6, 1e6, allow_nan=False)
    rssi = None
    if edges and draw(st.booleans()):
        rssi = tuple(draw(st.one_of(st.none(), floats)) for _ in edges)
    freq = draw(st.one_of(st.none(), st.floats(1, 1e5)))
    frame = draw(st.floats(1e-3, 1e3))
    topo = Topology(n, tuple(edges), rssi, freq, frame)
    drawing = None
    if n and draw(st.booleans()):
        coords = draw(st.lists(st.floats(0, 1), min_size=2 * n, max_size=2 * n))
        drawing = VisualDrawing(np.array(coords).reshape(n, 2))
    return topo, drawing


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_round_trip_and_fixpoint(g):
    topo, drawing = g
    text = serialize_graph(topo, drawing)
    topo2, drawing2 = parse_graph(text)
    assert topo2 == topo
    if drawing is None:
        assert drawing2 is None
    else:
        assert drawing2.same_as(drawing)
    assert serialize_graph(topo2, drawing2) == text
    # average degree agrees with the per-node degree sum
    if topo2.n:
        assert topo2.average_degree == pytest.approx(topo2.degrees.sum() / topo2.n)
        assert topo2.average_degree == pytest.approx(2 * topo2.m / topo2.n)


def _file(body_nodes, body_edges, n=None, m=None):
    n = len(body_nodes) if n is None else n
    m = len(body_edges) if m is None else m
    head = ["cncah-graph v1", f"nodes {n}", f"edges {m}", "frame 1.0", "freq -"]
    return "\n".join(head + body_nodes + body_edges) + "\n"


def test_unknown_endpoint_reports_line():
    text = _file(["node 0 0.1 0.1", "node 1 0.2 0.2"], ["edge 0 7 -"])
    with pytest.raises(FormatError) as err:
        parse_graph(text)
    assert err.value.line == 8


def test_dash_positions_mean_no_drawing():
    topo, drawing = parse_graph(_file(["node 0 - -", "node 1 - -"], ["edge 0 1 -"]))
    assert drawing is None and topo.edges == ((0, 1),)


def test_external_ids_are_remapped():
    topo, drawing = parse_graph(_file(["node 10 0 0", "node 4 1 1"], ["edge 4 10 -50.5"]))
    assert topo.edges == ((1, 0),)
    assert topo.rssi == (-50.5,)
    assert drawing.positions.tolist() == [[0, 0], [1, 1]]


@pytest.mark.parametrize("text", [
    "",
    "not-a-graph\n",
    _file(["node 0 0 0"], [], n=2),
    _file(["node 0 0 -"], []),
    _file(["node 0 0 0", "node 0 1 1"], []),
    _file(["node 0 0 0", "node 1 - -"], []),
    _file(["node 0 0 0", "node 1 1 1"], ["edge 0 0 -"]),
    _file(["node 0 0 0", "node 1 1 1"], ["edge 0 1 -", "edge 1 0 -"]),
    _file(["node 0 x 0"], []),
    _file(["node 0 nan 0"], []),
])
def test_malformed_files(text):
    with pytest.raises(FormatError):
        parse_graph(text)


def test_grid_fixture():
    topo, drawing = grid_topology(3)
    assert topo.n == 9 and topo.m == 12
    assert drawing.positions.max() == 2.0
