"""Round trips for curve, graph, solution and field files."""

import json

import numpy as np
import pytest

from capax.geometry import Polyline, coaxial_circle
from capax.graphmod import WeightedGraph, connecting_modulus
from capax.io import (read_curve, read_field, read_graph, read_solution,
                      write_curve, write_field, write_field_slice,
                      write_graph, write_solution)
from capax.pde import ScalarField, VoxelGrid


def test_curve_roundtrip(tmp_path):
    c = coaxial_circle(1.25, -0.4, n=48)
    path = tmp_path / "c.csv"
    write_curve(path, c)
    back = read_curve(path)
    assert back.ambient == c.ambient
    assert back.closed == c.closed
    # repr-formatted floats round trip exactly
    assert np.array_equal(back.vertices, c.vertices)


def test_open_curve_roundtrip(tmp_path):
    c = Polyline(np.column_stack([np.zeros(9), np.zeros(9),
                                  np.linspace(-2, 2, 9)]), closed=False)
    path = tmp_path / "axis.csv"
    write_curve(path, c)
    back = read_curve(path)
    assert not back.closed
    assert np.array_equal(back.vertices, c.vertices)


def test_curve_bad_headers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("ambient=r2,closed=true\n0,0,0\n")
    with pytest.raises(ValueError, match="ambient"):
        read_curve(path)
    path.write_text("ambient=r3,closed=maybe\n0,0,0\n")
    with pytest.raises(ValueError, match="closed"):
        read_curve(path)
    path.write_text("ambient=r3,closed=true\n0,0\n")
    with pytest.raises(ValueError, match="columns"):
        read_curve(path)
    path.write_text("")
    with pytest.raises(ValueError, match="empty"):
        read_curve(path)


def test_graph_roundtrip(tmp_path):
    g = WeightedGraph(4, [(0, 1), (1, 2), (2, 3), (0, 3)],
                      [0.5, 1.25, 2.0, 0.75])
    path = tmp_path / "g.txt"
    write_graph(path, g)
    back = read_graph(path)
    assert back.n == g.n
    assert np.array_equal(back.edges, g.edges)
    assert np.array_equal(back.sigma, g.sigma)


def test_graph_bad_header(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 1 1.0\n")
    with pytest.raises(ValueError, match="header"):
        read_graph(path)


def test_solution_roundtrip(tmp_path):
    g = WeightedGraph(2, [(0, 1), (0, 1)], [1.0, 1.0])
    sol = connecting_modulus(g, [0], [1], p=3.0)
    path = tmp_path / "sol.json"
    write_solution(path, sol)
    data = read_solution(path)
    assert data["value"] == pytest.approx(sol.value)
    assert len(data["density"]) == g.m
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"value": 1.0}))
    with pytest.raises(ValueError, match="missing"):
        read_solution(bad)


def make_field():
    labels = np.zeros((5, 5, 5), dtype=np.uint8)
    labels[0, 0, 0] = 1
    labels[4, 4, 4] = 2
    grid = VoxelGrid(np.full(3, -1.0), np.full(3, 1.0), 0.5, labels)
    rng = np.random.default_rng(0)
    vals = rng.random((5, 5, 5)).astype(np.float32)
    vals[0, 0, 0] = 0.0
    vals[4, 4, 4] = 1.0
    return ScalarField(grid, vals)


def test_field_roundtrip(tmp_path):
    field = make_field()
    path = tmp_path / "u.bin"
    write_field(path, field)
    arr, sidecar = read_field(path)
    assert sidecar["dims"] == [5, 5, 5]
    assert sidecar["spacing"] == 0.5
    assert np.allclose(arr, field.values)
    wrapped, _ = read_field(path, field.grid)
    assert np.allclose(wrapped.values, field.values)


def test_field_slice(tmp_path):
    field = make_field()
    path = tmp_path / "slice.csv"
    write_field_slice(path, field, axis=2)
    rows = path.read_text().strip().splitlines()
    # header plus one row per in-plane node
    assert len(rows) == 1 + 25
