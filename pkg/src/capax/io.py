"""File formats: curve CSV, graph edge lists, modulus solutions, field dumps.

Curve CSV: header `ambient=r3|s3,closed=true|false`, then one vertex per
line with 3 columns (x,y,z) or 4 columns (Re z1, Im z1, Re z2, Im z2).

Graph files: header `vertices=N`, then `u v sigma` per edge.  Modulus
solutions round-trip as JSON {value, residual, iterations, density}.

Fields: flat binary of little-endian doubles in C order with a JSON sidecar
carrying dims, spacing and origin, plus a CSV slice exporter for plotting.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geometry import Polyline
from .graphmod import ModulusSolution, WeightedGraph
from .pde import ScalarField, VoxelGrid


def write_curve(path, c: Polyline) -> None:
    path = Path(path)
    lines = [f"ambient={c.ambient},closed={'true' if c.closed else 'false'}"]
    for v in c.vertices:
        lines.append(",".join(repr(float(x)) for x in v))
    path.write_text("\n".join(lines) + "\n")


def read_curve(path) -> Polyline:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty curve file")
    header = dict(item.split("=", 1) for item in lines[0].split(","))
    ambient = header.get("ambient")
    if ambient not in ("r3", "s3"):
        raise ValueError(f"bad ambient {ambient!r} in curve header")
    closed = header.get("closed")
    if closed not in ("true", "false"):
        raise ValueError(f"bad closed flag {closed!r} in curve header")
    ncols = 3 if ambient == "r3" else 4
    verts = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != ncols:
            raise ValueError(f"line {i}: expected {ncols} columns, got {len(parts)}")
        verts.append([float(x) for x in parts])
    return Polyline(np.asarray(verts), ambient, closed == "true")


def write_graph(path, g: WeightedGraph) -> None:
    lines = [f"vertices={g.n}"]
    for (u, v), s in zip(g.edges, g.sigma):
        lines.append(f"{int(u)} {int(v)} {float(s)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> WeightedGraph:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("vertices="):
        raise ValueError("graph file must start with a vertices=N header")
    n = int(lines[0].split("=", 1)[1])
    edges = []
    sigma = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"line {i}: expected 'u v sigma'")
        edges.append((int(parts[0]), int(parts[1])))
        sigma.append(float(parts[2]))
    return WeightedGraph(n, edges, sigma)


def write_solution(path, sol: ModulusSolution) -> None:
    Path(path).write_text(json.dumps(sol.to_json_dict(), indent=2) + "\n")


def read_solution(path) -> dict:
    data = json.loads(Path(path).read_text())
    for key in ("value", "residual", "iterations", "density"):
        if key not in data:
            raise ValueError(f"solution file missing {key!r}")
    return data


def write_field(path, field: ScalarField) -> None:
    """Flat little-endian float64 dump (C order) with a JSON sidecar."""
    path = Path(path)
    field.values.astype("<f8").tofile(path)
    sidecar = {
        "dims": list(field.values.shape),
        "spacing": field.grid.h,
        "origin": [float(x) for x in field.grid.lo],
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2) + "\n")


def read_field(path, grid: VoxelGrid = None):
    """The stored array plus its sidecar; wraps in a ScalarField when a grid is given."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    arr = np.fromfile(path, dtype="<f8").reshape(sidecar["dims"])
    if grid is None:
        return arr, sidecar
    return ScalarField(grid, arr.astype(np.float32)), sidecar


def write_field_slice(path, field: ScalarField, axis: int = 2, index: int = None) -> None:
    """CSV of one grid plane: coord1, coord2, value."""
    u = field.values
    if index is None:
        index = u.shape[axis] // 2
    plane = np.take(u, index, axis=axis)
    other = [d for d in range(3) if d != axis]
    c1 = field.grid.axis_nodes(other[0])
    c2 = field.grid.axis_nodes(other[1])
    lines = ["coord1,coord2,value"]
    for i, x in enumerate(c1):
        for j, y in enumerate(c2):
            lines.append(f"{x!r},{y!r},{plane[i, j]!r}")
    Path(path).write_text("\n".join(lines) + "\n")
