"""Linking-preserving symmetrization of curves and densities.

Reflection symmetrization replaces a closed curve c by the symmetric set
(c of the closed half-space U+) union its mirror image across a plane H
through the z-axis.  The dihedral variant folds c into the wedge between H
and its rotation by pi/k and takes the orbit under the dihedral group of
order 2k.  Both keep at least one output component linked with the axis
whenever the input was, and neither increases the conformal capacity against
an axis condenser; the density-level statement (even reflection of the
smaller-energy half never increases the p-energy) is exact on the grid.

Outputs are sets of closed polylines: symmetrizing a set may disconnect it,
and callers pick a linked component (see linked_component) when a single
curve is needed downstream.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Polyline, coaxial_circle
from .pde import LABEL_C0, LABEL_C1, VoxelGrid
from .topology import Axis, Z_AXIS, point_to_segments_distance, winding_lift

log = logging.getLogger(__name__)

PLANE_TOL = 1e-12
PLANE_NUDGE = 1e-9
GLUE_TOL = 1e-9


@dataclass(frozen=True)
class HalfspaceFrame:
    """A half-space bounded by a plane through the z-axis.

    normal is a unit vector orthogonal to e_z; U+ is the side it points to
    (flip swaps the roles when callers need the other orientation).
    """

    normal: np.ndarray = None
    flip: bool = False

    def __post_init__(self):
        n = np.array([1.0, 0.0, 0.0]) if self.normal is None else np.asarray(
            self.normal, dtype=float)
        if abs(n[2]) > 1e-12:
            raise ValueError("plane must contain the z-axis (normal orthogonal to e_z)")
        ln = np.linalg.norm(n)
        if ln < 1e-300:
            raise ValueError("normal must be nonzero")
        n = n / ln
        if self.flip:
            n = -n
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "flip", False)

    def side(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.normal

    def reflect(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts - 2.0 * np.outer(pts @ self.normal, self.normal)


@dataclass(frozen=True)
class DihedralFrame:
    """The wedge of opening pi/k between a base plane and its rotation.

    The two walls are the base plane of `base` and its rotation by pi/k
    about the z-axis; successive reflections generate the dihedral group of
    order 2k, under which the symmetrized output is invariant.
    """

    base: HalfspaceFrame = None
    k: int = 1

    def __post_init__(self):
        if self.base is None:
            object.__setattr__(self, "base", HalfspaceFrame())
        if self.k < 1:
            raise ValueError("k must be a positive integer")

    def plane_normals(self) -> np.ndarray:
        """Unit normals of the k mirror planes H_{j pi/k}, j = 0..k-1."""
        n = self.base.normal
        phi0 = math.atan2(n[1], n[0])
        out = []
        for j in range(self.k):
            phi = phi0 + j * math.pi / self.k
            out.append([math.cos(phi), math.sin(phi), 0.0])
        return np.asarray(out)

    def group(self) -> list:
        """The 2k isometries: rotations by 2pi j/k and reflections in H_{j pi/k}."""
        n = self.base.normal
        phi0 = math.atan2(n[1], n[0])
        mats = []
        for j in range(self.k):
            a = 2.0 * math.pi * j / self.k
            c, s = math.cos(a), math.sin(a)
            rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
            mats.append(rot)
        # reflection in the plane with normal at angle phi0 + pi/2 + j pi/k
        for j in range(self.k):
            phi = phi0 + j * math.pi / self.k
            nx, ny = math.cos(phi), math.sin(phi)
            ref = np.array([
                [1.0 - 2.0 * nx * nx, -2.0 * nx * ny, 0.0],
                [-2.0 * nx * ny, 1.0 - 2.0 * ny * ny, 0.0],
                [0.0, 0.0, 1.0],
            ])
            mats.append(ref)
        return mats


def _nudged_sides(frame: HalfspaceFrame, verts: np.ndarray) -> np.ndarray:
    """Signed distances with exact-tangency vertices pushed to the + side."""
    s = frame.side(verts)
    close = np.abs(s) < PLANE_TOL
    if close.any():
        log.warning("perturbing %d vertices lying on the mirror plane by %g",
                    int(close.sum()), PLANE_NUDGE)
        s = np.where(close, PLANE_NUDGE, s)
    return s


def _positive_arcs(verts: np.ndarray, s: np.ndarray) -> list:
    """Maximal runs of a closed polyline with s >= 0, with exact plane cuts.

    Each arc starts and ends with an interpolated intersection vertex unless
    the whole curve lies on the + side (then the single 'arc' is the curve).
    """
    n = len(verts)
    if np.all(s > 0):
        return [("loop", verts)]
    if np.all(s < 0):
        return []
    arcs = []
    # rotate so vertex 0 is strictly negative
    start = int(np.argmax(s < 0))
    idx = np.r_[start:n, 0:start]
    v = verts[idx]
    sv = s[idx]
    cur = None
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        sa, sb = sv[i], sv[(i + 1) % n]
        if sa < 0 and sb >= 0:
            t = sa / (sa - sb)
            cur = [a + t * (b - a)]
            if sb > 0:
                cur.append(b)
        elif sa >= 0 and sb >= 0:
            if cur is not None and sb > 0:
                cur.append(b)
        elif sa >= 0 and sb < 0:
            t = sa / (sa - sb)
            cur.append(a + t * (b - a))
            arcs.append(("arc", np.asarray(cur)))
            cur = None
    return arcs


def _close_with_mirror(arc: np.ndarray, frame: HalfspaceFrame) -> np.ndarray:
    """Join an arc with endpoints on H to its mirror image into a closed loop."""
    mirrored = frame.reflect(arc[::-1])
    return np.vstack([arc, mirrored[1:-1]])


def polyline_set_distance(a: Polyline, b: Polyline) -> float:
    """Symmetric max vertex-to-curve distance between two polylines.

    A cheap Hausdorff surrogate that is exact when each curve's vertices are
    dense relative to their separation, which holds for the clipped and
    mirrored outputs compared here.
    """
    d = 0.0
    for src, dst in ((a, b), (b, a)):
        s0, s1 = dst.segments()
        for v in src.vertices:
            d = max(d, float(point_to_segments_distance(v, s0, s1)))
    return d


def _dedupe(components: list) -> list:
    out = []
    for c in components:
        if not any(polyline_set_distance(c, o) < 1e-7 for o in out):
            out.append(c)
    return out


def _validate_input(c: Polyline, axis: Axis) -> None:
    if not c.closed:
        raise ValueError("symmetrization expects a closed curve")
    F = axis.frame()
    local = (c.vertices - axis.point) @ F.T
    if np.any(np.hypot(local[:, 0], local[:, 1]) < 1e-9):
        raise ValueError("curve meets the symmetrization axis")


def reflect_half(c: Polyline, frame: HalfspaceFrame = HalfspaceFrame()) -> list:
    """Symmetrize c across the plane of `frame`: (c in closed U+) union its mirror.

    Returns closed polyline components.  Raises if c misses one of the open
    half-spaces, since then the construction degenerates (a curve linked with
    the axis always meets both sides).
    """
    _validate_input(c, Z_AXIS)
    s = _nudged_sides(frame, c.vertices)
    arcs = _positive_arcs(c.vertices, s)
    if not arcs:
        raise ValueError("curve lies entirely in the closed negative half-space")
    if len(arcs) == 1 and arcs[0][0] == "loop":
        raise ValueError("curve lies entirely in the closed positive half-space")
    comps = []
    for kind, arc in arcs:
        loop = _close_with_mirror(arc, frame)
        if len(loop) >= 3:
            comps.append(Polyline(loop, "r3", True))
    return _dedupe(comps)


def _wedge_arcs(c: Polyline, f: DihedralFrame) -> list:
    """Pieces of c inside the wedge of opening pi/k adjacent to U+ of the base.

    The wedge {x . n0 >= 0} cut back to angular width pi/k: a point at polar
    angle theta (with n0 at angle phi0) is kept when theta lies between
    phi0 - pi/2 and phi0 - pi/2 + pi/k, which is the intersection of the
    half-spaces with inward normals n0 and -n(phi0 + pi/k).  For k=1 the two
    walls coincide with the base plane, so the wedge is all of U+.
    """
    n0 = f.base.normal
    phi0 = math.atan2(n0[1], n0[0])
    walls = [f.base]
    if f.k > 1:
        a = phi0 + math.pi / f.k
        walls.append(HalfspaceFrame(np.array([-math.cos(a), -math.sin(a), 0.0])))
    pieces = [("loop", c.vertices)]
    for wall in walls:
        nxt = []
        for kind, verts in pieces:
            s = _nudged_sides(wall, verts)
            if kind == "loop":
                nxt.extend(_positive_arcs(verts, s))
            else:
                nxt.extend(_split_open_arc(verts, s))
        pieces = nxt
    return [v for kind, v in pieces if len(v) >= 2]


def _split_open_arc(verts: np.ndarray, s: np.ndarray) -> list:
    """Clip an open arc to s >= 0, cutting at interpolated plane crossings."""
    out = []
    cur = []
    if s[0] >= 0:
        cur = [verts[0]]
    for i in range(len(verts) - 1):
        a, b = verts[i], verts[i + 1]
        sa, sb = s[i], s[i + 1]
        if sa >= 0 and sb >= 0:
            cur.append(b)
        elif sa >= 0 and sb < 0:
            t = sa / (sa - sb)
            cur.append(a + t * (b - a))
            out.append(("arc", np.asarray(cur)))
            cur = []
        elif sa < 0 and sb >= 0:
            t = sa / (sa - sb)
            cur = [a + t * (b - a)]
            if sb > 0:
                cur.append(b)
    if len(cur) >= 2:
        out.append(("arc", np.asarray(cur)))
    return out


def _stitch_loops(arcs: list) -> list:
    """Glue open arcs sharing endpoints (within GLUE_TOL) into closed loops."""
    open_arcs = []
    loops = []
    for a in arcs:
        if np.linalg.norm(a[0] - a[-1]) < GLUE_TOL and len(a) > 3:
            loops.append(a[:-1])
        else:
            open_arcs.append(a)
    used = [False] * len(open_arcs)
    for i, a in enumerate(open_arcs):
        if used[i]:
            continue
        used[i] = True
        chain = list(a)
        while np.linalg.norm(chain[-1] - chain[0]) >= GLUE_TOL:
            tail = chain[-1]
            best, best_d, best_rev = None, np.inf, False
            for j, b in enumerate(open_arcs):
                if used[j]:
                    continue
                d0 = np.linalg.norm(b[0] - tail)
                d1 = np.linalg.norm(b[-1] - tail)
                if d0 < best_d:
                    best, best_d, best_rev = j, d0, False
                if d1 < best_d:
                    best, best_d, best_rev = j, d1, True
            if best is None or best_d >= GLUE_TOL:
                break  # dangling chain from numerical tangency; drop it
            used[best] = True
            nxt = open_arcs[best][::-1] if best_rev else open_arcs[best]
            chain.extend(nxt[1:])
        else:
            loops.append(np.asarray(chain[:-1]))
    return loops


def dihedral_symmetrize(c: Polyline, f: DihedralFrame) -> list:
    """Fold c into the pi/k wedge and return the dihedral-orbit components.

    The orbit of (c in the closed wedge) under the order-2k dihedral group
    equals the successive-reflection construction; the output set is
    invariant under every group element.
    """
    _validate_input(c, Z_AXIS)
    pieces = _wedge_arcs(c, f)
    if not pieces:
        raise ValueError("curve misses the symmetrization wedge")
    arcs = []
    for g in f.group():
        for v in pieces:
            arcs.append(v @ g.T)
    loops = _stitch_loops(arcs)
    comps = [Polyline(v, "r3", True) for v in loops if len(v) >= 3]
    if not comps:
        raise ValueError("symmetrized set degenerated to plane tangencies")
    return _dedupe(comps)


def linked_component(components: list, axis: Axis = Z_AXIS) -> Polyline:
    """The largest-diameter component with nonzero winding around the axis."""
    best = None
    best_diam = -1.0
    for comp in components:
        lift = winding_lift(comp, axis)
        wind = (lift[-1] - lift[0]) / (2.0 * math.pi)
        if abs(round(wind)) < 1:
            continue
        v = comp.vertices
        diam = float(np.max(v.max(axis=0) - v.min(axis=0)))
        if diam > best_diam:
            best, best_diam = comp, diam
    if best is None:
        raise ValueError("no component is linked with the axis")
    return best


def even_reflect_density(rho: np.ndarray, grid: VoxelGrid,
                         frame: HalfspaceFrame, p: float = 3.0) -> np.ndarray:
    """Even reflection of the smaller-p-energy half of a cell density.

    The grid must be cell-symmetric under the plane reflection, which here
    means an axis-aligned plane {x=0} or {y=0} with a box symmetric about 0.
    The output energy is exactly 2 * min(E+, E-) <= E+ + E-, an inequality of
    finite sums with no rounding slack beyond reordering.
    """
    n = frame.normal
    if abs(abs(n[0]) - 1.0) < 1e-12:
        ax = 0
    elif abs(abs(n[1]) - 1.0) < 1e-12:
        ax = 1
    else:
        raise ValueError("grid not reflection-aligned: plane must be {x=0} or {y=0}")
    if abs(grid.lo[ax] + grid.hi[ax]) > 1e-12:
        raise ValueError("grid not reflection-aligned: box is not symmetric")
    rho = np.asarray(rho)
    m = rho.shape[ax]
    if m % 2 != 0:
        raise ValueError("grid not reflection-aligned: odd cell count across the plane")
    half = m // 2
    pos = [slice(None)] * 3
    neg = [slice(None)] * 3
    pos[ax] = slice(half, m)
    neg[ax] = slice(half - 1, None, -1)
    rp = rho[tuple(pos)]
    rn = rho[tuple(neg)]  # mirrored ordering, aligned cell by cell
    ep = float(np.sum(rp.astype(float) ** p))
    en = float(np.sum(rn.astype(float) ** p))
    keep = rp if ep <= en else rn
    out = np.empty_like(rho)
    out[tuple(pos)] = keep
    out[tuple(neg)] = keep
    return out


def axisymmetric_surrogate(c: Polyline, axis: Axis = Z_AXIS) -> Polyline:
    """The coaxial circle through the first vertex of c.

    Any axisymmetric continuum linked with the axis contains such a circle,
    and modulus monotonicity makes the (axis, circle) condenser a lower bound
    for the (axis, symmetrized curve) condenser.
    """
    F = axis.frame()
    local = (c.vertices[0] - axis.point) @ F.T
    r = math.hypot(local[0], local[1])
    if r < 1e-9:
        raise ValueError("designated vertex lies on the axis")
    n = max(64, len(c.vertices))
    circ = coaxial_circle(r, local[2], n=n)
    # carry back to the ambient frame of the axis
    verts = circ.vertices @ F + axis.point
    return Polyline(verts, "r3", True)
