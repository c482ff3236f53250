"""Linking numbers, winding lifts, separation tests and Hausdorff distance
for polygonal curves.

The linking number is computed two ways and cross-checked: an exact Gauss
double sum over segment pairs (solid angles of spherical quadrilaterals) and
a signed-crossing count in a generic projection drawn from a fixed seeded
generator.  Linkedness is operationalized as "linking number != 0"; this is
sufficient but not necessary for homotopic linkedness, so a zero result is
reported as not-detectably-linked rather than a proof of unlinkedness.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from capax.geometry import CliffordFrame, Polyline, inverse_stereographic_polyline

log = logging.getLogger(__name__)

# Fixed stream for projection directions (crossing-count oracle); retries on
# degeneracy advance the same stream, keeping runs reproducible.
_PROJECTION_STREAM_KEY = 0x6C696E6B


@dataclass(frozen=True)
class Axis:
    """An oriented line, default the z-axis."""

    point: np.ndarray = None
    direction: np.ndarray = None

    def __post_init__(self):
        p = np.zeros(3) if self.point is None else np.asarray(self.point, dtype=float)
        d = np.array([0.0, 0.0, 1.0]) if self.direction is None else np.asarray(
            self.direction, dtype=float
        )
        nd = np.linalg.norm(d)
        if nd < 1e-300:
            raise ValueError("axis direction must be nonzero")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "direction", d / nd)

    def frame(self) -> np.ndarray:
        """Orthonormal rows (e1, e2, direction); e1, e2 span the normal plane."""
        d = self.direction
        a = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = a - (a @ d) * d
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(d, e1)
        return np.vstack([e1, e2, d])


Z_AXIS = Axis()


@dataclass(frozen=True)
class LinkingReport:
    linking_number: int
    method: str
    confidence: float
    gauss_value: float = 0.0


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def point_to_segments_distance(x, seg_a, seg_b) -> float:
    """Distance from a point to a set of segments (rows of seg_a -> seg_b)."""
    d = seg_b - seg_a
    denom = np.einsum("ij,ij->i", d, d)
    denom = np.where(denom < 1e-300, 1.0, denom)
    t = np.clip(np.einsum("ij,ij->i", x - seg_a, d) / denom, 0.0, 1.0)
    proj = seg_a + t[:, None] * d
    return float(np.min(np.linalg.norm(proj - x, axis=1)))


def _segment_pairs_distance(a0, a1, b0, b1) -> np.ndarray:
    """Pairwise distances between segment sets (broadcast (n,1,3) vs (1,m,3))."""
    u = (a1 - a0)[:, None, :]
    v = (b1 - b0)[None, :, :]
    w0 = a0[:, None, :] - b0[None, :, :]
    a = np.einsum("ijk,ijk->ij", u, u)
    b = np.einsum("ijk,ijk->ij", u, v)
    c = np.einsum("ijk,ijk->ij", v, v)
    d = np.einsum("ijk,ijk->ij", u, w0)
    e = np.einsum("ijk,ijk->ij", v, w0)
    den = a * c - b * b
    s = np.where(den > 1e-14 * np.maximum(a * c, 1e-300), (b * e - c * d) / np.where(den == 0, 1, den), 0.0)
    s = np.clip(s, 0.0, 1.0)
    # clamp t given s, then re-clamp s given t (exact for convex quadratic)
    t = np.where(c > 1e-300, (e + b * s) / np.where(c == 0, 1, c), 0.0)
    t = np.clip(t, 0.0, 1.0)
    s = np.where(a > 1e-300, (b * t - d) / np.where(a == 0, 1, a), 0.0)
    s = np.clip(s, 0.0, 1.0)
    diff = w0 + s[..., None] * u - t[..., None] * v
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def min_curve_distance(a: Polyline, b: Polyline) -> float:
    """Minimum distance between two polylines (exact over segment pairs)."""
    a0, a1 = a.segments()
    b0, b1 = b.segments()
    return float(np.min(_segment_pairs_distance(a0, a1, b0, b1)))


def _points_to_segments(x, seg_a, seg_b):
    """Distances from points x (k, 3) to a segment set, plus nearest index."""
    d = seg_b - seg_a
    denom = np.einsum("ij,ij->i", d, d)
    denom = np.where(denom < 1e-300, 1.0, denom)
    w = x[:, None, :] - seg_a[None, :, :]
    t = np.clip(np.einsum("kij,ij->ki", w, d) / denom, 0.0, 1.0)
    proj = seg_a[None, :, :] + t[..., None] * d[None, :, :]
    dists = np.linalg.norm(proj - x[:, None, :], axis=2)
    j = dists.argmin(axis=1)
    return dists[np.arange(x.shape[0]), j], j


def _points_to_single_segments(x, seg_a, seg_b):
    """Distance from each point x[i] to its own segment (seg_a[i], seg_b[i])."""
    d = seg_b - seg_a
    denom = np.einsum("ij,ij->i", d, d)
    denom = np.where(denom < 1e-300, 1.0, denom)
    t = np.clip(np.einsum("ij,ij->i", x - seg_a, d) / denom, 0.0, 1.0)
    return np.linalg.norm(seg_a + t[:, None] * d - x, axis=1)


def _directed_hausdorff(a: Polyline, b: Polyline, tol: float) -> float:
    b0, b1 = b.segments()
    p, q = a.segments()
    dp, _ = _points_to_segments(p, b0, b1)
    dq, _ = _points_to_segments(q, b0, b1)
    best = float(max(dp.max(), dq.max()))
    # Bisect all active segments per level in one vectorized pass.  Two sound
    # upper bounds for the interior max of d along a segment: the Lipschitz
    # cone through the midpoint sample, and, since the distance to any
    # single segment of b is convex along a line, the max of the endpoint
    # distances to the segment of b nearest the midpoint.  The convex bound
    # is what lets flat maxima (concentric arcs) prune quickly.
    while p.shape[0]:
        m = 0.5 * (p + q)
        dm, j = _points_to_segments(m, b0, b1)
        best = max(best, float(dm.max()))
        half = 0.5 * np.linalg.norm(q - p, axis=1)
        cone = np.maximum(0.5 * (dp + dm), 0.5 * (dm + dq)) + 0.5 * half
        convex = np.maximum(
            _points_to_single_segments(p, b0[j], b1[j]),
            _points_to_single_segments(q, b0[j], b1[j]),
        )
        keep = np.minimum(cone, convex) > best + tol
        p, q, m = p[keep], q[keep], m[keep]
        dp, dm, dq = dp[keep], dm[keep], dq[keep]
        p = np.concatenate([p, m])
        q = np.concatenate([m, q])
        dp = np.concatenate([dp, dm])
        dq = np.concatenate([dm, dq])
    return best


def hausdorff_distance(a: Polyline, b: Polyline, tol: float = 1e-9) -> float:
    """Symmetric Hausdorff distance between the two polyline point sets."""
    if a.ambient != b.ambient:
        raise ValueError("polylines live in different ambient spaces")
    return max(_directed_hausdorff(a, b, tol), _directed_hausdorff(b, a, tol))


# ---------------------------------------------------------------------------
# Gauss linking integral
# ---------------------------------------------------------------------------


def _solid_angle_triangles(a, b, c, d):
    """Signed spherical-quadrilateral areas, per pair, via two triangle fans.

    a, b, c, d: (n, m, 3) unit vectors (quad corners in order).  Uses the
    van Oosterom-Strackee formula per triangle.
    """

    def tri(u, v, w):
        num = np.einsum("ijk,ijk->ij", u, np.cross(v, w))
        den = (
            1.0
            + np.einsum("ijk,ijk->ij", u, v)
            + np.einsum("ijk,ijk->ij", v, w)
            + np.einsum("ijk,ijk->ij", w, u)
        )
        return 2.0 * np.arctan2(num, den)

    return tri(a, b, c) + tri(a, c, d)


def gauss_linking_integral(a: Polyline, b: Polyline) -> float:
    """Gauss double sum over segment pairs (exact solid angles, no quadrature)."""
    p0, p1 = a.segments()
    q0, q1 = b.segments()

    def unit(v):
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        return v / np.where(n < 1e-300, 1.0, n)

    # quad corners of the spherical quadrilateral traced by the difference
    # direction as (s, t) runs over the segment-pair parameter square
    r00 = unit(p0[:, None, :] - q0[None, :, :])
    r01 = unit(p0[:, None, :] - q1[None, :, :])
    r11 = unit(p1[:, None, :] - q1[None, :, :])
    r10 = unit(p1[:, None, :] - q0[None, :, :])
    omega = _solid_angle_triangles(r00, r01, r11, r10)
    return float(np.sum(omega)) / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# crossing count
# ---------------------------------------------------------------------------


def _projection_basis(direction):
    d = direction / np.linalg.norm(direction)
    a = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - (a @ d) * d
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2, d


class DegenerateProjection(Exception):
    pass


def _crossing_count_once(a: Polyline, b: Polyline, direction) -> float:
    e1, e2, v = _projection_basis(direction)
    a0, a1 = a.segments()
    b0, b1 = b.segments()

    def plane(pts):
        return np.column_stack([pts @ e1, pts @ e2])

    pa0, pa1 = plane(a0), plane(a1)
    pb0, pb1 = plane(b0), plane(b1)
    ha0, ha1 = a0 @ v, a1 @ v
    hb0, hb1 = b0 @ v, b1 @ v

    scale = max(
        float(np.max(np.abs(np.concatenate([pa0.ravel(), pb0.ravel()])))), 1.0
    )
    eps = 1e-9 * scale

    total = 0.0
    da = pa1 - pa0
    db = pb1 - pb0
    for i in range(pa0.shape[0]):
        r = da[i]
        # 2D segment intersection: pa0[i] + s r = pb0[j] + t db[j]
        denom = r[0] * db[:, 1] - r[1] * db[:, 0]
        w = pb0 - pa0[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[:, 0] * db[:, 1] - w[:, 1] * db[:, 0]) / denom
            t = (w[:, 0] * r[1] - w[:, 1] * r[0]) / denom
        cand = np.nonzero(
            (np.abs(denom) > 1e-12 * scale * scale)
            & (s > -0.5)
            & (s < 1.5)
            & (t > -0.5)
            & (t < 1.5)
        )[0]
        for j in cand:
            sj, tj = float(s[j]), float(t[j])
            if not (0.0 < sj < 1.0 and 0.0 < tj < 1.0):
                if -1e-9 < sj < 1.0 + 1e-9 and -1e-9 < tj < 1.0 + 1e-9:
                    raise DegenerateProjection("crossing at a segment endpoint")
                continue
            if min(sj, tj) < 1e-7 or max(sj, tj) > 1.0 - 1e-7:
                raise DegenerateProjection("crossing too close to an endpoint")
            ha = ha0[i] + sj * (ha1[i] - ha0[i])
            hb = hb0[j] + tj * (hb1[j] - hb0[j])
            if abs(ha - hb) < eps:
                raise DegenerateProjection("curves nearly touch along projection")
            ta = a1[i] - a0[i]
            tb = b1[j] - b0[j]
            if ha > hb:  # a passes over b, viewer at +v
                sign = math.copysign(1.0, float(np.dot(np.cross(ta, tb), v)))
            else:
                sign = math.copysign(1.0, float(np.dot(np.cross(tb, ta), v)))
            total += sign
    return total / 2.0


def crossing_count_linking(a: Polyline, b: Polyline, max_retries: int = 32) -> int:
    """Signed-crossing linking number in a generic seeded projection."""
    rng = np.random.Generator(np.random.Philox(key=_PROJECTION_STREAM_KEY))
    for _ in range(max_retries):
        direction = rng.normal(size=3)
        if np.linalg.norm(direction) < 1e-6:
            continue
        try:
            val = _crossing_count_once(a, b, direction)
        except DegenerateProjection:
            continue
        if abs(val - round(val)) > 1e-6:
            continue  # half-integer total: projection missed a crossing pairing
        return int(round(val))
    raise RuntimeError("no generic projection found for crossing count")


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def linking_number(a: Polyline, b: Polyline, cross_check: bool = True) -> LinkingReport:
    """Linking number of two closed disjoint polylines.

    The Gauss sum is exact per segment pair; the result is rounded to the
    nearest integer and, by default, cross-checked against the signed-crossing
    count of a generic projection.
    """
    for name, c in (("first", a), ("second", b)):
        if not c.closed:
            raise ValueError(f"{name} curve is not closed")
        if c.ambient != "r3":
            raise ValueError("linking_number expects r3 polylines")
    if min_curve_distance(a, b) <= 1e-12:
        raise ValueError("curves intersect (minimum distance is zero)")
    g = gauss_linking_integral(a, b)
    k = int(round(g))
    dev = abs(g - k)
    confidence = 1.0 if dev <= 0.25 else max(0.0, 1.0 - 2.0 * dev)
    if cross_check:
        kc = crossing_count_linking(a, b)
        if kc != k:
            raise RuntimeError(
                f"linking mismatch: gauss integral {g:.6f} -> {k}, crossings -> {kc}"
            )
    return LinkingReport(k, "gauss-integral", confidence, g)


def is_linked(a: Polyline, b: Polyline) -> bool:
    """True iff the linking number is nonzero (sufficient, not necessary)."""
    return linking_number(a, b).linking_number != 0


def winding_lift(c: Polyline, axis: Axis = Z_AXIS) -> np.ndarray:
    """Continuous angle lift of the projection of c to the plane punctured at the axis.

    Returns the lifted angle at each vertex (with the closing vertex repeated
    for closed curves, so the total increment is lift[-1] - lift[0]).
    """
    F = axis.frame()
    local = (c.vertices - axis.point) @ F.T
    xy = local[:, :2]
    r = np.linalg.norm(xy, axis=1)
    if np.any(r < 1e-12):
        raise ValueError("curve has a vertex on the axis")
    theta = np.arctan2(xy[:, 1], xy[:, 0])
    pts = np.append(theta, theta[0]) if c.closed else theta
    # wrap per-edge increments into (-pi, pi]; vertices are off the axis so
    # each straight edge turns by less than pi around it
    inc = np.diff(pts)
    inc = (inc + math.pi) % (2.0 * math.pi) - math.pi
    return np.concatenate([[theta[0]], theta[0] + np.cumsum(inc)])


def separated_by_frame(c0: Polyline, c1: Polyline, f: CliffordFrame) -> bool:
    """True iff c0 and c1 lie on opposite components of S^3 minus psi(TT)."""
    tol = 1e-9

    def side_vals(c):
        if c.ambient == "r3":
            c = inverse_stereographic_polyline(c)
        return f.side_values(c.vertices)

    v0 = side_vals(c0)
    v1 = side_vals(c1)
    if np.min(np.abs(v0)) < tol or np.min(np.abs(v1)) < tol:
        log.warning("separated_by_frame: vertex within %g of the torus (boundary contact)", tol)
        return False
    s0 = np.sign(v0)
    s1 = np.sign(v1)
    if np.any(s0 != s0[0]) or np.any(s1 != s1[0]):
        return False
    return bool(s0[0] != s1[0])


def close_at_radius(c: Polyline, r_close: float = 1e3, n_arc: int = 64) -> Polyline:
    """Close an open polyline through a far semicircle of radius r_close.

    Used for the unbounded stereographic image of a Hopf circle (the clipped
    z-axis): the Gauss sum then sees a closed loop, with O(1/r_close) error in
    the integral.
    """
    if c.closed:
        return c
    v = c.vertices
    a, b = v[-1], v[0]
    chord = b - a
    mid = 0.5 * (a + b)
    # plane spanned by the chord and the outward direction through the midpoint
    out = mid - (mid @ chord) / max(float(chord @ chord), 1e-300) * chord
    nrm = np.linalg.norm(out)
    if nrm < 1e-9:
        # endpoints symmetric about the origin: pick any normal direction
        ref = np.array([1.0, 0.0, 0.0])
        out = ref - (ref @ chord) / max(float(chord @ chord), 1e-300) * chord
        nrm = np.linalg.norm(out)
    out /= nrm
    half = 0.5 * float(np.linalg.norm(chord))
    e_c = chord / (2.0 * half)
    rad = max(r_close, 2.0 * half)
    t = np.linspace(0.0, math.pi, n_arc + 2)[1:-1]
    arc = mid + np.outer(np.cos(t) * half, -e_c) + np.outer(np.sin(t) * rad, out)
    return Polyline(np.vstack([v, arc]), "r3", True)
