"""Coordinates, metrics and conformal maps on S^3 and R^3.

S^3 points are ambient vectors (Re z1, Im z1, Re z2, Im z2) with
|z1|^2 + |z2|^2 = 1.  R^3 points are plain 3-vectors; the point at
infinity is the sentinel ``INFINITY`` (all components +inf).

The default stereographic projection uses the pole (z1, z2) = (0, i),
i.e. the ambient vector (0, 0, 0, 1).  Under this chart the Hopf circle
H0 = {(z1, 0)} maps to the unit circle in the z = 0 plane, H1 = {(0, z2)}
maps to the z-axis (closed through infinity), and the Clifford torus maps
to the tube of radius 1 around the horizontal circle of radius sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi

# Point at infinity in the R^3 chart.
INFINITY = np.array([np.inf, np.inf, np.inf])

# Default stereographic pole, as an ambient S^3 vector: (z1, z2) = (0, i).
DEFAULT_POLE = np.array([0.0, 0.0, 0.0, 1.0])


def is_infinity(q) -> bool:
    return bool(np.any(np.isinf(q)))


class HopfCoords(NamedTuple):
    """Hopf angles (eta, xi1, xi2) with eta in [0, pi/2], xi in [0, 2pi)."""

    eta: float
    xi1: float
    xi2: float


def _wrap_angle(x: float) -> float:
    """Reduce an angle to the half-open interval [0, 2pi)."""
    y = math.fmod(x, TWO_PI)
    if y < 0.0:
        y += TWO_PI
    if y >= TWO_PI:  # fmod round-off can land exactly on 2pi
        y = 0.0
    return y


def hopf_to_point(c: HopfCoords) -> np.ndarray:
    """Ambient S^3 vector of (eta, xi1, xi2): z1 = e^{i xi1} cos eta, z2 = e^{i xi2} sin eta."""
    eta, xi1, xi2 = c
    if not 0.0 <= eta <= math.pi / 2.0 + 1e-12:
        raise ValueError(f"eta={eta} outside [0, pi/2]")
    ce, se = math.cos(eta), math.sin(eta)
    return np.array(
        [ce * math.cos(xi1), ce * math.sin(xi1), se * math.cos(xi2), se * math.sin(xi2)]
    )


def point_to_hopf(p) -> HopfCoords:
    """Inverse of :func:`hopf_to_point`; undefined angles on the seam are returned as 0."""
    a, b, c, d = np.asarray(p, dtype=float)
    r1 = math.hypot(a, b)
    r2 = math.hypot(c, d)
    eta = math.atan2(r2, r1)
    eta = min(max(eta, 0.0), math.pi / 2.0)
    xi1 = _wrap_angle(math.atan2(b, a)) if r1 > 1e-14 else 0.0
    xi2 = _wrap_angle(math.atan2(d, c)) if r2 > 1e-14 else 0.0
    return HopfCoords(eta, xi1, xi2)


def check_on_sphere(p, tol: float = 1e-12) -> None:
    p = np.asarray(p, dtype=float)
    if abs(float(p @ p) - 1.0) > tol:
        raise ValueError(f"point is not on S^3: |p|^2 = {float(p @ p)!r}")


def _pole_alignment(pole) -> np.ndarray | None:
    """Orthogonal 4x4 map sending ``pole`` to DEFAULT_POLE (None if already there)."""
    pole = np.asarray(pole, dtype=float)
    v = pole - DEFAULT_POLE
    nv2 = float(v @ v)
    if nv2 < 1e-28:
        return None
    # Householder reflection exchanging pole and the default pole.
    return np.eye(4) - 2.0 * np.outer(v, v) / nv2


def stereographic(p, pole=None) -> np.ndarray:
    """Stereographic projection S^3 -> R^3 (pole maps to INFINITY).

    With the default pole the Clifford torus lands on the tube of radius 1
    around the horizontal circle of radius sqrt(2).
    """
    p = np.asarray(p, dtype=float)
    if pole is not None:
        R = _pole_alignment(pole)
        if R is not None:
            p = R @ p
    a, b, c, d = p
    denom = 1.0 - d
    if abs(denom) < 1e-14:
        return INFINITY.copy()
    return np.array([a, b, c]) / denom


def inverse_stereographic(q, pole=None) -> np.ndarray:
    """Inverse of :func:`stereographic`; INFINITY maps back to the pole."""
    if is_infinity(q):
        p = DEFAULT_POLE.copy()
    else:
        q = np.asarray(q, dtype=float)
        s = float(q @ q)
        p = np.array([2.0 * q[0], 2.0 * q[1], 2.0 * q[2], s - 1.0]) / (s + 1.0)
    if pole is not None:
        R = _pole_alignment(pole)
        if R is not None:
            p = R @ p  # R is an involution
    return p


# ---------------------------------------------------------------------------
# Polylines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Polyline:
    """A sampled curve: ordered vertices in one ambient space, optionally closed.

    ``ambient`` is "r3" (vertices (N,3)) or "s3" (ambient vectors (N,4)).
    """

    vertices: np.ndarray
    ambient: str = "r3"
    closed: bool = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("polyline needs at least 2 vertices")
        dim = {"r3": 3, "s3": 4}.get(self.ambient)
        if dim is None:
            raise ValueError(f"unknown ambient {self.ambient!r}")
        if v.shape[1] != dim:
            raise ValueError(f"ambient {self.ambient} expects {dim} columns, got {v.shape[1]}")
        d = np.linalg.norm(np.diff(v, axis=0), axis=1)
        if np.any(d < 1e-14):
            raise ValueError("consecutive vertices must be distinct")
        if np.all(np.linalg.norm(v - v[0], axis=1) < 1e-14):
            raise ValueError("degenerate polyline: all vertices coincide")
        object.__setattr__(self, "vertices", v)

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Segment start/end vertex arrays, including the closing segment."""
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]


def curve_length(c: Polyline) -> float:
    """Total chordal length (Euclidean chords in the curve's ambient space)."""
    a, b = c.segments()
    return float(np.sum(np.linalg.norm(b - a, axis=1)))


def sample_hopf_link(n: int) -> tuple[Polyline, Polyline]:
    """n-gon approximations of the Hopf circles H0 = {(z1, 0)} and H1 = {(0, z2)}."""
    if n < 3:
        raise ValueError("need n >= 3 vertices per circle")
    t = TWO_PI * np.arange(n) / n
    z = np.zeros(n)
    h0 = np.column_stack([np.cos(t), np.sin(t), z, z])
    h1 = np.column_stack([z, z, np.cos(t), np.sin(t)])
    return Polyline(h0, "s3", True), Polyline(h1, "s3", True)


def coaxial_circle(radius: float, z0: float, n: int = 128) -> Polyline:
    """Horizontal circle {x^2+y^2 = radius^2, z = z0} sampled as a closed n-gon."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    t = TWO_PI * np.arange(n) / n
    return Polyline(
        np.column_stack([radius * np.cos(t), radius * np.sin(t), np.full(n, float(z0))]),
        "r3",
        True,
    )


def z_axis_segment(z_min: float, z_max: float, n: int = 65) -> Polyline:
    """Open polyline along the z-axis (a clipped unbounded curve in the chart)."""
    z = np.linspace(z_min, z_max, n)
    return Polyline(np.column_stack([np.zeros(n), np.zeros(n), z]), "r3", False)


def stereographic_polyline(c: Polyline, pole=None) -> Polyline:
    """Vertexwise stereographic image of an S^3 polyline; errors on a pole hit."""
    if c.ambient != "s3":
        raise ValueError("expected an s3 polyline")
    out = []
    for i, p in enumerate(c.vertices):
        q = stereographic(p, pole)
        if is_infinity(q):
            raise ValueError(f"vertex {i} maps to infinity (lies at the pole)")
        out.append(q)
    return Polyline(np.array(out), "r3", c.closed)


def inverse_stereographic_polyline(c: Polyline, pole=None) -> Polyline:
    if c.ambient != "r3":
        raise ValueError("expected an r3 polyline")
    return Polyline(
        np.array([inverse_stereographic(q, pole) for q in c.vertices]), "s3", c.closed
    )


# ---------------------------------------------------------------------------
# Mobius maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneReflection:
    """Reflection across the plane {n . x = offset} with unit normal n."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        nn = np.linalg.norm(n)
        if nn < 1e-300:
            raise ValueError("zero normal")
        object.__setattr__(self, "normal", n / nn)
        object.__setattr__(self, "offset", float(self.offset) / nn)

    def apply(self, q):
        if is_infinity(q):
            return INFINITY.copy()
        return q - 2.0 * (float(self.normal @ q) - self.offset) * self.normal

    def inverse(self):
        return self


@dataclass(frozen=True)
class SphereInversion:
    """Inversion in the sphere of given center and radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    def apply(self, q):
        if is_infinity(q):
            return self.center.copy()
        d = q - self.center
        d2 = float(d @ d)
        if d2 < 1e-300:
            return INFINITY.copy()
        return self.center + (self.radius**2 / d2) * d

    def inverse(self):
        return self


@dataclass(frozen=True)
class Similarity:
    """x -> scale * R x + t with R a 3x3 rotation (orthogonal) matrix."""

    scale: float = 1.0
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.scale == 0:
            raise ValueError("scale must be nonzero")
        R = np.asarray(self.rotation, dtype=float)
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise ValueError("rotation must be orthogonal")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))

    def apply(self, q):
        if is_infinity(q):
            return INFINITY.copy()
        return self.scale * (self.rotation @ q) + self.translation

    def inverse(self):
        Rt = self.rotation.T
        return Similarity(1.0 / self.scale, Rt, -(Rt @ self.translation) / self.scale)


@dataclass(frozen=True)
class CliffordSwap:
    """The S^3 map (z1, z2) -> (z2, z1), realized in R^3 through the default chart.

    Stored abstractly on S^3; composing through the default stereographic
    projection avoids stacking several inversions.
    """

    def apply(self, q):
        return stereographic(self.apply_s3(inverse_stereographic(q)))

    @staticmethod
    def apply_s3(p):
        a, b, c, d = p
        return np.array([c, d, a, b])

    def inverse(self):
        return self


@dataclass(frozen=True)
class MobiusMap:
    """A finite composition of conformal primitives, applied left-to-right."""

    primitives: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))

    def apply_r3(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float) if not is_infinity(q) else INFINITY.copy()
        for prim in self.primitives:
            q = prim.apply(q)
        return q

    def apply_s3(self, p) -> np.ndarray:
        """Action on S^3 by conjugation through the default chart (total, no errors)."""
        q = stereographic(p)
        out = self.apply_r3(q)
        return inverse_stereographic(out)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(tuple(prim.inverse() for prim in reversed(self.primitives)))

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """Map applying ``self`` first, then ``other``."""
        return MobiusMap(self.primitives + other.primitives)


def identity_map() -> MobiusMap:
    return MobiusMap(())


def clifford_swap() -> MobiusMap:
    """The reflection on the Clifford torus: (z1, z2) -> (z2, z1)."""
    return MobiusMap((CliffordSwap(),))


def apply_mobius(m: MobiusMap, c: Polyline) -> Polyline:
    """Vertexwise image of a polyline; closedness is preserved.

    R^3 curves raise if a vertex maps to infinity (the message carries the
    vertex index); S^3 curves never do.
    """
    if c.ambient == "s3":
        return Polyline(np.array([m.apply_s3(p) for p in c.vertices]), "s3", c.closed)
    out = []
    for i, q in enumerate(c.vertices):
        img = m.apply_r3(q)
        if is_infinity(img):
            raise ValueError(f"vertex {i} maps to the point at infinity")
        out.append(img)
    return Polyline(np.array(out), "r3", c.closed)


# ---------------------------------------------------------------------------
# Clifford frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CliffordFrame:
    """A conformal Clifford torus T = psi(TT), with side-membership tests.

    Side 0 is the component of S^3 \\ T containing psi(H0) (where |z1|^2 > 1/2
    upstream of psi); side 1 is the one containing psi(H1).
    """

    psi: MobiusMap = field(default_factory=identity_map)

    def side_values(self, points_s3) -> np.ndarray:
        """1/2 - |z1|^2 of the psi-preimages; negative on side 0, positive on side 1."""
        inv = self.psi.inverse()
        pts = np.atleast_2d(np.asarray(points_s3, dtype=float))
        vals = np.empty(pts.shape[0])
        for i, p in enumerate(pts):
            z = inv.apply_s3(p)
            vals[i] = 0.5 - (z[0] ** 2 + z[1] ** 2)
        return vals

    def side(self, point_s3) -> int:
        return int(self.side_values(point_s3)[0] > 0.0)

    def torus_polyline(self, n_s: int = 32, n_t: int = 64) -> np.ndarray:
        """Sample of T = psi(TT) as an (n_s*n_t, 4) array of ambient vectors."""
        s = TWO_PI * np.arange(n_s) / n_s
        t = TWO_PI * np.arange(n_t) / n_t
        ss, tt = np.meshgrid(s, t, indexing="ij")
        r = 1.0 / math.sqrt(2.0)
        pts = np.column_stack(
            [
                r * np.cos(tt.ravel()),
                r * np.sin(tt.ravel()),
                r * np.cos(ss.ravel()),
                r * np.sin(ss.ravel()),
            ]
        )
        return np.array([self.psi.apply_s3(p) for p in pts])

    def core_circle(self, side: int, n: int = 128) -> Polyline:
        """psi-image of the core circle (H0 for side 0, H1 for side 1)."""
        h0, h1 = sample_hopf_link(n)
        return apply_mobius(self.psi, h0 if side == 0 else h1)
