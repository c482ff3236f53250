import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capax.geometry import (CliffordFrame, MobiusMap, PlaneReflection, Polyline,
                            Similarity, SphereInversion, apply_mobius,
                            clifford_swap, coaxial_circle, curve_length,
                            hopf_to_point, inverse_stereographic,
                            inverse_stereographic_polyline, point_to_hopf,
                            sample_hopf_link, stereographic, z_axis_segment)

RNG = np.random.default_rng(20240817)


def random_sphere_point():
    v = RNG.normal(size=4)
    return v / np.linalg.norm(v)


def test_hopf_coords_roundtrip():
    for _ in range(50):
        p = random_sphere_point()
        q = hopf_to_point(point_to_hopf(p))
        assert np.allclose(p, q, atol=1e-12)


def test_stereographic_roundtrip():
    for _ in range(50):
        p = random_sphere_point()
        if abs(p[3] - 1.0) < 1e-6:
            continue
        assert np.allclose(inverse_stereographic(stereographic(p)), p, atol=1e-10)


def test_stereographic_image_of_h0_is_unit_circle():
    h0, _ = sample_hopf_link(64)
    chart = np.array([stereographic(p) for p in h0.vertices])
    assert np.allclose(np.hypot(chart[:, 0], chart[:, 1]), 1.0, atol=1e-12)
    assert np.allclose(chart[:, 2], 0.0, atol=1e-12)


def test_clifford_swap_is_involution():
    swap = clifford_swap()
    for _ in range(25):
        p = random_sphere_point()
        assert np.allclose(swap.apply_s3(swap.apply_s3(p)), p, atol=1e-9)


def test_clifford_swap_exchanges_hopf_coordinates():
    swap = clifford_swap()
    for _ in range(25):
        p = random_sphere_point()
        c = point_to_hopf(p)
        cs = point_to_hopf(swap.apply_s3(p))
        assert cs.eta == pytest.approx(math.pi / 2 - c.eta, abs=1e-9)


def test_mobius_compose_and_inverse():
    m = MobiusMap((Similarity(2.0), SphereInversion(np.zeros(3), 1.0),
                   PlaneReflection(np.array([0.0, 0.0, 1.0]), 0.3)))
    mi = m.inverse()
    for _ in range(25):
        q = RNG.normal(size=3)
        assert np.allclose(mi.apply_r3(m.apply_r3(q)), q, atol=1e-9)


def test_similarity_requires_orthogonal_rotation():
    with pytest.raises(ValueError):
        Similarity(1.0, np.eye(3) + 0.1)


def test_polyline_validation():
    with pytest.raises(ValueError):
        Polyline(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Polyline(np.random.default_rng(0).normal(size=(4, 4)), ambient="r3")


def test_apply_mobius_rejects_infinity():
    inv = MobiusMap((SphereInversion(np.zeros(3), 1.0),))
    c = Polyline(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    with pytest.raises(ValueError):
        apply_mobius(inv, c)


def test_curve_length_circle():
    c = coaxial_circle(2.0, 0.0, n=4096)
    assert curve_length(c) == pytest.approx(4 * math.pi, rel=1e-5)


def test_z_axis_segment_open():
    seg = z_axis_segment(-1.0, 1.0, n=9)
    assert not seg.closed
    assert np.allclose(seg.vertices[:, :2], 0.0)


def test_clifford_frame_sides():
    f = CliffordFrame()
    inside = inverse_stereographic(np.array([math.sqrt(2.0), 0.0, 0.0]))
    outside = inverse_stereographic(np.array([3.0, 0.0, 0.0]))
    assert f.side(inside) == 0
    assert f.side(outside) == 1
    # the core circles land on the correct sides
    for side in (0, 1):
        core = f.core_circle(side, n=32)
        assert all(f.side(p) == side for p in core.vertices)


@given(st.floats(min_value=0.2, max_value=3.0),
       st.floats(min_value=-1.5, max_value=1.5))
def test_capacity_chart_circle_roundtrip(radius, z0):
    c = coaxial_circle(radius, z0, n=32)
    up = inverse_stereographic_polyline(c)
    assert np.allclose(np.linalg.norm(up.vertices, axis=1), 1.0, atol=1e-10)
