"""Linking-preserving symmetrization of curves and densities."""

import math

import numpy as np
import pytest

from capax.geometry import Polyline, coaxial_circle
from capax.pde import VoxelGrid
from capax.symmetrize import (DihedralFrame, HalfspaceFrame,
                              axisymmetric_surrogate, dihedral_symmetrize,
                              even_reflect_density, linked_component,
                              polyline_set_distance, reflect_half)
from capax.topology import winding_lift


def winding(c):
    lift = winding_lift(c)
    return (lift[-1] - lift[0]) / (2.0 * math.pi)


def trefoilish(n=160, wobble=0.3):
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    r = 1.0 + wobble * np.cos(3 * t)
    return Polyline(np.column_stack([r * np.cos(t), r * np.sin(t),
                                     0.4 * np.sin(2 * t)]))


def test_frame_validation():
    with pytest.raises(ValueError):
        HalfspaceFrame(np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        DihedralFrame(HalfspaceFrame(), 0)
    fr = HalfspaceFrame(np.array([2.0, 0.0, 0.0]))
    assert np.allclose(fr.normal, [1.0, 0.0, 0.0])
    flipped = HalfspaceFrame(np.array([1.0, 0.0, 0.0]), flip=True)
    assert np.allclose(flipped.normal, [-1.0, 0.0, 0.0])


def test_dihedral_group_order():
    f = DihedralFrame(HalfspaceFrame(), 4)
    mats = f.group()
    assert len(mats) == 8
    for g in mats:
        assert np.allclose(g @ g.T, np.eye(3), atol=1e-12)
        assert abs(abs(np.linalg.det(g)) - 1.0) < 1e-12


def test_reflect_coaxial_circle_fixed_point():
    circ = coaxial_circle(1.0, 0.3, n=96)
    for ang in (0.0, 0.7, 2.1):
        fr = HalfspaceFrame(np.array([math.cos(ang), math.sin(ang), 0.0]))
        out = reflect_half(circ, fr)
        # inserted plane-crossing vertices sit on the circle between the
        # original polygon vertices, so set distance is bounded by the chord
        # sagitta at n=96, about 5e-4
        assert any(polyline_set_distance(o, circ) < 2e-3 for o in out)


def test_reflect_is_mirror_symmetric():
    c = trefoilish()
    fr = HalfspaceFrame(np.array([math.cos(0.5), math.sin(0.5), 0.0]))
    out = reflect_half(c, fr)
    allv = np.vstack([o.vertices for o in out])
    mirrored = fr.reflect(allv)
    from scipy.spatial import cKDTree
    tree = cKDTree(allv)
    assert tree.query(mirrored)[0].max() < 1e-8


def test_reflect_idempotent():
    c = trefoilish()
    fr = HalfspaceFrame(np.array([math.cos(1.1), math.sin(1.1), 0.0]))
    once = reflect_half(c, fr)
    again = [piece for o in once for piece in reflect_half(o, fr)]
    for o in once:
        assert min(polyline_set_distance(o, a) for a in again) < 1e-9
    for a in again:
        assert min(polyline_set_distance(a, o) for o in once) < 1e-9


def test_reflect_keeps_linked_component():
    c = trefoilish()
    assert abs(round(winding(c))) == 1
    for ang in (0.0, 0.9, 1.7, 2.6):
        fr = HalfspaceFrame(np.array([math.cos(ang), math.sin(ang), 0.0]))
        out = reflect_half(c, fr)
        lk = linked_component(out)
        assert abs(round(winding(lk))) >= 1


def test_dihedral_invariance_under_group():
    c = trefoilish()
    f = DihedralFrame(HalfspaceFrame(np.array([math.cos(0.5),
                                               math.sin(0.5), 0.0])), 4)
    out = dihedral_symmetrize(c, f)
    allv = np.vstack([o.vertices for o in out])
    from scipy.spatial import cKDTree
    tree = cKDTree(allv)
    for g in f.group():
        assert tree.query(allv @ g.T)[0].max() < 1e-8
    assert abs(round(winding(linked_component(out)))) >= 1


def test_dihedral_k1_matches_reflect():
    c = trefoilish()
    fr = HalfspaceFrame(np.array([math.cos(0.5), math.sin(0.5), 0.0]))
    a = reflect_half(c, fr)
    b = dihedral_symmetrize(c, DihedralFrame(fr, 1))
    for x in a:
        assert min(polyline_set_distance(x, y) for y in b) < 1e-9
    for y in b:
        assert min(polyline_set_distance(y, x) for x in a) < 1e-9


def test_linked_component_rejects_unlinked():
    unlinked = Polyline(np.column_stack([
        2.0 + 0.3 * np.cos(np.linspace(0, 2 * math.pi, 64, endpoint=False)),
        np.zeros(64),
        0.3 * np.sin(np.linspace(0, 2 * math.pi, 64, endpoint=False))]))
    with pytest.raises(ValueError):
        linked_component([unlinked])


def test_axisymmetric_surrogate():
    circ = coaxial_circle(0.8, 0.2, n=64)
    s = axisymmetric_surrogate(circ)
    assert polyline_set_distance(s, circ) < 1e-9
    c = trefoilish()
    s = axisymmetric_surrogate(c)
    v0 = c.vertices[0]
    r0, z0 = math.hypot(v0[0], v0[1]), v0[2]
    rr = np.hypot(s.vertices[:, 0], s.vertices[:, 1])
    assert np.allclose(rr, r0, atol=1e-9)
    assert np.allclose(s.vertices[:, 2], z0, atol=1e-9)


def make_grid(n=8):
    labels = np.zeros((n + 1, n + 1, n + 1), dtype=np.uint8)
    labels[0, 0, 0] = 1
    labels[n, n, n] = 2
    return VoxelGrid(np.full(3, -1.0), np.full(3, 1.0), 2.0 / n, labels)


def test_even_reflect_density_energy_monotone():
    grid = make_grid()
    rng = np.random.default_rng(3)
    rho = rng.random((8, 8, 8)).astype(np.float32)
    fr = HalfspaceFrame(np.array([1.0, 0.0, 0.0]))
    out = even_reflect_density(rho, grid, fr)

    def energy(r):
        return float(np.sum(r.astype(float) ** 3))

    assert energy(out) <= energy(rho) + 1e-12
    again = even_reflect_density(out, grid, fr)
    assert np.array_equal(again, out)
