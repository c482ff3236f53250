import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capax.geometry import (CliffordFrame, Polyline, apply_mobius,
                            clifford_swap, coaxial_circle, sample_hopf_link,
                            z_axis_segment)
from capax.topology import (Axis, Z_AXIS, close_at_radius,
                            gauss_linking_integral, hausdorff_distance,
                            is_linked, linking_number, min_curve_distance,
                            point_to_segments_distance, separated_by_frame,
                            winding_lift)


def vertical_ring(x0: float, radius: float = 1.0, n: int = 64) -> Polyline:
    """Circle in the xz-plane centered at (x0, 0, 0)."""
    t = 2 * math.pi * np.arange(n) / n
    return Polyline(np.column_stack(
        [x0 + radius * np.cos(t), np.zeros(n), radius * np.sin(t)]))


def test_hopf_link_chart_pair_is_linked():
    a = coaxial_circle(1.0, 0.0, n=96)
    b = vertical_ring(1.0, 1.0, n=96)  # threads the unit circle
    rep = linking_number(a, b)
    assert abs(rep.linking_number) == 1
    assert rep.gauss_value == pytest.approx(rep.linking_number, abs=1e-3)


def test_coaxial_circles_unlinked():
    a = coaxial_circle(1.0, 0.0, n=64)
    b = coaxial_circle(2.0, 0.5, n=64)
    assert linking_number(a, b).linking_number == 0
    assert not is_linked(a, b)


def test_gauss_integral_far_rings_near_zero():
    a = vertical_ring(0.0)
    b = vertical_ring(10.0)
    assert abs(gauss_linking_integral(a, b)) < 1e-3


def test_linking_invariant_under_mobius():
    a = coaxial_circle(1.4, 0.2, n=96)
    b = vertical_ring(1.4, 1.2, n=96)
    lk = linking_number(a, b).linking_number
    swap = clifford_swap()
    lk2 = linking_number(apply_mobius(swap, a), apply_mobius(swap, b)).linking_number
    assert abs(lk2) == abs(lk) == 1


def test_winding_lift_circle():
    c = coaxial_circle(2.0, 0.0, n=64)
    lift = winding_lift(c, Z_AXIS)
    assert (lift[-1] - lift[0]) / (2 * math.pi) == pytest.approx(1.0, abs=1e-9)


def test_winding_lift_nonwinding_loop():
    lift = winding_lift(vertical_ring(3.0), Z_AXIS)
    assert abs(lift[-1] - lift[0]) < 1e-9


def test_point_to_segments_distance():
    seg_a = np.array([[0.0, 0.0, 0.0]])
    seg_b = np.array([[1.0, 0.0, 0.0]])
    assert point_to_segments_distance(np.array([0.5, 1.0, 0.0]), seg_a, seg_b) == pytest.approx(1.0)
    assert point_to_segments_distance(np.array([2.0, 0.0, 0.0]), seg_a, seg_b) == pytest.approx(1.0)


def test_hausdorff_distance_shifted_circles():
    a = coaxial_circle(1.0, 0.0, n=512)
    b = coaxial_circle(1.0, 0.3, n=512)
    assert hausdorff_distance(a, b, tol=1e-6) == pytest.approx(0.3, abs=1e-4)


def test_min_curve_distance():
    a = coaxial_circle(1.0, 0.0, n=256)
    b = coaxial_circle(1.0, 0.5, n=256)
    assert min_curve_distance(a, b) == pytest.approx(0.5, abs=1e-3)


def test_separated_by_frame_standard():
    f = CliffordFrame()
    inside = coaxial_circle(math.sqrt(2.0), 0.0, n=64)
    outside = vertical_ring(math.sqrt(2.0), 1.4, n=64)
    axis = z_axis_segment(-3.0, 3.0, n=33)
    assert separated_by_frame(inside, outside, f)
    assert separated_by_frame(inside, axis, f)
    assert not separated_by_frame(inside, inside, f)


def test_close_at_radius_restores_linking():
    axis = z_axis_segment(-50.0, 50.0, n=201)
    closed_axis = close_at_radius(axis, r_close=1e3)
    circle = coaxial_circle(1.0, 0.0, n=96)
    assert abs(linking_number(closed_axis, circle).linking_number) == 1


@settings(deadline=None, max_examples=25)
@given(st.integers(min_value=0, max_value=10_000))
def test_random_perturbed_hopf_pairs_linked(seed):
    rng = np.random.default_rng(seed)
    n = 64
    t = 2 * math.pi * np.arange(n) / n
    wob = 0.15 * rng.standard_normal(3)
    a = Polyline(np.column_stack([np.cos(t) + wob[0] * np.cos(2 * t),
                                  np.sin(t), wob[1] * np.sin(3 * t)]))
    b = vertical_ring(1.0 + 0.2 * float(rng.uniform(-1, 1)), 1.0)
    assert abs(linking_number(a, b).linking_number) == 1
