import math

import numpy as np
from pytest import approx, raises

from errors import DiskDynamicsError, NotPeriodicError
from ergodic import (asymptotic_action, asymptotic_winding, asymptotic_winding_integral, birkhoff_estimate,
                     cauchy_decay_rate, periodic_average_action, space_average_action, theorem_budget,
                     verify_main_theorem)
from flow import FlowConfig
from geometry import QuadratureSpec
from oneform import PrimitiveOneForm

RADIAL_FORM = PrimitiveOneForm("radial")


def test_birkhoff_estimate_partial_averages():
    estimate = birkhoff_estimate(np.arange(8, dtype=float))
    assert estimate.partial_averages == approx((0.5, 1.5, 2.5, 3.5))
    assert estimate.value == approx(3.5)
    assert estimate.cauchy_gap == approx(1.0)
    with raises(ValueError):
        birkhoff_estimate(np.ones(3))


def test_birkhoff_estimate_of_a_batch():
    estimate = birkhoff_estimate(np.ones((8, 3)))
    assert estimate.value == approx([1.0, 1.0, 1.0])
    assert np.all(estimate.cauchy_gap == 0.0)


def test_asymptotic_action_on_a_circle(radial, fast_flow):
    estimate = asymptotic_action(radial, RADIAL_FORM, (0.5, 0.0), 8, fast_flow)
    assert estimate.value == approx(0.9375, abs=1e-6)
    assert estimate.cauchy_gap < 1e-9


def test_asymptotic_winding_about_the_center(radial, fast_flow):
    estimate = asymptotic_winding(radial, (0.0, 0.0), (0.5, 0.0), 8, fast_flow)
    assert estimate.value == approx(3.0 / (2 * math.pi), abs=1e-7)


def test_winding_integral_about_the_center(radial):
    # int omega(r) / 2 pi по диску = int_0^1 4 (1 - r^2) r dr = 1
    value = asymptotic_winding_integral(radial, (0.0, 0.0), 4, QuadratureSpec("polar-grid", 32, 16),
                                        FlowConfig(128))
    assert value.value == approx(1.0, abs=1e-3)


def test_main_theorem_at_the_center(radial):
    report = verify_main_theorem(radial, (0.0, 0.0), RADIAL_FORM, 4, QuadratureSpec("polar-grid", 32, 16),
                                 FlowConfig(128))
    assert report.passed
    assert report.action.value == approx(1.0, abs=1e-7)
    assert report.closed_form == approx(1.0)
    assert report.closed_form_gap < 1e-3


def test_main_theorem_for_the_trivial_map(trivial, fast_flow):
    report = verify_main_theorem(trivial, (0.3, 0.1), RADIAL_FORM, 4, QuadratureSpec("polar-grid", 8, 8), fast_flow)
    assert report.residual == 0.0
    assert report.passed
    assert report.closed_form == 0.0


def test_theorem_budget_shrinks_with_n():
    small = theorem_budget(RADIAL_FORM, np.array([0.3, 0.0]), np.array([0.0, 0.3]), 4, 0.0)
    large = theorem_budget(RADIAL_FORM, np.array([0.3, 0.0]), np.array([0.0, 0.3]), 64, 0.0)
    assert large < small
    assert large > 1.5 * math.pi / 64


def test_periodic_average_action(radial, fast_flow):
    assert periodic_average_action(radial, RADIAL_FORM, (0.0, 0.0), 1, fast_flow) == approx(1.0, abs=1e-9)
    with raises(NotPeriodicError):
        periodic_average_action(radial, RADIAL_FORM, (0.5, 0.0), 1, fast_flow)


def test_space_average_action_is_invariant_for_radial_maps(radial, fast_flow):
    report = space_average_action(radial, RADIAL_FORM, 4, QuadratureSpec("polar-grid", 8, 8), fast_flow)
    assert report.gap < 1e-8
    assert report.passed
    assert report.unit_time.value == approx(2.0 * math.pi / 3.0, abs=0.05)


def test_cauchy_rate_of_a_trivial_map_is_infinite(trivial, fast_flow):
    ys = np.array([[0.3, 0.1], [-0.2, 0.5]])
    decay = cauchy_decay_rate(trivial, (0.0, 0.0), ys, 16, fast_flow)
    assert decay.ns == (2, 4, 8, 16)
    assert decay.rate == math.inf
    with raises(ValueError):
        cauchy_decay_rate(trivial, (0.0, 0.0), ys, 8, fast_flow)


def test_birkhoff_estimate_records_the_per_period_bound():
    assert birkhoff_estimate(np.array([1.0, -3.0, 2.0, 0.5])).bound == 3.0
    assert np.all(birkhoff_estimate(np.array([[1.0, -2.0]] * 4)).bound == [1.0, 2.0])


def test_winding_integral_honours_the_tube_radius(trivial, fast_flow):
    # (0.25, 0.25) - узел полярной сетки 4 x 4
    grid = QuadratureSpec("polar-grid", 4, 4)
    value = asymptotic_winding_integral(trivial, (0.25, 0.25), 4, grid, fast_flow, min_separation=1e-4)
    assert value.value == 0.0
    with raises(DiskDynamicsError):
        asymptotic_winding_integral(trivial, (0.25, 0.25), 4, grid, fast_flow, min_separation=0.0)


def test_main_theorem_with_a_configured_second_primitive(radial):
    report = verify_main_theorem(radial, (0.0, 0.0), RADIAL_FORM, 4, QuadratureSpec("polar-grid", 16, 8),
                                 FlowConfig(128), min_separation=1e-5, second_form=PrimitiveOneForm("horizontal"))
    assert report.passed
    assert report.action.value == approx(1.0, abs=1e-7)


def test_polar_grid_error_of_the_space_average(radial, fast_flow):
    report = space_average_action(radial, RADIAL_FORM, 4, QuadratureSpec("polar-grid", 16, 16), fast_flow)
    # действие за период гладкое, разница при измельчении мала
    assert 0.0 < report.unit_time.error < 5e-3
