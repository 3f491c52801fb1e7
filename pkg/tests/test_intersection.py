import math

import numpy as np
from pytest import approx, mark, raises

from errors import TransversalityError
from flow import FlowConfig
from geometry import QuadratureSpec, random_boundary_points, random_disk_points
from intersection import (_levels, action_identity, anchor_sensitivity, intersection_integral,
                          intersection_number, relative_angle, scan_intersections)
from oneform import PrimitiveOneForm
from winding import period_windings

CFG = FlowConfig(256)


def test_relative_angle():
    assert relative_angle((0.0, 0.0), (0.0, 0.5), (1.0, 0.0)) == approx(math.pi / 2)
    assert relative_angle((0.0, 0.0), (0.0, -0.5), (1.0, 0.0)) == approx(-math.pi / 2)


def test_levels_are_half_open():
    two_pi = 2 * math.pi
    assert list(_levels(0.1, two_pi)) == [1]
    assert list(_levels(two_pi, two_pi + 0.1)) == []
    assert list(_levels(two_pi + 0.1, two_pi)) == [1]
    assert list(_levels(-0.1, 0.1)) == [0]
    assert list(_levels(0.3, 0.3)) == []


def test_stationary_pair_never_crosses(trivial):
    result = intersection_number(trivial, (0.0, 0.0), (0.5, 0.5), (1.0, 0.0), 3, CFG)
    assert result.value == 0
    assert result.crossings == ()
    assert result.min_angle_rate == math.inf


def test_rotating_pair_crosses_once(radial):
    # y поворачивается вокруг x = 0 на 3 радиана за период, начиная с pi/2
    assert intersection_number(radial, (0.0, 0.0), (0.0, 0.5), (1.0, 0.0), 1, CFG).value == 0
    result = intersection_number(radial, (0.0, 0.0), (0.0, 0.5), (1.0, 0.0), 2, CFG)
    assert result.value == 1
    (event,) = result.crossings
    assert event.sign == 1
    assert event.time == approx((1.5 * math.pi) / 3.0, abs=1e-6)
    assert event.angle_rate == approx(3.0, abs=1e-6)
    assert event.radial_fraction == approx(0.5)


def test_reverse_rotation_counts_negative(radial):
    result = intersection_number(radial.inverse(), (0.0, 0.0), (0.0, -0.5), (1.0, 0.0), 2, CFG)
    assert result.value == -1


def test_crossings_beyond_the_anchor_are_ignored(radial):
    # поверхность - отрезок от x до e; y вне |y - x| < |e - x| не считается
    result = intersection_number(radial, (0.5, 0.0), (0.0, 0.0), (1.0, 0.0), 2, CFG)
    assert all(event.radial_fraction < 1.0 for event in result.crossings)


def test_grazing_start_is_rejected(radial):
    with raises(TransversalityError):
        intersection_number(radial, (0.0, 0.0), (0.5, 0.0), (1.0, 0.0), 1, CFG)


def test_invalid_inputs(radial):
    with raises(ValueError):
        intersection_number(radial, (1.0, 0.0), (0.5, 0.0), (0.0, 1.0), 1, CFG)
    with raises(ValueError):
        intersection_number(radial, (0.0, 0.0), (0.5, 0.0), (0.5, 0.0), 1, CFG)
    with raises(ValueError):
        intersection_number(radial, (0.1, 0.0), (0.1, 0.0), (0.0, 1.0), 1, CFG)


def test_batch_scan_matches_single_pairs(perturbed):
    ys = np.array([[0.3, -0.6], [0.2, 0.2], [-0.4, -0.4]])
    anchors = np.array([[0.0, 1.0], [-1.0, 0.0], [0.6, 0.8]])
    outcomes = scan_intersections(perturbed, (0.1, 0.3), ys, anchors, 3, CFG)
    for i in range(3):
        single = intersection_number(perturbed, (0.1, 0.3), ys[i], anchors[i], 3, CFG)
        assert outcomes[(i,)].value == single.value


def test_anchor_change_moves_the_count_by_at_most_one(radial):
    assert anchor_sensitivity(radial, (0.0, 0.0), (0.5, 0.1), (0.0, 1.0), (-1.0, 0.0), 2, CFG) <= 1


def test_intersection_integral_of_trivial_map(trivial):
    quad = QuadratureSpec("polar-grid", 4, 6)
    result = intersection_integral(trivial, (0.05, 0.03), (1.0, 0.0), 2, quad, CFG)
    assert result.value == 0.0
    assert result.retries == 0
    assert result.excluded == 0


def test_action_identity_for_trivial_map(trivial):
    report = action_identity(trivial, PrimitiveOneForm("vertical"), (0.2, 0.1), (0.0, 1.0), 1,
                             QuadratureSpec("polar-grid", 4, 6), CFG)
    assert report.action == 0.0
    assert report.residual == approx(0.0, abs=1e-15)


def test_action_identity_at_the_center(radial):
    # int I^e(0, .) = int omega / 2 pi = 1 = h(0); радиальная форма равна нулю на обоих отрезках
    report = action_identity(radial, PrimitiveOneForm("radial"), (0.0, 0.0), (1.0, 0.0), 1,
                             QuadratureSpec("polar-grid", 32, 32), FlowConfig(128))
    assert report.action == approx(1.0, abs=1e-7)
    assert report.start_segment == approx(0.0, abs=1e-15)
    assert abs(report.residual) < 0.15


@mark.parametrize("base", ("radial", "vertical"))
def test_action_identity_off_the_center(perturbed, base):
    # коориентация S^e(x) задаёт знак каждого пересечения
    report = action_identity(perturbed, PrimitiveOneForm(base), (0.3, 0.2), (0.0, 1.0), 1,
                             QuadratureSpec("monte-carlo", n_samples=8192, seed=11), CFG)
    assert report.error > 0.0
    assert abs(report.residual) < 3.0 * report.error + 1e-5


def test_identity_residual_does_not_depend_on_the_primitive(perturbed):
    quad = QuadratureSpec("monte-carlo", n_samples=1024, seed=4)
    radial_form = action_identity(perturbed, PrimitiveOneForm("radial"), (0.3, 0.2), (0.0, 1.0), 1, quad, CFG)
    vertical_form = action_identity(perturbed, PrimitiveOneForm("vertical"), (0.3, 0.2), (0.0, 1.0), 1, quad, CFG)
    assert radial_form.integral == vertical_form.integral
    assert radial_form.residual == approx(vertical_form.residual, abs=1e-6)


@mark.parametrize("n", (1, 8))
def test_winding_and_intersection_differ_by_at_most_three_halves(perturbed, n):
    xs = random_disk_points(21, 100, 0.95)
    ys = random_disk_points(22, 100, 0.95)
    anchors = random_boundary_points(21, 100)
    windings = period_windings(perturbed, xs, ys, n, CFG).total
    outcomes = scan_intersections(perturbed, xs, ys, anchors, n, CFG)
    gaps = [abs(windings[i] - outcome.value) for (i,), outcome in outcomes.items()
            if not isinstance(outcome, TransversalityError)]
    assert len(gaps) >= 90
    assert max(gaps) <= 1.5
