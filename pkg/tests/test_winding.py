import math

import numpy as np
from pytest import approx, raises

from errors import CrossCheckFailedError, SeparationUnderflowError
from flow import FlowConfig, Trajectory
from winding import (boundary_projection, boundary_winding, lifted_steps, period_windings, winding,
                     winding_batch, winding_iterate, winding_over)

# угловая скорость radial_spec(1) на окружности радиуса 1/2
OMEGA_HALF = 3.0


def test_trivial_winding_is_zero(trivial, fast_flow):
    result = winding(trivial, (0.1, 0.2), (-0.3, 0.4), fast_flow)
    assert result.value == 0.0
    assert result.substeps_used == 0
    assert result.min_separation == approx(math.hypot(0.4, 0.2))


def test_winding_about_the_center(radial, fast_flow):
    result = winding(radial, (0.0, 0.0), (0.5, 0.0), fast_flow)
    assert result.value == approx(OMEGA_HALF / (2 * math.pi), abs=1e-7)


def test_winding_on_one_circle(radial, fast_flow):
    # обе точки поворачиваются как целое на omega(0.4) = 3.36
    result = winding(radial, (0.4, 0.0), (0.0, 0.4), fast_flow)
    assert result.value == approx(3.36 / (2 * math.pi), abs=1e-7)


def test_winding_is_symmetric(perturbed, fast_flow):
    xs = np.array([[0.1, 0.2], [-0.5, 0.3], [0.7, -0.1]])
    ys = np.array([[0.3, -0.6], [0.2, 0.2], [-0.4, -0.4]])
    forward = winding_batch(perturbed, xs, ys, fast_flow).values[0]
    backward = winding_batch(perturbed, ys, xs, fast_flow).values[0]
    assert forward == approx(backward, abs=1e-12)


def test_coincident_points_underflow(radial, fast_flow):
    with raises(SeparationUnderflowError):
        winding(radial, (0.2, 0.2), (0.2, 0.2), fast_flow)


def test_period_windings_accumulate(radial, fast_flow):
    batch = period_windings(radial, (0.0, 0.0), np.array([[0.5, 0.0], [0.0, -0.5]]), 4, fast_flow)
    assert batch.values.shape == (4, 2)
    assert batch.total == approx([4 * OMEGA_HALF / (2 * math.pi)] * 2, abs=1e-6)


def test_winding_iterate_matches_period_sum(perturbed, fast_flow):
    direct = winding_iterate(perturbed, (0.1, 0.2), (-0.4, 0.3), 3, fast_flow)
    total = float(period_windings(perturbed, (0.1, 0.2), (-0.4, 0.3), 3, fast_flow).total)
    assert direct.value == approx(total, abs=3e-7)


def test_winding_over_window(radial, fast_flow):
    half = winding_over(radial, (0.0, 0.0), (0.5, 0.0), 0.0, 0.5, fast_flow)
    assert half.value == approx(OMEGA_HALF / (4 * math.pi), abs=1e-7)


def test_large_steps_are_subdivided():
    angle = 2.0
    traj = Trajectory(0.0, 1.0, np.array([0.0, 1.0]),
                      np.array([[1.0, 0.0], [math.cos(angle), math.sin(angle)]]),
                      np.array([[0.0, angle], [-angle * math.sin(angle), angle * math.cos(angle)]]))
    increments, refinements = lifted_steps(traj, lambda points: points)
    assert increments.sum() == approx(angle, abs=1e-12)
    assert (0,) in refinements
    assert len(refinements[(0,)]) >= 2


def test_boundary_projection_hits_the_circle():
    x = np.array([[0.0, 0.0], [0.5, 0.0], [0.2, -0.3]])
    y = np.array([[0.0, 0.5], [0.6, 0.0], [0.1, 0.4]])
    hits = boundary_projection(x, y)
    assert np.hypot(*hits.T) == approx([1.0, 1.0, 1.0], abs=1e-12)
    assert hits[0] == approx([0.0, 1.0])
    assert hits[1] == approx([1.0, 0.0])


def test_boundary_winding(radial, trivial, fast_flow):
    assert boundary_winding(trivial, (0.1, 0.1), (0.3, 0.2), fast_flow) == 0.0
    value = boundary_winding(radial, (0.0, 0.0), (0.5, 0.0), fast_flow)
    assert value == approx(OMEGA_HALF / (2 * math.pi), abs=1e-7)
    with raises(ValueError):
        boundary_winding(radial, (1.0, 0.0), (0.5, 0.0), fast_flow)


def test_cross_check_failure_is_reported(perturbed, monkeypatch):
    import winding as module
    monkeypatch.setattr(module, "ITERATE_TOLERANCE", -1.0)
    with raises(CrossCheckFailedError):
        winding_iterate(perturbed, (0.1, 0.2), (-0.4, 0.3), 2, FlowConfig(64))
