"""Действие отображения: интеграл примитива вдоль изотопии плюс интеграл гамильтониана."""
import logging
from dataclasses import dataclass

import numpy as np

from errors import CrossCheckFailedError
from flow import advance
from geometry import as_points
from oneform import PrimitiveOneForm, path_integral

logger = logging.getLogger(__name__)

BIRKHOFF_TOLERANCE = 1e-7


@dataclass(frozen=True)
class ActionValue:
    value: float
    path_term: float
    hamiltonian_term: float


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def _hamiltonian_term(spec, traj):
    return traj.time_integral(lambda points, velocities, times: spec.eval_H(points, times))


def _action_from_trajectory(spec, form, traj):
    path_term = path_integral(form, traj)
    hamiltonian_term = _hamiltonian_term(spec, traj)
    return ActionValue(_scalar(path_term + hamiltonian_term), _scalar(path_term), _scalar(hamiltonian_term))


def action_over(spec, form, z, t0, t1, cfg):
    """Действие отображения z -> phi^{t1}(phi^{t0})^{-1}(z) вдоль изотопии на [t0, t1]."""
    return _action_from_trajectory(spec, form, advance(spec, z, t0, t1, cfg))


def action(spec, form, z, cfg):
    return action_over(spec, form, z, 0.0, 1.0, cfg)


def period_actions(spec, forms, z, n, cfg):
    """Действия за период a(phi^j(z)), j < n, для каждой формы; форма (len(forms), n, ...).

    Орбита продвигается по одному периоду, память не растёт с n.
    """
    z = as_points(z)
    result = np.empty((len(forms), n) + z.shape[:-1])
    current = z
    for j in range(n):
        traj = advance(spec, current, 0.0, 1.0, cfg)
        hamiltonian_term = _hamiltonian_term(spec, traj)
        for i, form in enumerate(forms):
            result[i, j] = path_integral(form, traj) + hamiltonian_term
        current = traj.endpoint
    return result


def action_birkhoff_sum(spec, form, z, n, cfg):
    """(1/n) сумма a(phi^j(z)) с перекрёстной проверкой по a(phi^n)(z)/n вдоль изотопии из n периодов."""
    if n < 1:
        raise ValueError(f"n должно быть >= 1: {n}")
    average = float(np.mean(period_actions(spec, [form], z, n, cfg)[0]))
    direct = action_over(spec, form, z, 0.0, float(n), cfg).value / n
    gap = abs(average - direct)
    if gap > n * BIRKHOFF_TOLERANCE:
        logger.error(f"Суммы Биркгофа действия расходятся: {average} против {direct} (n={n})")
        raise CrossCheckFailedError(f"Сумма Биркгофа {average} и прямое действие {direct} расходятся на {gap:.3g}")
    return average


def with_gauge(form, gauge):
    """Примитив form + du."""
    combined = form.gauge + gauge if form.gauge is not None else gauge
    return PrimitiveOneForm(form.base, combined)


def gauge_residual(spec, form, gauge, z, cfg):
    """|a(lambda + du) - a(lambda) - u o phi + u| в точках z."""
    traj = advance(spec, z, 0.0, 1.0, cfg)
    shifted = _action_from_trajectory(spec, with_gauge(form, gauge), traj).value
    base = _action_from_trajectory(spec, form, traj).value
    return _scalar(np.abs(shifted - base - gauge.value(traj.endpoint) + gauge.value(traj.start)))


def composition_residual(first, second, form, z, cfg):
    """|a(second o first)(z) - a(second)(first(z)) - a(first)(z)|, композиция через склейку."""
    inner = advance(first, z, 0.0, 1.0, cfg)
    composite = action(first.then(second), form, z, cfg).value
    outer = action(second, form, inner.endpoint, cfg).value
    return _scalar(np.abs(composite - outer - _action_from_trajectory(first, form, inner).value))


def inverse_residual(spec, form, z, cfg):
    """|a(phi^-1)(z) + a(phi)(phi^-1(z))|, phi^-1 порождается гамильтонианом с обращённым временем."""
    backward = advance(spec.inverse(), z, 0.0, 1.0, cfg)
    inverse_value = _action_from_trajectory(spec.inverse(), form, backward).value
    return _scalar(np.abs(inverse_value + action(spec, form, backward.endpoint, cfg).value))


def differential_residual(spec, form, z, cfg, h=1e-5):
    """Максимум |da - (phi^* lambda - lambda)| в z, обе части центральными разностями."""
    z = as_points(z)
    offsets = np.array([[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
    stencil = z[..., None, :] + offsets
    traj = advance(spec, stencil, 0.0, 1.0, cfg)
    values = _action_from_trajectory(spec, form, traj).value
    images = traj.endpoint
    grad_a = np.stack([values[..., 0] - values[..., 1], values[..., 2] - values[..., 3]], axis=-1) / (2 * h)

    d_dx = (images[..., 0, :] - images[..., 1, :]) / (2 * h)
    d_dy = (images[..., 2, :] - images[..., 3, :]) / (2 * h)
    center = advance(spec, z, 0.0, 1.0, cfg).endpoint
    p, q = form.coefficients(center)
    pullback = np.stack([p * d_dx[..., 0] + q * d_dx[..., 1], p * d_dy[..., 0] + q * d_dy[..., 1]], axis=-1)
    p0, q0 = form.coefficients(z)
    residual = np.max(np.abs(grad_a - (pullback - np.stack([p0, q0], axis=-1))), axis=-1)
    return _scalar(residual)
