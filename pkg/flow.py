"""Интегрирование неавтономного гамильтонова потока и диагностика сохранения площади."""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline

from errors import ConfigError, EscapedDiskError
from geometry import Point2, as_points
from hamiltonian import DELTA_SUPPORT

logger = logging.getLogger(__name__)

ESCAPE_TOLERANCE = 1e-9
# Односторонние вычисления сдвинуты внутрь шага на эту долю шага
TIME_SHIFT = 1e-9
BREAK_ALIGNMENT = 1e-6
JACOBIAN_STEP = 1e-6


@dataclass(frozen=True)
class FlowConfig:
    steps_per_unit_time: int = 512
    integrator: str = "rk4"
    interpolation: str = "cubic-hermite"

    def __post_init__(self):
        if self.steps_per_unit_time < 16:
            raise ConfigError(f"steps_per_unit_time должен быть >= 16: {self.steps_per_unit_time}")
        if self.integrator != "rk4":
            raise ConfigError(f"Неподдерживаемый интегратор: {self.integrator}")
        if self.interpolation != "cubic-hermite":
            raise ConfigError(f"Неподдерживаемая интерполяция: {self.interpolation}")

    def refined(self, factor):
        return FlowConfig(self.steps_per_unit_time * factor, self.integrator, self.interpolation)

    def to_config(self):
        return {"steps_per_unit_time": self.steps_per_unit_time, "integrator": self.integrator,
                "interpolation": self.interpolation}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Траектория потока на равномерной сетке по времени.

    `velocities[k]` - правый предел X в узле k (в последнем узле левый);
    `incoming` хранит левые пределы во внутренних узлах, где гамильтониан разрывен по времени.
    """
    t0: float
    t1: float
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    incoming: Tuple = ()
    time_shift: float = 0.0

    @property
    def start(self):
        return self.points[0]

    @property
    def endpoint(self):
        return self.points[-1]

    @property
    def break_indices(self):
        return tuple(index for index, _ in self.incoming)

    def pieces(self):
        bounds = (0,) + self.break_indices + (len(self.times) - 1,)
        return list(zip(bounds[:-1], bounds[1:]))

    def _piece_velocities(self, i0, i1):
        velocities = self.velocities[i0:i1 + 1].copy()
        left = dict(self.incoming)
        if i1 in left:
            velocities[-1] = left[i1]
        return velocities

    @cached_property
    def _splines(self):
        return [(self.times[i1], CubicHermiteSpline(self.times[i0:i1 + 1], self.points[i0:i1 + 1],
                                                     self._piece_velocities(i0, i1), axis=0))
                for i0, i1 in self.pieces()]

    def at(self, t):
        """Плотный вывод (кубический Эрмит на каждом шаге) в момент t."""
        t = min(max(float(t), self.t0), self.t1)
        for t_end, spline in self._splines:
            if t <= t_end:
                return spline(t)
        return self.points[-1]

    def time_integral(self, integrand):
        """Интеграл integrand(points, velocities, times) по [t0, t1], Симпсон на каждом гладком куске."""
        total = 0.0
        batch_dims = (1,) * (self.points.ndim - 2)
        for i0, i1 in self.pieces():
            sample_times = self.times[i0:i1 + 1].copy()
            sample_times[0] += self.time_shift
            sample_times[-1] -= self.time_shift
            values = integrand(self.points[i0:i1 + 1], self._piece_velocities(i0, i1),
                               sample_times.reshape((-1,) + batch_dims))
            total = total + simpson(values, x=self.times[i0:i1 + 1], axis=0)
        return total


def _break_indices(spec, t0, count, step):
    t1 = t0 + count * step
    marks = (0.0,) + spec.breakpoints()
    indices = set()
    for period in range(math.floor(t0), math.ceil(t1) + 1):
        for mark in marks:
            t_break = period + mark
            if not t0 < t_break < t1:
                continue
            position = (t_break - t0) / step
            if abs(position - round(position)) > BREAK_ALIGNMENT:
                raise ConfigError(
                    f"Точка склейки t={t_break} не попадает в узел сетки; измените steps_per_unit_time")
            indices.add(int(round(position)))
    return sorted(indices)


def advance(spec, z, t0, t1, cfg):
    """Классический RK4 с шагом 1/steps_per_unit_time для точки или пакета точек."""
    if t1 <= t0:
        raise ValueError(f"Ожидалось t1 > t0, получено t0={t0}, t1={t1}")
    z = as_points(z)
    count = max(1, int(round((t1 - t0) * cfg.steps_per_unit_time)))
    step = (t1 - t0) / count
    shift = TIME_SHIFT * step
    times = t0 + step * np.arange(count + 1)
    times[-1] = t1
    breaks = set(_break_indices(spec, t0, count, step))

    moving = (np.hypot(z[..., 0], z[..., 1]) < 1.0 - DELTA_SUPPORT)[..., None].astype(float)

    def field(points, t):
        return spec.eval_X(points, t) * moving

    points = np.empty((count + 1,) + z.shape)
    velocities = np.empty_like(points)
    incoming = []
    current = z.copy()
    points[0] = current
    k1 = field(current, times[0] + shift)
    for k in range(count):
        t_k = times[k]
        velocities[k] = k1
        k2 = field(current + 0.5 * step * k1, t_k + 0.5 * step)
        k3 = field(current + 0.5 * step * k2, t_k + 0.5 * step)
        k4 = field(current + step * k3, t_k + step - shift)
        current = current + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.any(np.hypot(current[..., 0], current[..., 1]) > 1.0 + ESCAPE_TOLERANCE):
            logger.error(f"Узел траектории вышел из диска на шаге {k + 1}, t={times[k + 1]}")
            raise EscapedDiskError(f"Траектория покинула диск при t={times[k + 1]}")
        points[k + 1] = current
        if k + 1 == count:
            velocities[count] = field(current, times[count] - shift)
        else:
            if k + 1 in breaks:
                incoming.append((k + 1, field(current, times[k + 1] - shift)))
            k1 = field(current, times[k + 1] + shift)
    return Trajectory(t0, t1, times, points, velocities, tuple(incoming), shift)


def orbit(spec, z, n, cfg):
    """Итерации phi^0(z) ... phi^n(z) массивом формы (n + 1, ..., 2)."""
    if n < 1:
        raise ValueError(f"Число итераций должно быть >= 1: {n}")
    z = as_points(z)
    result = np.empty((n + 1,) + z.shape)
    result[0] = z
    current = z
    for j in range(n):
        current = advance(spec, current, 0.0, 1.0, cfg).endpoint
        result[j + 1] = current
    return result


def iterate_map(spec, z, n, cfg):
    return [Point2(float(p[0]), float(p[1])) for p in orbit(spec, z, n, cfg)]


def jacobian_determinant(spec, z, cfg, h_fd=JACOBIAN_STEP):
    """Определитель якобиана отображения за единицу времени по центральным разностям."""
    if not 1e-7 <= h_fd <= 1e-4:
        raise ValueError(f"Шаг конечных разностей вне [1e-7, 1e-4]: {h_fd}")
    z = as_points(z)
    offsets = np.array([[h_fd, 0.0], [-h_fd, 0.0], [0.0, h_fd], [0.0, -h_fd]])
    images = advance(spec, z[..., None, :] + offsets, 0.0, 1.0, cfg).endpoint
    d_dx = (images[..., 0, :] - images[..., 1, :]) / (2 * h_fd)
    d_dy = (images[..., 2, :] - images[..., 3, :]) / (2 * h_fd)
    det = d_dx[..., 0] * d_dy[..., 1] - d_dy[..., 0] * d_dx[..., 1]
    return float(det) if np.ndim(det) == 0 else det


def integration_order(spec, z, cfg):
    """Наблюдаемый порядок по делению шага пополам; эталон в четыре раза мельче половинного шага."""
    z = as_points(z)
    coarse = advance(spec, z, 0.0, 1.0, cfg).endpoint
    fine = advance(spec, z, 0.0, 1.0, cfg.refined(2)).endpoint
    reference = advance(spec, z, 0.0, 1.0, cfg.refined(8)).endpoint
    error_coarse = float(np.max(np.abs(coarse - reference)))
    error_fine = float(np.max(np.abs(fine - reference)))
    if error_fine < 1e-15 or error_coarse < 1e-15:
        logger.info("Ошибка интегрирования на уровне машинной точности, порядок не определяется")
        return math.inf
    return math.log2(error_coarse / error_fine)
