"""Примитивы формы площади dx^dy и их интегралы вдоль кривых."""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from errors import ConfigError, MissingVelocitiesError
from geometry import as_points, disk_quadrature, QuadratureSpec

logger = logging.getLogger(__name__)

BASE_VARIANTS = ("radial", "vertical", "horizontal")
MAX_GAUGE_DEGREE = 4

# Каждый базовый вариант равен x dy + d(потенциал); потенциал задан одночленами (i, j, c) = c x^i y^j
_BASE_POTENTIALS = {
    "radial": ((1, 1, -0.5),),
    "vertical": (),
    "horizontal": ((1, 1, -1.0),),
}


@dataclass(frozen=True)
class GaugeFunction:
    """Многочлен u(x, y) = sum c x^i y^j полной степени <= 4."""
    terms: Tuple[Tuple[int, int, float], ...] = ()

    def __post_init__(self):
        for i, j, _ in self.terms:
            if i < 0 or j < 0 or i + j > MAX_GAUGE_DEGREE:
                raise ConfigError(f"Недопустимый моном калибровки x^{i} y^{j}")

    @classmethod
    def from_config(cls, table):
        try:
            return cls(tuple((int(i), int(j), float(c)) for i, j, c in table))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Некорректная таблица коэффициентов калибровки: {e}") from e

    def to_config(self):
        return [[i, j, c] for i, j, c in self.terms]

    def __add__(self, other):
        return GaugeFunction(self.terms + other.terms)

    def __neg__(self):
        return GaugeFunction(tuple((i, j, -c) for i, j, c in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def value(self, z):
        z = as_points(z)
        x, y = z[..., 0], z[..., 1]
        total = np.zeros_like(x)
        for i, j, c in self.terms:
            total = total + c * x ** i * y ** j
        return total

    def gradient(self, z):
        z = as_points(z)
        x, y = z[..., 0], z[..., 1]
        gx = np.zeros_like(x)
        gy = np.zeros_like(y)
        for i, j, c in self.terms:
            if i:
                gx = gx + c * i * x ** (i - 1) * y ** j
            if j:
                gy = gy + c * j * x ** i * y ** (j - 1)
        return np.stack([gx, gy], axis=-1)

    def sup_norm(self, resolution=64):
        """max |u| по замкнутому диску на полярной сетке и граничной окружности."""
        if not self.terms:
            return 0.0
        grid = disk_quadrature(QuadratureSpec("polar-grid", resolution, resolution)).points
        theta = np.linspace(0.0, 2.0 * np.pi, 4 * resolution, endpoint=False)
        ring = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return float(max(np.max(np.abs(self.value(grid))), np.max(np.abs(self.value(ring)))))


@dataclass(frozen=True)
class PrimitiveOneForm:
    base: str = "radial"
    gauge: Optional[GaugeFunction] = None

    def __post_init__(self):
        if self.base not in BASE_VARIANTS:
            raise ConfigError(f"Неизвестный базовый примитив: {self.base}")

    @classmethod
    def from_config(cls, data):
        gauge = data.get("gauge")
        return cls(data.get("base", "radial"), GaugeFunction.from_config(gauge) if gauge else None)

    def to_config(self):
        data = {"base": self.base}
        if self.gauge is not None:
            data["gauge"] = self.gauge.to_config()
        return data

    def coefficients(self, z):
        """(P, Q), где lambda = P dx + Q dy."""
        z = as_points(z)
        x, y = z[..., 0], z[..., 1]
        if self.base == "radial":
            p, q = -0.5 * y, 0.5 * x
        elif self.base == "vertical":
            p, q = np.zeros_like(x), x
        else:
            p, q = -y, np.zeros_like(y)
        if self.gauge is not None:
            g = self.gauge.gradient(z)
            p, q = p + g[..., 0], q + g[..., 1]
        return p, q

    def potential(self):
        """u, для которого lambda = x dy + du."""
        base = GaugeFunction(_BASE_POTENTIALS[self.base])
        return base + self.gauge if self.gauge is not None else base


def gauge_between(form_a, form_b):
    """Многочлен u, для которого form_a - form_b = du."""
    return form_a.potential() - form_b.potential()


def eval_form(form, z, v):
    p, q = form.coefficients(z)
    v = as_points(v)
    return p * v[..., 0] + q * v[..., 1]


def exterior_derivative(form, z, h=1e-5):
    """Коэффициент d(lambda) при dx^dy по конечным разностям."""
    z = as_points(z)
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    _, q_plus = form.coefficients(z + ex)
    _, q_minus = form.coefficients(z - ex)
    p_plus, _ = form.coefficients(z + ey)
    p_minus, _ = form.coefficients(z - ey)
    return (q_plus - q_minus) / (2 * h) - (p_plus - p_minus) / (2 * h)


def segment_integral(form, a, b, order=8):
    """Интеграл lambda по ориентированному отрезку [a, b] методом Гаусса-Лежандра."""
    if order < 2:
        raise ValueError("Порядок квадратуры Гаусса должен быть >= 2")
    a, b = np.broadcast_arrays(as_points(a), as_points(b))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (nodes + 1.0)
    chord = b - a
    points = a[None, ...] + s.reshape((-1,) + (1,) * a.ndim) * chord[None, ...]
    values = eval_form(form, points, np.broadcast_to(chord, points.shape))
    result = 0.5 * np.tensordot(weights, values, axes=(0, 0))
    return float(result) if np.ndim(result) == 0 else result


def path_integral(form, traj):
    """Интеграл lambda вдоль траектории, составной Симпсон по кускам во времени."""
    if traj.velocities is None:
        raise MissingVelocitiesError("У траектории нет скоростей в узлах")
    return traj.time_integral(lambda points, velocities, times: eval_form(form, points, velocities))
