"""Планарная геометрия, развёртка углов и квадратуры по единичному диску."""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from errors import ConfigError, ZeroVectorError

logger = logging.getLogger(__name__)

EPS_GEOM = 1e-12
ZERO_NORM = 1e-14
SAMPLE_BLOCK = 4096
MAX_RESAMPLE_ATTEMPTS = 64

# Номера потоков ГСЧ (последнее слово счётчика Philox)
DISK_STREAM = 1
PAIR_STREAM = 2
PAIR_RESAMPLE_STREAM = 3
POINT_STREAM = 4
ANCHOR_STREAM = 5

QUADRATURE_KINDS = ("polar-grid", "monte-carlo")


class Point2(NamedTuple):
    x: float
    y: float

    def norm(self):
        return math.hypot(self.x, self.y)

    def in_disk(self):
        return self.x * self.x + self.y * self.y <= 1.0 + EPS_GEOM


class WeightedSample(NamedTuple):
    point: Point2
    weight: float


@dataclass(frozen=True)
class QuadratureSpec:
    kind: str = "polar-grid"
    n_r: int = 64
    n_theta: int = 64
    n_samples: int = 4096
    seed: int = 0

    def __post_init__(self):
        if self.kind not in QUADRATURE_KINDS:
            raise ConfigError(f"Неизвестный тип квадратуры: {self.kind}")
        if self.n_r < 1 or self.n_theta < 1:
            raise ConfigError("Размеры полярной сетки должны быть >= 1")
        if self.n_samples < 1:
            raise ConfigError("Число выборок Монте-Карло должно быть >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed вне диапазона uint64: {self.seed}")

    def with_seed(self, seed):
        return QuadratureSpec(self.kind, self.n_r, self.n_theta, self.n_samples, seed)

    def to_config(self):
        return {"kind": self.kind, "n_r": self.n_r, "n_theta": self.n_theta,
                "n_samples": self.n_samples, "seed": self.seed}


@dataclass(frozen=True)
class QuadratureEstimate:
    value: float
    error: float

    def __str__(self):
        return f"{self.value:.6g} ± {self.error:.2g}"


def as_points(z):
    """Приводит точку или пакет точек к массиву float формы (..., 2)."""
    arr = np.asarray(z, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ValueError(f"Ожидался массив точек формы (..., 2), получено {arr.shape}")
    return arr


def cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]


def rotate90(v):
    """Поворот на pi/2 против часовой стрелки: (vx, vy) -> (-vy, vx)."""
    v = as_points(v)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def rotate(v, angle):
    v = as_points(v)
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1]], axis=-1)


def angle_increment(dir_prev, dir_next):
    """Угол со знаком в (-pi, pi] от dir_prev к dir_next.

    Нормировка не нужна: угол равен atan2(cross, dot).
    """
    a = as_points(dir_prev)
    b = as_points(dir_next)
    if np.any(np.hypot(a[..., 0], a[..., 1]) < ZERO_NORM) or np.any(np.hypot(b[..., 0], b[..., 1]) < ZERO_NORM):
        raise ZeroVectorError("Нулевой вектор направления при вычислении приращения угла")
    delta = np.arctan2(cross(a, b), dot(a, b))
    delta = np.where(delta <= -np.pi, np.pi, delta)
    return float(delta) if delta.ndim == 0 else delta


def keyed_generator(seed, stream=0, index=0, attempt=0):
    """Генератор на счётчике: поток однозначно задан (seed, stream, index, attempt)."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, attempt, index, stream]))


def keyed_uniforms(seed, stream, count, width):
    """Строки равномерных чисел; поток задаётся номером блока из SAMPLE_BLOCK выборок.

    Первые m строк не зависят от count, поэтому увеличение выборки дописывает новые точки.
    """
    blocks = []
    for block, start in enumerate(range(0, count, SAMPLE_BLOCK)):
        size = min(SAMPLE_BLOCK, count - start)
        blocks.append(keyed_generator(seed, stream, block).random((size, width)))
    if not blocks:
        return np.empty((0, width))
    return np.concatenate(blocks)


def uniform_disk_points(u, v, max_radius=1.0):
    r = max_radius * np.sqrt(u)
    theta = 2.0 * np.pi * v
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def random_disk_points(seed, count, max_radius=1.0, stream=POINT_STREAM):
    draws = keyed_uniforms(seed, stream, count, 2)
    return uniform_disk_points(draws[:, 0], draws[:, 1], max_radius)


def random_boundary_points(seed, count, stream=ANCHOR_STREAM):
    theta = 2.0 * np.pi * keyed_uniforms(seed, stream, count, 1)[:, 0]
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


@dataclass(frozen=True)
class DiskRule:
    """Узлы с весами для интегрирования по диску относительно dx^dy."""
    points: np.ndarray
    weights: np.ndarray
    kind: str
    grid_shape: Optional[Tuple[int, int]] = None

    def __len__(self):
        return len(self.weights)

    def samples(self):
        return [WeightedSample(Point2(float(p[0]), float(p[1])), float(w))
                for p, w in zip(self.points, self.weights)]

    def coarse(self):
        """Сетка средних точек с вдвое меньшим числом ячеек по каждому направлению (None для Монте-Карло)."""
        if self.kind != "polar-grid" or self.grid_shape is None:
            return None
        n_r, n_theta = self.grid_shape
        return polar_grid(max(1, n_r // 2), max(1, n_theta // 2))

    def estimate(self, values, coarse_values=None):
        """Сумма с весами и её ошибка.

        Для полярной сетки ошибка равна разности с той же суммой на грубой сетке `coarse()`,
        значения на которой передаются в `coarse_values`; для Монте-Карло это стандартная ошибка.
        """
        values = np.asarray(values, dtype=float)
        value = float(np.sum(self.weights * values))
        if self.kind == "polar-grid" and self.grid_shape is not None:
            if coarse_values is None:
                raise ValueError("Для оценки ошибки полярной сетки нужны значения на грубой сетке")
            coarse = self.coarse()
            error = abs(value - float(np.sum(coarse.weights * np.asarray(coarse_values, dtype=float))))
        elif len(values) > 1:
            area = float(np.sum(self.weights))
            error = area * float(np.std(values, ddof=1)) / math.sqrt(len(values))
        else:
            error = 0.0
        return QuadratureEstimate(value, error)

    def integrate(self, f):
        """Интеграл f по диску; f вычисляется на массиве точек (..., 2)."""
        coarse = self.coarse()
        return self.estimate(f(self.points), None if coarse is None else f(coarse.points))


@dataclass(frozen=True)
class PairRule:
    first: np.ndarray
    second: np.ndarray
    weights: np.ndarray
    resample_fraction: float

    def __len__(self):
        return len(self.weights)

    def samples(self):
        return [(Point2(*map(float, a)), Point2(*map(float, b)), float(w))
                for a, b, w in zip(self.first, self.second, self.weights)]

    def estimate(self, values):
        values = np.asarray(values, dtype=float)
        value = float(np.sum(self.weights * values))
        if len(values) > 1:
            error = float(np.sum(self.weights)) * float(np.std(values, ddof=1)) / math.sqrt(len(values))
        else:
            error = 0.0
        return QuadratureEstimate(value, error)


def polar_grid(n_r, n_theta):
    """Правило средних точек по s = r^2 и theta: все ячейки равной площади pi / (n_r n_theta)."""
    s = (np.arange(n_r) + 0.5) / n_r
    theta = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    r = np.sqrt(s)[:, None]
    points = np.stack([r * np.cos(theta)[None, :], r * np.sin(theta)[None, :]], axis=-1).reshape(-1, 2)
    weights = np.full(len(points), np.pi / (n_r * n_theta))
    return DiskRule(points, weights, "polar-grid", (n_r, n_theta))


def disk_quadrature(spec):
    if spec.kind == "polar-grid":
        return polar_grid(spec.n_r, spec.n_theta)
    draws = keyed_uniforms(spec.seed, DISK_STREAM, spec.n_samples, 2)
    points = uniform_disk_points(draws[:, 0], draws[:, 1])
    weights = np.full(spec.n_samples, np.pi / spec.n_samples)
    return DiskRule(points, weights, spec.kind)


def pair_quadrature(spec, min_separation=1e-6):
    if not 0.0 <= min_separation < 1e-3:
        raise ConfigError(f"min_separation должен лежать в [0, 1e-3): {min_separation}")
    count = spec.n_samples
    draws = keyed_uniforms(spec.seed, PAIR_STREAM, count, 4)
    first = uniform_disk_points(draws[:, 0], draws[:, 1])
    second = uniform_disk_points(draws[:, 2], draws[:, 3])
    resampled = 0
    for index in np.flatnonzero(np.hypot(*(first - second).T) < min_separation):
        for attempt in range(1, MAX_RESAMPLE_ATTEMPTS + 1):
            u = keyed_generator(spec.seed, PAIR_RESAMPLE_STREAM, int(index), attempt).random(4)
            resampled += 1
            a = uniform_disk_points(u[0], u[1])
            b = uniform_disk_points(u[2], u[3])
            if np.hypot(*(a - b)) >= min_separation:
                first[index], second[index] = a, b
                break
    fraction = resampled / (count + resampled)
    if resampled:
        logger.warning(f"Пересэмплировано {resampled} пар у диагонали (доля {fraction:.3g})")
    weights = np.full(count, np.pi ** 2 / count)
    return PairRule(first, second, weights, fraction)
