"""Числа вращения пар точек вдоль изотопии."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import CrossCheckFailedError, SeparationUnderflowError, SubstepLimitError
from flow import advance
from geometry import angle_increment, as_points, dot

logger = logging.getLogger(__name__)

MIN_SEPARATION = 1e-12
MAX_SUBSTEP_DEPTH = 20
MAX_STEP_ANGLE = math.pi / 2
ITERATE_TOLERANCE = 1e-7


@dataclass(frozen=True)
class WindingResult:
    value: float
    min_separation: float
    substeps_used: int


@dataclass(frozen=True)
class PeriodWindings:
    """Вращения пакета пар за последовательные периоды: values формы (n, ...)."""
    values: np.ndarray
    min_separation: np.ndarray
    substeps_used: np.ndarray

    @property
    def total(self):
        return self.values.sum(axis=0)


def _refine(direction_at, t_a, t_b, dir_a, dir_b, depth):
    increment = angle_increment(dir_a, dir_b)
    if abs(increment) <= MAX_STEP_ANGLE:
        return [(t_a, t_b, increment)]
    if depth > MAX_SUBSTEP_DEPTH:
        logger.error(f"Превышена глубина подразбиения шага на [{t_a}, {t_b}]")
        raise SubstepLimitError(f"Шаг [{t_a}, {t_b}] не разрешён за {MAX_SUBSTEP_DEPTH} уровней подразбиения")
    t_mid = 0.5 * (t_a + t_b)
    dir_mid = direction_at(t_mid)
    return (_refine(direction_at, t_a, t_mid, dir_a, dir_mid, depth + 1)
            + _refine(direction_at, t_mid, t_b, dir_mid, dir_b, depth + 1))


def lifted_steps(traj, direction):
    """Приращения непрерывного угла direction(state) на каждом шаге траектории.

    Возвращает (increments формы (N - 1, ...), refinements), где refinements сопоставляет
    (step, *batch_index) список подшагов (t_a, t_b, increment), заменивших шаг
    с приращением больше pi/2.
    """
    directions = direction(traj.points)
    increments = np.asarray(angle_increment(directions[:-1], directions[1:]), dtype=float)
    refinements = {}
    for key in map(tuple, np.argwhere(np.abs(increments) > MAX_STEP_ANGLE)):
        k, index = key[0], key[1:]

        def direction_at(t, index=index):
            return direction(traj.at(t))[index]

        pieces = _refine(direction_at, traj.times[k], traj.times[k + 1],
                         directions[k][index], directions[k + 1][index], 1)
        increments[key] = sum(piece[2] for piece in pieces)
        refinements[key] = pieces
    return increments, refinements


def substep_counts(refinements, batch_shape):
    counts = np.zeros(batch_shape, dtype=int)
    for key, pieces in refinements.items():
        counts[key[1:]] += len(pieces) - 1
    return counts


def pair_difference(states):
    """phi^t(y) - phi^t(x) для состояний формы (..., 2 [x, y], 2)."""
    return states[..., 1, :] - states[..., 0, :]


def stack_pairs(xs, ys):
    xs, ys = np.broadcast_arrays(as_points(xs), as_points(ys))
    return np.stack([xs, ys], axis=-2)


def _separation(traj):
    d = pair_difference(traj.points)
    return np.min(np.hypot(d[..., 0], d[..., 1]), axis=0)


def _check_separation(separation):
    smallest = float(np.min(separation))
    if smallest < MIN_SEPARATION:
        logger.error(f"Траектории пары сблизились до {smallest:.3g}")
        raise SeparationUnderflowError(f"Расстояние между траекториями {smallest:.3g} < {MIN_SEPARATION}")


def _winding_of_trajectory(traj):
    separation = _separation(traj)
    _check_separation(separation)
    increments, refinements = lifted_steps(traj, pair_difference)
    batch_shape = increments.shape[1:]
    return increments.sum(axis=0) / (2 * np.pi), separation, substep_counts(refinements, batch_shape)


def period_windings(spec, xs, ys, n, cfg):
    """W(phi^j x, phi^j y) при j < n для пакетов пар, по одному периоду за раз."""
    if n < 1:
        raise ValueError(f"n должно быть >= 1: {n}")
    states = stack_pairs(xs, ys)
    batch_shape = states.shape[:-2]
    values = np.empty((n,) + batch_shape)
    min_separation = np.full(batch_shape, np.inf)
    substeps = np.zeros(batch_shape, dtype=int)
    for j in range(n):
        traj = advance(spec, states, 0.0, 1.0, cfg)
        values[j], separation, counts = _winding_of_trajectory(traj)
        min_separation = np.minimum(min_separation, separation)
        substeps = substeps + counts
        states = traj.endpoint
    return PeriodWindings(values, min_separation, substeps)


def winding_batch(spec, xs, ys, cfg):
    return period_windings(spec, xs, ys, 1, cfg)


def _single(result_values, separation, substeps):
    return WindingResult(float(result_values), float(separation), int(substeps))


def winding(spec, x, y, cfg):
    """W(x, y): полное число оборотов phi^t(y) - phi^t(x) при t из [0, 1]."""
    batch = period_windings(spec, x, y, 1, cfg)
    return _single(batch.values[0], batch.min_separation, batch.substeps_used)


def winding_over(spec, x, y, t0, t1, cfg):
    """Вращение на произвольном отрезке времени периодической изотопии."""
    value, separation, counts = _winding_of_trajectory(advance(spec, stack_pairs(x, y), t0, t1, cfg))
    return _single(value, separation, counts)


def winding_iterate(spec, x, y, n, cfg):
    """W для phi^n вдоль изотопии из n периодов с проверкой по сумме вращений за периоды."""
    direct = winding_over(spec, x, y, 0.0, float(n), cfg)
    birkhoff = float(period_windings(spec, x, y, n, cfg).total)
    gap = abs(direct.value - birkhoff)
    if gap > n * ITERATE_TOLERANCE:
        logger.error(f"Итерированное вращение {direct.value} и сумма по периодам {birkhoff} расходятся")
        raise CrossCheckFailedError(f"Вращение phi^n расходится с суммой Биркгофа на {gap:.3g}")
    return direct


def boundary_projection(x, y):
    """Точка выхода луча из x через y за пределы замкнутого единичного диска."""
    x = as_points(x)
    u = as_points(y) - x
    u = u / np.hypot(u[..., 0], u[..., 1])[..., None]
    b = dot(x, u)
    s = -b + np.sqrt(np.maximum(b * b - dot(x, x) + 1.0, 0.0))
    return x + s[..., None] * u


def _projected(states):
    return boundary_projection(states[..., 0, :], states[..., 1, :])


def boundary_winding(spec, x, y, cfg):
    """Обороты граничной точки, в которую попадает луч из phi^t(x) через phi^t(y)."""
    if np.hypot(*as_points(x)) >= 1.0:
        raise ValueError("Для граничной проекции точка x должна лежать внутри диска")
    traj = advance(spec, stack_pairs(x, y), 0.0, 1.0, cfg)
    _check_separation(_separation(traj))
    increments, _ = lifted_steps(traj, _projected)
    return float(increments.sum(axis=0) / (2 * np.pi))
