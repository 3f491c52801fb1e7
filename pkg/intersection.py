"""Индекс пересечения кривой Gamma(y) с коориентированной поверхностью S^e(x)."""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from action import action_over
from errors import TransversalityError
from flow import advance
from geometry import angle_increment, as_points, cross, disk_quadrature, dot, rotate
from oneform import segment_integral
from winding import MIN_SEPARATION, lifted_steps, stack_pairs
from workers import chunked, parallel_map

logger = logging.getLogger(__name__)

TRANSVERSALITY_TOL = 1e-6
GRAZING_TOL = 1e-9
ROOT_XTOL = 1e-10
MAX_ANCHOR_RETRIES = 8
ANCHOR_ROTATION = 1e-4
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CrossingEvent:
    time: float
    sign: int
    angle_rate: float
    radial_fraction: float


@dataclass(frozen=True)
class IntersectionResult:
    value: int
    crossings: Tuple[CrossingEvent, ...] = ()
    min_angle_rate: float = math.inf


@dataclass
class _PairScan:
    """Текущее состояние пары (x, y) между периодами."""
    lift: float
    crossings: list = field(default_factory=list)
    failure: Optional[TransversalityError] = None


def relative_angle(xt, yt, e):
    """Угол yt - xt, отсчитанный от e - xt, в (-pi, pi]."""
    xt = as_points(xt)
    return angle_increment(as_points(e) - xt, as_points(yt) - xt)


def _relative_direction(e):
    def direction(states):
        x = states[..., 0, :]
        d = states[..., 1, :] - x
        g = e - x
        return np.stack([dot(g, d), cross(g, d)], axis=-1)
    return direction


def _levels(lift_a, lift_b):
    """Уровни 2 pi m, пересекаемые шагом: вверх lift_a < level <= lift_b, вниз lift_b <= level < lift_a."""
    if lift_b > lift_a:
        return range(math.floor(lift_a / TWO_PI) + 1, math.floor(lift_b / TWO_PI) + 1)
    if lift_b < lift_a:
        return range(math.ceil(lift_b / TWO_PI), math.ceil(lift_a / TWO_PI))
    return range(0)


def _crossing_rate(spec, state, e, t):
    x, y = state[0], state[1]
    vx = spec.eval_X(x, t)
    vy = spec.eval_X(y, t)
    d, g = y - x, e - x
    rate = cross(d, vy - vx) / dot(d, d) - cross(g, -vx) / dot(g, g)
    return float(rate), float(np.hypot(*d) / np.hypot(*g))


def _locate(spec, traj, index, anchor, t_a, t_b, lift_a, dir_a, level, period):
    direction = _relative_direction(anchor)

    def offset(t):
        return lift_a + angle_increment(dir_a, direction(traj.at(t)[index])) - level

    at_start, at_end = offset(t_a), offset(t_b)
    if at_end == 0.0 or at_start * at_end > 0.0:
        root = t_b if abs(at_end) <= abs(at_start) else t_a
    else:
        root = bisect(offset, t_a, t_b, xtol=ROOT_XTOL)
    state = traj.at(root)[index]
    rate, fraction = _crossing_rate(spec, state, anchor, root)
    return CrossingEvent(period + float(root), 1 if rate > 0 else -1, rate, fraction)


def _scan_period(spec, traj, anchors, scans, period, final):
    direction = _relative_direction(anchors)
    directions = direction(traj.points)
    increments, refinements = lifted_steps(traj, direction)
    batch_shape = increments.shape[1:]
    for index in np.ndindex(*batch_shape):
        scan = scans[index]
        if scan.failure is not None:
            continue
        anchor = anchors[index]
        lift = scan.lift
        try:
            for k in range(increments.shape[0]):
                pieces = refinements.get((k,) + index)
                if pieces is None:
                    pieces = [(traj.times[k], traj.times[k + 1], increments[(k,) + index])]
                for t_a, t_b, delta in pieces:
                    levels = _levels(lift, lift + delta)
                    if len(levels):
                        if t_a == traj.times[k]:
                            dir_a = directions[k][index]
                        else:
                            dir_a = _relative_direction(anchor)(traj.at(t_a)[index])
                        for level in levels:
                            event = _locate(spec, traj, index, anchor, t_a, t_b, lift, dir_a, TWO_PI * level, period)
                            if event.radial_fraction >= 1.0:
                                continue
                            if abs(event.angle_rate) < TRANSVERSALITY_TOL:
                                raise TransversalityError(
                                    f"Касание поверхности при t={event.time:.6g}, скорость угла {event.angle_rate:.3g}",
                                    event.time, event.angle_rate)
                            scan.crossings.append(event)
                    lift += delta
            if final:
                _check_grazing(lift, period + 1.0)
        except TransversalityError as error:
            scan.failure = error
        scan.lift = lift


def _check_grazing(lift, t):
    nearest = TWO_PI * round(lift / TWO_PI)
    if abs(lift - nearest) < GRAZING_TOL:
        raise TransversalityError(f"Кривая касается края поверхности при t={t}", t, 0.0)


def scan_intersections(spec, xs, ys, anchors, n, cfg):
    """Индексы пересечения на [0, n] для пакетов (x, y, e) с трансляцией размерностей.

    Возвращает словарь: индекс в пакете -> IntersectionResult или TransversalityError,
    возникшая для этой тройки.
    """
    states = stack_pairs(xs, ys)
    batch_shape = states.shape[:-2]
    anchors = np.broadcast_to(as_points(anchors), batch_shape + (2,))
    start = np.asarray(relative_angle(states[..., 0, :], states[..., 1, :], anchors), dtype=float)
    scans = {}
    for index in np.ndindex(*batch_shape):
        scans[index] = _PairScan(float(start[index]))
        try:
            _check_grazing(scans[index].lift, 0.0)
        except TransversalityError as error:
            scans[index].failure = error
    for period in range(n):
        traj = advance(spec, states, 0.0, 1.0, cfg)
        _scan_period(spec, traj, anchors, scans, period, period == n - 1)
        states = traj.endpoint
    results = {}
    for index, scan in scans.items():
        if scan.failure is not None:
            results[index] = scan.failure
            continue
        rates = [abs(event.angle_rate) for event in scan.crossings]
        results[index] = IntersectionResult(sum(event.sign for event in scan.crossings),
                                             tuple(scan.crossings), min(rates, default=math.inf))
    return results


def _validate(x, e):
    if np.hypot(*as_points(x)) >= 1.0:
        raise ValueError("Точка x должна лежать внутри диска")
    if abs(np.hypot(*as_points(e)) - 1.0) > 1e-9:
        raise ValueError("Якорь e должен лежать на граничной окружности")


def intersection_number(spec, x, y, e, n, cfg):
    """Число прохождений относительного угла через 0 mod 2 pi на [0, n] с учётом знака."""
    _validate(x, e)
    if np.hypot(*(as_points(y) - as_points(x))) < MIN_SEPARATION:
        raise ValueError("Точки x и y совпадают")
    outcome = scan_intersections(spec, x, as_points(y), e, n, cfg)[()]
    if isinstance(outcome, TransversalityError):
        logger.error(f"Нетрансверсальная пара x={tuple(x)}, y={tuple(y)}: {outcome}")
        raise outcome
    return outcome


@dataclass(frozen=True)
class IntersectionIntegral:
    value: float
    error: float
    retries: int
    excluded: int


def _retried_values(spec, x, ys, e, n, cfg):
    values = np.zeros(len(ys))
    outcomes = scan_intersections(spec, x, ys, e, n, cfg)
    pending = []
    for (i,), outcome in outcomes.items():
        if isinstance(outcome, TransversalityError):
            pending.append(i)
        else:
            values[i] = outcome.value
    retries = 0
    for k in range(1, MAX_ANCHOR_RETRIES + 1):
        if not pending:
            break
        retries += len(pending)
        rotated = rotate(as_points(e), ANCHOR_ROTATION * k)
        outcomes = scan_intersections(spec, x, ys[pending], rotated, n, cfg)
        still = []
        for (j,), outcome in outcomes.items():
            if isinstance(outcome, TransversalityError):
                still.append(pending[j])
            else:
                values[pending[j]] = outcome.value
        pending = still
    if pending:
        logger.error(f"Трансверсальность не достигнута после {MAX_ANCHOR_RETRIES} сдвигов якоря")
        raise TransversalityError(f"{len(pending)} выборок остались нетрансверсальными")
    return values, retries


def _sampled_counts(spec, x, e, n, cfg, points, min_separation):
    """I^e(x, y) в точках выборки y; трубка у диагонали даёт ноль."""
    near = np.hypot(*(points - x).T) < min_separation
    if np.any(near):
        logger.warning(f"Исключено {int(near.sum())} выборок у диагонали")
    active = np.flatnonzero(~near)
    chunks = parallel_map(lambda idx: _retried_values(spec, x, points[idx], e, n, cfg), chunked(active))
    values = np.zeros(len(points))
    retries = 0
    for idx, (chunk_values, chunk_retries) in zip(chunked(active), chunks):
        values[idx] = chunk_values
        retries += chunk_retries
    return values, retries, int(near.sum())


def intersection_integral(spec, x, e, n, quad, cfg, min_separation=1e-6):
    """Квадратура y -> I^e(x, y) по диску; нетрансверсальные выборки пересчитываются с повёрнутым e."""
    _validate(x, e)
    rule = disk_quadrature(quad)
    x = as_points(x)
    values, retries, excluded = _sampled_counts(spec, x, e, n, cfg, rule.points, min_separation)
    coarse = rule.coarse()
    coarse_values = None
    if coarse is not None:
        coarse_values, coarse_retries, _ = _sampled_counts(spec, x, e, n, cfg, coarse.points, min_separation)
        retries += coarse_retries
    if retries:
        logger.warning(f"Повторных вычислений со сдвинутым якорем: {retries}")
    estimate = rule.estimate(values, coarse_values)
    return IntersectionIntegral(estimate.value, estimate.error, retries, excluded)


def anchor_sensitivity(spec, x, y, first_anchor, second_anchor, n, cfg):
    """|I^{e1}(x, y) - I^{e2}(x, y)|."""
    first = intersection_number(spec, x, y, first_anchor, n, cfg).value
    second = intersection_number(spec, x, y, second_anchor, n, cfg).value
    return abs(first - second)


@dataclass(frozen=True)
class ActionIdentityReport:
    integral: float
    error: float
    start_segment: float
    end_segment: float
    action: float
    residual: float
    retries: int


def action_identity(spec, form, x, e, n, quad, cfg):
    """Невязка равенства a(phi^n)(x) = int I^e(x, .) - int_[e,x] lambda + int_[e,phi^n x] lambda."""
    x = as_points(x)
    integral = intersection_integral(spec, x, e, n, quad, cfg)
    value = action_over(spec, form, x, 0.0, float(n), cfg)
    image = advance(spec, x, 0.0, float(n), cfg).endpoint
    start_segment = segment_integral(form, e, x)
    end_segment = segment_integral(form, e, image)
    residual = integral.value - start_segment + end_segment - value.value
    return ActionIdentityReport(integral.value, integral.error, start_segment, end_segment,
                                value.value, residual, integral.retries)
