"""Асимптотическое действие, асимптотическое вращение и проверка их равенства."""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from action import period_actions
from errors import CrossCheckFailedError, NotPeriodicError
from flow import orbit
from geometry import QuadratureEstimate, as_points, disk_quadrature, pair_quadrature
from oneform import PrimitiveOneForm, gauge_between, segment_integral
from winding import period_windings
from workers import chunked, parallel_map

logger = logging.getLogger(__name__)

PERIODIC_TOLERANCE = 1e-6
GAUGE_SLACK = 1e-6
CONVERGED_GAP = 1e-12
# Допуск на ошибку RK4 и Симпсона в невязке
INTEGRATION_SLACK = 1e-6
DEFAULT_ANCHOR = (1.0, 0.0)


@dataclass(frozen=True)
class BirkhoffEstimate:
    value: float
    n: int
    partial_averages: Tuple[float, ...]
    cauchy_gap: float
    # max |значение за период|
    bound: float = 0.0


def birkhoff_estimate(per_period):
    """Частичные средние при n/4, n/2, 3n/4 и n по значениям за период формы (n, ...)."""
    n = per_period.shape[0]
    if n < 4:
        raise ValueError(f"Для частичных средних нужно n >= 4: {n}")
    cumulative = np.cumsum(per_period, axis=0)
    marks = (n // 4, n // 2, (3 * n) // 4, n)
    partials = tuple(cumulative[m - 1] / m for m in marks)
    gap = np.abs(partials[-1] - partials[-2])
    bound = np.max(np.abs(per_period), axis=0)
    if np.ndim(gap) == 0:
        return BirkhoffEstimate(float(partials[-1]), n, tuple(float(p) for p in partials), float(gap), float(bound))
    return BirkhoffEstimate(partials[-1], n, partials, gap, bound)


def _second_form(form):
    return PrimitiveOneForm("vertical" if form.base != "vertical" else "radial")


def asymptotic_action(spec, form, z, n, cfg, second_form=None):
    """Среднее Биркгофа действия за период с проверкой по второму примитиву."""
    second_form = second_form or _second_form(form)
    first_values, second_values = period_actions(spec, [form, second_form], z, n, cfg)
    estimate = birkhoff_estimate(first_values)
    other = birkhoff_estimate(second_values)
    bound = 2.0 * gauge_between(form, second_form).sup_norm() / n + GAUGE_SLACK
    gap = float(np.max(np.abs(np.asarray(estimate.value) - np.asarray(other.value))))
    if gap > bound:
        logger.error(f"Асимптотическое действие зависит от примитива: разрыв {gap:.3g} > {bound:.3g}")
        raise CrossCheckFailedError(f"Оценки с разными примитивами расходятся на {gap:.3g}")
    return estimate


def asymptotic_winding(spec, x, y, n, cfg):
    return birkhoff_estimate(period_windings(spec, x, y, n, cfg).values)


def _tube_mask(points, x, min_separation):
    near = np.hypot(*(points - as_points(x)).T) < min_separation
    if np.any(near):
        logger.warning(f"Исключено {int(near.sum())} выборок у диагонали (радиус {min_separation})")
    return near


def _averaged_windings(spec, xs, ys, n, cfg):
    """W(phi^n)(x, y) / n для согласованных пакетов xs, ys фиксированными блоками."""
    blocks = parallel_map(lambda idx: period_windings(spec, xs[idx], ys[idx], n, cfg).total / n,
                          chunked(np.arange(len(ys))))
    return np.concatenate(blocks) if blocks else np.empty(0)


def asymptotic_winding_integral(spec, x, n, quad, cfg, min_separation=1e-6):
    """Квадратура y -> W(phi^n)(x, y) / n по диску без трубки у диагонали."""
    x = as_points(x)

    def averaged(points):
        near = _tube_mask(points, x, min_separation)
        values = np.zeros(len(points))
        active = np.flatnonzero(~near)
        xs = np.broadcast_to(x, points[active].shape)
        values[active] = _averaged_windings(spec, xs, points[active], n, cfg)
        return values

    return disk_quadrature(quad).integrate(averaged)


@dataclass(frozen=True)
class TheoremReport:
    x: Tuple[float, float]
    n: int
    action: BirkhoffEstimate
    winding_integral: QuadratureEstimate
    residual: float
    budget: float
    closed_form: Optional[float] = None
    closed_form_gap: Optional[float] = None

    @property
    def passed(self):
        return self.residual <= self.budget


def theorem_budget(form, x, image, n, error, anchor=DEFAULT_ANCHOR):
    """(3/2) pi / n + отрезки / n + 3 ошибки квадратуры."""
    segments = abs(segment_integral(form, anchor, x)) + abs(segment_integral(form, anchor, image))
    return 1.5 * math.pi / n + segments / n + 3.0 * error + INTEGRATION_SLACK


def verify_main_theorem(spec, x, form, n, quad, cfg, min_separation=1e-6, second_form=None):
    """Сравнивает асимптотическое действие в x с интегралом асимптотического вращения по диску."""
    x = as_points(x)
    estimate = asymptotic_action(spec, form, x, n, cfg, second_form)
    integral = asymptotic_winding_integral(spec, x, n, quad, cfg, min_separation)
    residual = abs(estimate.value - integral.value)
    image = orbit(spec, x, n, cfg)[-1]
    budget = theorem_budget(form, x, image, n, integral.error)
    closed_form = gap = None
    profile = spec.radial_profile()
    if profile is not None:
        closed_form = float(profile.radial_action(np.hypot(*x)))
        gap = max(abs(estimate.value - closed_form), abs(integral.value - closed_form))
    report = TheoremReport((float(x[0]), float(x[1])), n, estimate, integral, residual, budget, closed_form, gap)
    logger.info(f"Проверка теоремы в x={report.x}, n={n}: невязка {residual:.3g}, бюджет {budget:.3g}")
    return report


def periodic_average_action(spec, form, z, k, cfg):
    """Среднее действие по k-периодической орбите."""
    points = orbit(spec, z, k, cfg)
    distance = float(np.hypot(*(points[-1] - points[0])))
    if distance > PERIODIC_TOLERANCE:
        raise NotPeriodicError(f"Орбита не замыкается за {k} итераций: расстояние {distance:.3g}")
    return float(np.mean(period_actions(spec, [form], z, k, cfg)[0]))


@dataclass(frozen=True)
class BookkeepingReport:
    """Среднее по диску от среднего Биркгофа при конечном n против среднего по диску величины за период."""
    n: int
    averaged: QuadratureEstimate
    unit_time: QuadratureEstimate
    constant: float

    @property
    def gap(self):
        return abs(self.averaged.value - self.unit_time.value)

    @property
    def budget(self):
        return self.constant / self.n + 3.0 * (self.averaged.error + self.unit_time.error)

    @property
    def passed(self):
        return self.gap <= self.budget


def _action_table(spec, form, points, n, cfg):
    blocks = parallel_map(lambda block: period_actions(spec, [form], block, n, cfg)[0], chunked(points))
    return np.concatenate(blocks, axis=1)


def space_average_action(spec, form, n, quad, cfg):
    rule = disk_quadrature(quad)
    values = _action_table(spec, form, rule.points, n, cfg)
    coarse = rule.coarse()
    averaged_coarse = unit_coarse = None
    if coarse is not None:
        coarse_values = _action_table(spec, form, coarse.points, n, cfg)
        averaged_coarse, unit_coarse = coarse_values.mean(axis=0), coarse_values[0]
    constant = 2.0 * float(np.max(np.abs(values)))
    return BookkeepingReport(n, rule.estimate(values.mean(axis=0), averaged_coarse),
                             rule.estimate(values[0], unit_coarse), constant)


def space_average_winding(spec, n, pair_quad, cfg, min_separation=1e-6):
    rule = pair_quadrature(pair_quad, min_separation)
    blocks = parallel_map(lambda idx: period_windings(spec, rule.first[idx], rule.second[idx], n, cfg).values,
                          chunked(np.arange(len(rule))))
    values = np.concatenate(blocks, axis=1)
    constant = 2.0 * float(np.max(np.abs(values[0])))
    return BookkeepingReport(n, rule.estimate(values.mean(axis=0)), rule.estimate(values[0]), constant)


@dataclass(frozen=True)
class CauchyDecay:
    """Средние разрывы Коши |W_n/n - W_{n/2}/(n/2)| по фиксированным y и наблюдаемый показатель убывания."""
    ns: Tuple[int, ...]
    gaps: Tuple[float, ...]
    rate: float
    constant: float


def cauchy_decay_rate(spec, x, ys, n_max, cfg):
    """Показатель p убывания разрывов Коши ~ C / n^p для периодической x; inf, если все разрывы нулевые."""
    if n_max < 16:
        raise ValueError(f"n_max должно быть >= 16: {n_max}")
    ys = as_points(ys)
    xs = np.broadcast_to(as_points(x), ys.shape)
    blocks = parallel_map(lambda idx: period_windings(spec, xs[idx], ys[idx], n_max, cfg).values,
                          chunked(np.arange(len(ys))))
    cumulative = np.cumsum(np.concatenate(blocks, axis=1), axis=0)
    ns = (n_max // 8, n_max // 4, n_max // 2, n_max)
    gaps = tuple(float(np.mean(np.abs(cumulative[m - 1] / m - cumulative[m // 2 - 1] / (m // 2)))) for m in ns)
    constant = max(m * g for m, g in zip(ns, gaps))
    usable = [(m, g) for m, g in zip(ns, gaps) if g > CONVERGED_GAP]
    if len(usable) < 2:
        return CauchyDecay(ns, gaps, math.inf, constant)
    slope = np.polyfit(np.log([m for m, _ in usable]), np.log([g for _, g in usable]), 1)[0]
    rate = float(-slope)
    if rate < 0.8:
        logger.warning(f"Медленное убывание разрывов Коши: показатель {rate:.3g}")
    return CauchyDecay(ns, gaps, rate, constant)
