"""Приёмочный набор проверок AC1-AC11 на стандартном наборе гамильтонианов."""
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from action import action, composition_residual, gauge_residual, inverse_residual
from calabi import calabi_report, homomorphism_check
from errors import DiskDynamicsError, TransversalityError
from ergodic import cauchy_decay_rate, space_average_action, space_average_winding, verify_main_theorem
from flow import FlowConfig, advance, integration_order, jacobian_determinant
from geometry import QuadratureSpec, keyed_uniforms, random_boundary_points, random_disk_points, rotate
from hamiltonian import perturbed_spec, radial_spec, standard_suite, trivial_spec
from intersection import TRANSVERSALITY_TOL, action_identity, scan_intersections
from oneform import GaugeFunction, PrimitiveOneForm, gauge_between
from winding import boundary_winding, period_windings
from workers import chunked, parallel_map

logger = logging.getLogger(__name__)

CRITERION_HEADERS = ("criterion", "spec", "check", "value", "budget", "passed", "provenance")

# Номера потоков случайных точек для каждого критерия
AC1_STREAM = 101
AC2_STREAM = 102
AC3_STREAM = 103
AC4_STREAM = 104
AC5_STREAM = 105
AC6_STREAM = 106
AC9_STREAM = 109
AC10_STREAM = 110

INTERIOR_RADIUS = 0.95
ORDER_STEPS = 64
ORDER_POINT = (0.3, 0.2)
BOUNDARY_FIXITY = 1e-12


@dataclass(frozen=True)
class CriterionResult:
    criterion: str
    spec: str
    check: str
    value: float
    budget: float
    passed: bool
    provenance: str

    def row(self):
        return asdict(self)


def _result(criterion, spec_name, check, value, budget, provenance):
    value = float(value)
    return CriterionResult(criterion, spec_name, check, value, float(budget), bool(value <= budget), provenance)


def suite_specs(config):
    """Именованные гамильтонианы набора; 'config' означает гамильтониан из конфигурации."""
    available = standard_suite()
    available["config"] = config.hamiltonian
    return {name: available[name] for name in config.acceptance.suite}


def radial_specs(specs):
    return {name: spec for name, spec in specs.items() if spec.radial_profile() is not None}


def _points(config, stream, count, max_radius=INTERIOR_RADIUS):
    return random_disk_points(config.seed, count, max_radius, stream)


def check_radial_action(config, specs):
    """AC1: действие за единицу времени против h(r^2) - r^2 h'(r^2).

    Для примитива, отличного от радиального, к точной формуле добавляется u(phi z) - u(z),
    где phi - точный поворот на omega(r).
    """
    points = _points(config, AC1_STREAM, config.acceptance.oracle_points)
    radii = np.hypot(points[:, 0], points[:, 1])
    radial_form = PrimitiveOneForm("radial")
    results = []
    for name, spec in radial_specs(specs).items():
        profile = spec.radial_profile()
        images = rotate(points, profile.angular_velocity(radii))
        for base, budget in (("radial", 1e-6), ("vertical", 1e-5)):
            form = PrimitiveOneForm(base)
            u = gauge_between(form, radial_form)
            expected = profile.radial_action(radii) + u.value(images) - u.value(points)
            values = action(spec, form, points, config.flow).value
            results.append(_result("AC1", name, f"action-{base}", np.max(np.abs(values - expected)), budget,
                                   f"AC1: max|a - (h - r^2 h' + u o phi - u)| <= {budget}, {len(points)} точек"))
    return results


def _random_gauge(config):
    coefficients = 2.0 * keyed_uniforms(config.seed, AC2_STREAM, 1, 3)[0] - 1.0
    return GaugeFunction(((2, 1, coefficients[0]), (0, 3, coefficients[1]), (4, 0, coefficients[2])))


def check_action_calculus(config, specs):
    """AC2: правила калибровки, композиции и обращения."""
    points = _points(config, AC2_STREAM, config.acceptance.oracle_points)
    form = config.form
    gauge = _random_gauge(config)
    partner = perturbed_spec()
    results = []
    for name, spec in specs.items():
        checks = (
            ("gauge", gauge_residual(spec, form, gauge, points, config.flow)),
            ("composition", composition_residual(spec, partner, form, points, config.flow)),
            ("inverse", inverse_residual(spec, form, points, config.flow)),
        )
        for check, residuals in checks:
            results.append(_result("AC2", name, check, np.max(residuals), 1e-6,
                                   f"AC2: правило {check} <= 1e-6, {len(points)} точек"))
    return results


def check_windings(config, specs):
    """AC3: вращение вокруг x = 0, оценка граничной проекции и симметрия."""
    count = config.acceptance.oracle_points
    results = []
    radii = np.linspace(0.05, 0.95, count)
    ys = np.stack([radii, np.zeros(count)], axis=-1)
    for name, spec in radial_specs(specs).items():
        values = period_windings(spec, np.zeros(2), ys, 1, config.flow).values[0]
        expected = spec.radial_profile().angular_velocity(radii) / (2 * np.pi)
        results.append(_result("AC3", name, "winding-x0", np.max(np.abs(values - expected)), 1e-7,
                               f"AC3: |W - omega/2pi| <= 1e-7, {count} радиусов"))
    xs = _points(config, AC3_STREAM, count)
    ys = random_disk_points(config.seed + 1, count, INTERIOR_RADIUS, AC3_STREAM)
    for name, spec in specs.items():
        forward = period_windings(spec, xs, ys, 1, config.flow).values[0]
        backward = period_windings(spec, ys, xs, 1, config.flow).values[0]
        results.append(_result("AC3", name, "symmetry", np.max(np.abs(forward - backward)), 1e-9,
                               "AC3: |W(x,y) - W(y,x)| <= 1e-9"))
        projected = np.array([boundary_winding(spec, x, y, config.flow) for x, y in zip(xs, ys)])
        results.append(_result("AC3", name, "boundary-projection", np.max(np.abs(projected - forward)), 0.5,
                               "AC3: |w - W| <= 1/2"))
    return results


def check_intersection_bound(config, specs):
    """AC4: |W(phi^n) - I^e(phi^n)| <= 3/2 на случайных трансверсальных тройках."""
    count = config.acceptance.bound_triples
    xs = _points(config, AC4_STREAM, count)
    ys = random_disk_points(config.seed + 1, count, INTERIOR_RADIUS, AC4_STREAM)
    es = random_boundary_points(config.seed, count, AC4_STREAM)
    results = []
    for name, spec in specs.items():
        for n in config.acceptance.bound_iterations:
            def gaps(idx):
                windings = period_windings(spec, xs[idx], ys[idx], n, config.flow).total
                outcomes = scan_intersections(spec, xs[idx], ys[idx], es[idx], n, config.flow)
                block = np.full(len(idx), np.nan)
                for (i,), outcome in outcomes.items():
                    if not isinstance(outcome, TransversalityError):
                        block[i] = abs(windings[i] - outcome.value)
                return block

            values = np.concatenate(parallel_map(gaps, chunked(np.arange(count))))
            transversal = values[~np.isnan(values)]
            skipped = count - len(transversal)
            if skipped:
                logger.warning(f"AC4 {name}, n={n}: пропущено {skipped} нетрансверсальных троек")
            largest = float(np.max(transversal)) if len(transversal) else 0.0
            violations = int(np.sum(transversal > 1.5))
            results.append(_result("AC4", name, f"max-gap-n{n}", largest, 1.5,
                                   f"AC4: |W - I| <= 3/2, {len(transversal)} трансверсальных троек"))
            results.append(_result("AC4", name, f"violations-n{n}", violations, 0,
                                   f"AC4: число нарушений = 0, пропущено {skipped}"))
    return results


def _identity_budget(report):
    return 3.0 * report.error + 2.0 * TRANSVERSALITY_TOL + 1e-6


def check_action_identity(config, specs):
    """AC5: тождество a(x) = int I^e(x, .) - int_[e,x] lambda + int_[e,phi x] lambda."""
    count = config.acceptance.identity_points
    samples = config.acceptance.identity_samples
    xs = _points(config, AC5_STREAM, count, 0.9)
    es = random_boundary_points(config.seed, count, AC5_STREAM)
    quad = QuadratureSpec("monte-carlo", n_samples=samples, seed=config.seed)
    finer = QuadratureSpec("monte-carlo", n_samples=4 * samples, seed=config.seed)
    results = []
    for name, spec in specs.items():
        worst = 0.0
        for x, e in zip(xs, es):
            report = action_identity(spec, config.form, x, e, 1, quad, config.flow)
            worst = max(worst, abs(report.residual) - _identity_budget(report))
        results.append(_result("AC5", name, "identity", worst, 0.0,
                               f"AC5: |невязка| - (3 SE + 2 tol) <= 0, {count} точек, {samples} выборок"))
        refined = action_identity(spec, config.form, xs[0], es[0], 1, finer, config.flow)
        results.append(_result("AC5", name, "identity-4x", abs(refined.residual), _identity_budget(refined),
                               f"AC5: невязка при {4 * samples} выборках <= 3 SE"))
    return results


def check_main_theorem(config, specs):
    """AC6: асимптотическое действие против интеграла вращения в пределах бюджета O(1/n)."""
    count = config.acceptance.theorem_points
    n = config.acceptance.theorem_n
    quad = QuadratureSpec("monte-carlo", n_samples=config.acceptance.theorem_samples, seed=config.seed)
    xs = _points(config, AC6_STREAM, count, 0.9)
    results = []
    for name, spec in specs.items():
        reports = [verify_main_theorem(spec, x, config.form, n, quad, config.flow,
                                       config.min_separation, config.second_form) for x in xs]
        excess = max(report.residual - report.budget for report in reports)
        results.append(_result("AC6", name, "theorem", excess, 0.0,
                               f"AC6: невязка - (3pi/2n + отрезки/n + 3 SE) <= 0, n={n}"))
        if spec.radial_profile() is not None:
            closed = max(report.closed_form_gap - 3.0 * report.winding_integral.error for report in reports)
            results.append(_result("AC6", name, "closed-form", closed, 1e-4,
                                   "AC6: |оценка - (h - r^2 h')| - 3 SE <= 1e-4"))
    return results


def check_calabi(config, specs):
    """AC7: три способа вычисления инварианта Калаби."""
    pair_quad = QuadratureSpec("monte-carlo", n_samples=config.acceptance.calabi_pairs, seed=config.seed)
    results = []
    for name, spec in specs.items():
        report = calabi_report(spec, config.form, config.quadrature, pair_quad, config.flow, config.min_separation)
        results.append(_result("AC7", name, "three-routes", report.max_pairwise_gap, report.tolerance,
                               f"AC7: разрыв маршрутов <= 3 x сумма ошибок, {pair_quad.n_samples} пар"))
        if report.reference is not None:
            excess = max(abs(route.value - report.reference) - 3.0 * route.error - 1e-6
                         for route in report.routes.values())
            results.append(_result("AC7", name, "symbolic", excess, 0.0,
                                   "AC7: |маршрут - 2pi int h| <= 3 x ошибка маршрута"))
    return results


def check_homomorphism(config, specs):
    """AC8: инвариант Калаби склейки равен сумме инвариантов."""
    pairs = (
        ("radial-1+trivial", radial_spec(1.0), trivial_spec()),
        ("radial-0.5+radial-2", radial_spec(0.5), radial_spec(2.0)),
        ("radial-1+perturbed", radial_spec(1.0), perturbed_spec()),
    )
    results = []
    for name, first, second in pairs:
        report = homomorphism_check(first, second, config.form, config.quadrature, config.flow)
        results.append(_result("AC8", name, "hamiltonian", report.hamiltonian_residual, report.hamiltonian_tolerance,
                               "AC8: |C(сумма) - C1 - C2| <= 3 x ошибки, гамильтонов маршрут"))
        results.append(_result("AC8", name, "action", report.action_residual, report.action_tolerance,
                               "AC8: |C(сумма) - C1 - C2| <= 3 x ошибки, маршрут действия"))
    return results


def check_integrator(config, specs):
    """AC9: сохранение площади, порядок RK4 и неподвижность границы."""
    points = _points(config, AC9_STREAM, config.acceptance.jacobian_points, 0.9)
    theta = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    boundary = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    results = []
    for name, spec in specs.items():
        det = jacobian_determinant(spec, points, config.flow)
        results.append(_result("AC9", name, "jacobian", np.max(np.abs(det - 1.0)), 1e-4,
                               "AC9: |det D phi - 1| <= 1e-4"))
        order = integration_order(spec, ORDER_POINT, FlowConfig(ORDER_STEPS))
        results.append(_result("AC9", name, "rk4-order", -order, -3.8,
                               f"AC9: наблюдаемый порядок >= 3.8 при {ORDER_STEPS} шагах"))
        moved = advance(spec, boundary, 0.0, 1.0, config.flow).endpoint - boundary
        results.append(_result("AC9", name, "boundary", np.max(np.abs(moved)), BOUNDARY_FIXITY,
                               "AC9: граница неподвижна до 1e-12"))
    return results


def check_bookkeeping(config, specs):
    """AC10: пространственные средние при конечном n и разрывы Коши в неподвижной точке 0."""
    pair_quad = QuadratureSpec("monte-carlo", n_samples=config.acceptance.theorem_samples, seed=config.seed)
    ys = _points(config, AC10_STREAM, config.acceptance.cauchy_samples, 0.9)
    results = []
    for name, spec in specs.items():
        for n in config.acceptance.bookkeeping_n:
            actions = space_average_action(spec, config.form, n, config.quadrature, config.flow)
            results.append(_result("AC10", name, f"action-average-n{n}", actions.gap, actions.budget,
                                   f"AC10: |int a_n - int a| <= C/n + 3 x ошибки, C={actions.constant:.3g}"))
            windings = space_average_winding(spec, n, pair_quad, config.flow, config.min_separation)
            results.append(_result("AC10", name, f"winding-average-n{n}", windings.gap, windings.budget,
                                   f"AC10: |int W_n/n - int W| <= C/n + 3 x ошибки, C={windings.constant:.3g}"))
        decay = cauchy_decay_rate(spec, (0.0, 0.0), ys, config.acceptance.cauchy_n, config.flow)
        results.append(_result("AC10", name, "cauchy-rate", -decay.rate, -0.8,
                               "AC10: показатель убывания разрывов Коши >= 0.8 (x = 0)"))
    return results


CRITERIA = (
    ("AC1", check_radial_action),
    ("AC2", check_action_calculus),
    ("AC3", check_windings),
    ("AC4", check_intersection_bound),
    ("AC5", check_action_identity),
    ("AC6", check_main_theorem),
    ("AC7", check_calabi),
    ("AC8", check_homomorphism),
    ("AC9", check_integrator),
    ("AC10", check_bookkeeping),
)


def run_acceptance(config, criteria=None):
    """Запускает выбранные критерии; критерий с исключением даёт одну непройденную строку."""
    specs = suite_specs(config)
    selected = [(cid, check) for cid, check in CRITERIA if criteria is None or cid in criteria]
    results = []
    for cid, check in selected:
        logger.info(f"Критерий {cid}: старт")
        try:
            results.extend(check(config, specs))
        except DiskDynamicsError as e:
            logger.error(f"Критерий {cid} прерван: {e}")
            results.append(CriterionResult(cid, "-", "error", math.nan, 0.0, False, f"{type(e).__name__}: {e}"))
        passed = all(r.passed for r in results if r.criterion == cid)
        logger.info(f"Критерий {cid}: {'пройден' if passed else 'не пройден'}")
    return results


def determinism_result(first_csv, second_csv, threads):
    """AC11: побайтно одинаковые таблицы при разном числе потоков."""
    same = first_csv.encode("utf-8") == second_csv.encode("utf-8")
    return CriterionResult("AC11", "-", "byte-identical-csv", 0.0 if same else 1.0, 0.0, same,
                           f"AC11: повторный прогон с --threads {threads} даёт тот же CSV")
