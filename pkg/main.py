#!/usr/bin/env python3
"""
Командная строка: конфигурация эксперимента на входе, отчёты CSV/JSON на выходе.

Использование:
  python main.py calabi --config configs/radial.json --out exports --threads 4 --seed 7
"""
import argparse
import faulthandler
import logging
import os
import sys

import numpy as np

from acceptance import CRITERION_HEADERS, determinism_result, run_acceptance
from action import action
from calabi import calabi_report
from config import COMMANDS, get_app_dir, load_config, validate_for
from errors import ConfigError, DiskDynamicsError
from ergodic import asymptotic_action, asymptotic_winding, periodic_average_action, verify_main_theorem
from flow import JACOBIAN_STEP, advance, jacobian_determinant
from geometry import random_disk_points
from intersection import intersection_number
from reports import export_table, render_csv
from winding import boundary_winding, period_windings, winding, winding_iterate
from workers import get_threads, set_threads

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

# Случайные точки для таблиц действия и вращения помимо заданных в конфигурации
EXTRA_POINT_STREAM = 7
# |S_n/n - S_{3n/4}/(3n/4)| <= (7/3)/n при ограниченном на единицу отклонении суммы
CAUCHY_CONSTANT = 7.0 / 3.0
PERIODIC_SLACK = 1e-6


def setup_logging(app_dir):
    os.makedirs(os.path.join(app_dir, 'logs'), exist_ok=True)
    logging.basicConfig(
        filename=os.path.join(app_dir, 'logs', 'diskwinding.log'),
        filemode="a",
        level=os.environ.get("LOG_LEVEL", "DEBUG").upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        encoding="utf-8"
    )


def _extra_points(config, radius=0.95):
    return random_disk_points(config.seed, config.points, radius, EXTRA_POINT_STREAM)


def run_flow(config, out_dir, xlsx):
    traj = advance(config.hamiltonian, config.x, 0.0, float(config.n), config.flow)
    provenance = f"flow: RK4, шаг 1/{config.flow.steps_per_unit_time}"
    rows = [{"t": t, "x": p[0], "y": p[1], "vx": v[0], "vy": v[1], "provenance": provenance}
            for t, p, v in zip(traj.times, traj.points, traj.velocities)]
    summary = {
        "command": "flow",
        "config": config.to_config(),
        "endpoint": traj.endpoint,
        # шаблон конечных разностей должен лежать внутри диска
        "jacobian_determinant": jacobian_determinant(config.hamiltonian, config.x, config.flow)
        if config.x.norm() < 1.0 - JACOBIAN_STEP else None,
    }
    export_table(out_dir, "flow", config.seed, ("t", "x", "y", "vx", "vy", "provenance"), rows, summary, xlsx)
    return True


def run_action(config, out_dir, xlsx):
    points = np.vstack([np.asarray(config.x)[None, :], _extra_points(config)])
    values = action(config.hamiltonian, config.form, points, config.flow)
    provenance = f"action: lambda={config.form.base}, Simpson, шаг 1/{config.flow.steps_per_unit_time}"
    rows = [{"x": p[0], "y": p[1], "value": a, "path_term": b, "hamiltonian_term": c, "provenance": provenance}
            for p, a, b, c in zip(points, values.value, values.path_term, values.hamiltonian_term)]
    summary = {"command": "action", "config": config.to_config(), "value_at_x": rows[0]["value"]}
    export_table(out_dir, "action", config.seed,
                 ("x", "y", "value", "path_term", "hamiltonian_term", "provenance"), rows, summary, xlsx)
    return True


def run_winding(config, out_dir, xlsx):
    single = winding(config.hamiltonian, config.x, config.y, config.flow)
    xs = np.vstack([np.asarray(config.x)[None, :], _extra_points(config)])
    ys = np.vstack([np.asarray(config.y)[None, :], random_disk_points(config.seed + 1, config.points, 0.95,
                                                                      EXTRA_POINT_STREAM)])
    batch = period_windings(config.hamiltonian, xs, ys, 1, config.flow)
    provenance = "winding: |приращение| <= pi/2, разделение >= 1e-12"
    rows = [{"x1": x[0], "y1": x[1], "x2": y[0], "y2": y[1], "W": w, "min_sep": s, "substeps": c,
             "provenance": provenance}
            for x, y, w, s, c in zip(xs, ys, batch.values[0], batch.min_separation, batch.substeps_used)]
    summary = {
        "command": "winding",
        "config": config.to_config(),
        "winding": single.value,
        "iterated": winding_iterate(config.hamiltonian, config.x, config.y, config.n, config.flow).value,
        "boundary_winding": boundary_winding(config.hamiltonian, config.x, config.y, config.flow)
        if config.x.norm() < 1.0 else None,
    }
    export_table(out_dir, "winding", config.seed,
                 ("x1", "y1", "x2", "y2", "W", "min_sep", "substeps", "provenance"), rows, summary, xlsx)
    return True


def run_intersect(config, out_dir, xlsx):
    result = intersection_number(config.hamiltonian, config.x, config.y, config.e, config.n, config.flow)
    provenance = "intersect: |скорость угла| >= 1e-6, корень до 1e-10"
    rows = [{"t": c.time, "sign": c.sign, "angle_rate": c.angle_rate, "radial_fraction": c.radial_fraction,
             "provenance": provenance} for c in result.crossings]
    summary = {"command": "intersect", "config": config.to_config(), "value": result.value,
               "crossings": len(result.crossings), "min_angle_rate": result.min_angle_rate}
    export_table(out_dir, "intersect", config.seed,
                 ("t", "sign", "angle_rate", "radial_fraction", "provenance"), rows, summary, xlsx)
    logger.info(f"Индекс пересечения: {result.value}")
    return True


def _asymptotic_row(x, y, estimate, budget, provenance):
    passed = estimate.cauchy_gap <= budget
    if not passed:
        logger.warning(f"Разрыв Коши {estimate.cauchy_gap:.3g} превышает {budget:.3g} (n={estimate.n})")
    return {"x": f"{x[0]:.17g} {x[1]:.17g}", "y": "" if y is None else f"{y[0]:.17g} {y[1]:.17g}",
            "estimate": estimate.value, "n": estimate.n, "cauchy_gap": estimate.cauchy_gap, "budget": budget,
            "pass": passed, "provenance": provenance}


def _periodic_row(config, estimate):
    """Среднее по k-периодической орбите против среднего Биркгофа: |разность| <= 2 k max|a| / n."""
    value = periodic_average_action(config.hamiltonian, config.form, config.x, config.k, config.flow)
    gap = abs(value - estimate.value)
    budget = 2.0 * config.k * estimate.bound / estimate.n + PERIODIC_SLACK
    passed = gap <= budget
    if not passed:
        logger.warning(f"Среднее по периодической орбите отличается на {gap:.3g} > {budget:.3g}")
    return {"x": f"{config.x[0]:.17g} {config.x[1]:.17g}", "y": "", "estimate": value, "n": config.k,
            "cauchy_gap": gap, "budget": budget, "pass": passed,
            "provenance": "asymptotic: |среднее по орбите - среднее Биркгофа| <= 2k max|a|/n"}


ASYMPTOTIC_HEADERS = ("x", "y", "estimate", "n", "cauchy_gap", "budget", "pass", "provenance")


def run_asymptotic(config, out_dir, xlsx):
    action_estimate = asymptotic_action(config.hamiltonian, config.form, config.x, config.n, config.flow,
                                        config.second_form)
    action_budget = 2.0 * action_estimate.bound * CAUCHY_CONSTANT / action_estimate.n
    rows = [_asymptotic_row(config.x, None, action_estimate, action_budget,
                            "asymptotic: разрыв Коши действия <= 2 max|a| (7/3)/n")]
    if config.k is not None:
        rows.append(_periodic_row(config, action_estimate))
    if config.y is not None:
        estimate = asymptotic_winding(config.hamiltonian, config.x, config.y, config.n, config.flow)
        rows.append(_asymptotic_row(config.x, config.y, estimate, CAUCHY_CONSTANT / estimate.n,
                                    "asymptotic: разрыв Коши вращения <= (7/3)/n"))
    export_table(out_dir, "asymptotic", config.seed, ASYMPTOTIC_HEADERS, rows,
                 {"command": "asymptotic", "config": config.to_config(), "rows": rows}, xlsx)
    return True


def run_calabi(config, out_dir, xlsx):
    report = calabi_report(config.hamiltonian, config.form, config.quadrature, config.pair_quadrature,
                           config.flow, config.min_separation)
    provenance = "calabi: разрыв <= 3 x сумма ошибок маршрутов"
    rows = [{"route": name, "value": route.value, "error": route.error, "reference": report.reference,
             "provenance": provenance} for name, route in report.routes.items()]
    summary = {
        "command": "calabi",
        "config": config.to_config(),
        "routes": {name: {"value": route.value, "error": route.error} for name, route in report.routes.items()},
        "reference": report.reference,
        "max_pairwise_gap": report.max_pairwise_gap,
        "tolerance": report.tolerance,
        "passed": report.agrees,
    }
    export_table(out_dir, "calabi", config.seed, ("route", "value", "error", "reference", "provenance"),
                 rows, summary, xlsx)
    return report.agrees


def run_verify_theorem(config, out_dir, xlsx):
    report = verify_main_theorem(config.hamiltonian, config.x, config.form, config.n, config.quadrature, config.flow,
                                 config.min_separation, config.second_form)
    row = {"x": f"{report.x[0]:.17g} {report.x[1]:.17g}", "y": "", "estimate": report.action.value, "n": report.n,
           "cauchy_gap": report.action.cauchy_gap, "budget": report.budget, "pass": report.passed,
           "provenance": "verify-theorem: невязка <= 3pi/2n + отрезки/n + 3 SE"}
    summary = {
        "command": "verify-theorem",
        "config": config.to_config(),
        "asymptotic_action": report.action.value,
        "winding_integral": report.winding_integral.value,
        "winding_integral_error": report.winding_integral.error,
        "residual": report.residual,
        "budget": report.budget,
        "closed_form": report.closed_form,
        "closed_form_gap": report.closed_form_gap,
        "passed": report.passed,
    }
    export_table(out_dir, "verify-theorem", config.seed, ASYMPTOTIC_HEADERS, [row], summary, xlsx)
    return report.passed


def run_verify_all(config, out_dir, xlsx):
    results = run_acceptance(config)
    table = render_csv(CRITERION_HEADERS, [r.row() for r in results])
    threads = get_threads()
    alternate = config.acceptance.alternate_threads
    if alternate == threads:
        alternate = threads + 1
    set_threads(alternate)
    try:
        repeated = render_csv(CRITERION_HEADERS, [r.row() for r in run_acceptance(config)])
    finally:
        set_threads(threads)
    results.append(determinism_result(table, repeated, alternate))
    passed = all(r.passed for r in results)
    summary = {
        "command": "verify-all",
        "config": config.to_config(),
        "passed": passed,
        "failed": [f"{r.criterion}/{r.spec}/{r.check}" for r in results if not r.passed],
    }
    export_table(out_dir, "verify-all", config.seed, CRITERION_HEADERS, [r.row() for r in results], summary, xlsx)
    for r in results:
        logger.info(f"{r.criterion} {r.spec} {r.check}: {r.value:.6g} / {r.budget:.6g} -> "
                    f"{'✅' if r.passed else '❌'}")
    return passed


HANDLERS = {
    "flow": run_flow,
    "action": run_action,
    "winding": run_winding,
    "intersect": run_intersect,
    "asymptotic": run_asymptotic,
    "calabi": run_calabi,
    "verify-theorem": run_verify_theorem,
    "verify-all": run_verify_all,
}


def run(command, config_path, out_dir, threads=None, seed=None, xlsx=False):
    """Выполняет одну команду и возвращает код завершения процесса."""
    try:
        config = load_config(config_path, seed)
        validate_for(command, config)
        set_threads(threads)
    except ValueError as e:
        logger.error(f"❌ Ошибка конфигурации: {e}")
        print(f"Ошибка конфигурации: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"❌ Не удалось прочитать конфигурацию: {e}")
        print(f"Не удалось прочитать конфигурацию: {e}", file=sys.stderr)
        return EXIT_FAILURE

    logger.info(f"Команда {command}: seed={config.seed}, потоков {get_threads()}, вывод в {out_dir}")
    try:
        passed = HANDLERS[command](config, out_dir, xlsx)
    except ConfigError as e:
        logger.error(f"❌ Ошибка конфигурации в {command}: {e}")
        print(f"Ошибка конфигурации: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DiskDynamicsError as e:
        logger.error(f"❌ Вычислительная ошибка в {command}: {type(e).__name__}: {e}")
        print(f"Вычислительная ошибка ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as e:
        logger.error(f"❌ Ошибка записи отчёта: {e}")
        print(f"Ошибка записи отчёта: {e}", file=sys.stderr)
        return EXIT_FAILURE
    logger.info(f"Команда {command} завершена: {'✅ успех' if passed else '❌ проверка не пройдена'}")
    return EXIT_OK if passed else EXIT_FAILURE


def build_parser():
    parser = argparse.ArgumentParser(description="Действие, вращение и инвариант Калаби для отображений диска.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON-файл эксперимента")
    parser.add_argument("--out", default=None, help="каталог отчётов (по умолчанию <app>/exports)")
    parser.add_argument("--threads", type=int, default=None, help="размер пула потоков")
    parser.add_argument("--seed", type=int, default=None, help="переопределяет seed из конфигурации")
    parser.add_argument("--xlsx", action="store_true", help="дополнительно сохранить XLSX")
    return parser


def main(argv=None):
    faulthandler.enable()
    app_dir = get_app_dir()
    setup_logging(app_dir)
    args = build_parser().parse_args(argv)
    out_dir = args.out or os.path.join(app_dir, 'exports')
    logger.info("Запуск")
    return run(args.command, args.config, out_dir, args.threads, args.seed, args.xlsx)


if __name__ == "__main__":
    sys.exit(main())
