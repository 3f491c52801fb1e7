"""Инвариант Калаби тремя независимыми способами и проверка гомоморфности."""
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from action import period_actions
from geometry import QuadratureEstimate, disk_quadrature, pair_quadrature
from winding import period_windings
from workers import chunked, parallel_map

logger = logging.getLogger(__name__)


def calabi_via_action(spec, form, quad, cfg):
    """Квадратура действия за единицу времени по диску."""
    def unit_actions(points):
        return np.concatenate(parallel_map(lambda block: period_actions(spec, [form], block, 1, cfg)[0, 0],
                                           chunked(points)))
    return disk_quadrature(quad).integrate(unit_actions)


def calabi_via_hamiltonian(spec, quad, cfg=None):
    """Удвоенный интеграл H по пространству и времени."""
    estimate = disk_quadrature(quad).integrate(spec.time_integral)
    return QuadratureEstimate(2.0 * estimate.value, 2.0 * estimate.error)


def calabi_via_winding(spec, pair_quad, cfg, min_separation=1e-6):
    """Квадратура вращения W(x, y) по парам точек диска."""
    rule = pair_quadrature(pair_quad, min_separation)
    blocks = parallel_map(lambda idx: period_windings(spec, rule.first[idx], rule.second[idx], 1, cfg).values[0],
                          chunked(np.arange(len(rule))))
    return rule.estimate(np.concatenate(blocks))


@dataclass(frozen=True)
class CalabiReport:
    via_action: QuadratureEstimate
    via_hamiltonian: QuadratureEstimate
    via_winding: QuadratureEstimate
    reference: Optional[float] = None

    @property
    def routes(self):
        return {"action": self.via_action, "hamiltonian": self.via_hamiltonian, "winding": self.via_winding}

    @property
    def max_pairwise_gap(self):
        values = [route.value for route in self.routes.values()]
        return max(abs(a - b) for a, b in combinations(values, 2))

    @property
    def tolerance(self):
        return 3.0 * sum(route.error for route in self.routes.values())

    @property
    def agrees(self):
        return self.max_pairwise_gap <= self.tolerance


def calabi_reference(spec):
    """2 pi int_0^1 h(s) ds для радиальных гамильтонианов, иначе None."""
    profile = spec.radial_profile()
    return profile.calabi_reference() if profile is not None else None


def calabi_report(spec, form, quad, pair_quad, cfg, min_separation=1e-6):
    report = CalabiReport(
        calabi_via_action(spec, form, quad, cfg),
        calabi_via_hamiltonian(spec, quad, cfg),
        calabi_via_winding(spec, pair_quad, cfg, min_separation),
        calabi_reference(spec),
    )
    logger.info(f"Калаби: действие {report.via_action}, гамильтониан {report.via_hamiltonian}, "
                f"вращение {report.via_winding}, разрыв {report.max_pairwise_gap:.3g}")
    return report


@dataclass(frozen=True)
class HomomorphismReport:
    hamiltonian_residual: float
    action_residual: float
    hamiltonian_tolerance: float
    action_tolerance: float

    @property
    def passed(self):
        return (self.hamiltonian_residual <= self.hamiltonian_tolerance
                and self.action_residual <= self.action_tolerance)


def _residual(composite, first, second):
    residual = abs(composite.value - first.value - second.value)
    tolerance = 3.0 * (composite.error + first.error + second.error) + 1e-9
    return residual, tolerance


def homomorphism_check(first, second, form, quad, cfg):
    """Инвариант склейки (first, затем second) против суммы двух инвариантов."""
    composite = first.then(second)
    hamiltonian = _residual(*(calabi_via_hamiltonian(spec, quad) for spec in (composite, first, second)))
    action_route = _residual(*(calabi_via_action(spec, form, quad, cfg) for spec in (composite, first, second)))
    return HomomorphismReport(hamiltonian[0], action_route[0], hamiltonian[1], action_route[1])
