import math

from acceptance import (CRITERION_HEADERS, check_integrator, determinism_result, radial_specs, run_acceptance,
                        suite_specs)
from config import config_from_dict
from reports import render_csv

SMALL = {
    "flow": {"steps_per_unit_time": 128},
    "quadrature": {"kind": "polar-grid", "n_r": 8, "n_theta": 8},
    "seed": 2,
    "acceptance": {
        "suite": ["trivial", "radial-1"],
        "oracle_points": 6,
        "bound_triples": 8,
        "bound_iterations": [1],
        "identity_points": 2,
        "identity_samples": 64,
        "theorem_points": 2,
        "theorem_n": 4,
        "theorem_samples": 64,
        "calabi_pairs": 256,
        "jacobian_points": 5,
        "bookkeeping_n": [4],
        "cauchy_n": 16,
        "cauchy_samples": 4,
    },
}


def test_suite_selection():
    config = config_from_dict({**SMALL, "acceptance": {"suite": ["perturbed", "config"]}})
    specs = suite_specs(config)
    assert list(specs) == ["perturbed", "config"]
    assert list(radial_specs(specs)) == ["config"]


def test_radial_oracles_pass():
    results = run_acceptance(config_from_dict(SMALL), criteria=("AC1", "AC9"))
    assert {r.criterion for r in results} == {"AC1", "AC9"}
    failed = [r for r in results if not r.passed]
    assert failed == []


def test_winding_oracles_pass():
    results = run_acceptance(config_from_dict(SMALL), criteria=("AC3",))
    by_check = {(r.spec, r.check): r for r in results}
    assert by_check[("radial-1", "winding-x0")].passed
    assert by_check[("radial-1", "symmetry")].passed
    assert by_check[("trivial", "boundary-projection")].value == 0.0


def test_trivial_map_passes_every_criterion_it_is_part_of():
    config = config_from_dict({**SMALL, "acceptance": {**SMALL["acceptance"], "suite": ["trivial"]}})
    results = run_acceptance(config, criteria=("AC4", "AC5", "AC6", "AC7", "AC10"))
    assert results
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_integrator_rows_for_the_trivial_map():
    config = config_from_dict(SMALL)
    rows = check_integrator(config, {"trivial": suite_specs(config)["trivial"]})
    order = next(r for r in rows if r.check == "rk4-order")
    assert order.value == -math.inf
    assert order.passed


def test_determinism_row():
    table = render_csv(CRITERION_HEADERS, [])
    assert determinism_result(table, table, 2).passed
    assert not determinism_result(table, table + "x", 2).passed


def test_perturbed_map_passes_the_bound_identity_theorem_and_calabi_criteria():
    config = config_from_dict({
        **SMALL,
        "quadrature": {"kind": "polar-grid", "n_r": 16, "n_theta": 16},
        "acceptance": {**SMALL["acceptance"], "suite": ["perturbed"], "bound_triples": 100,
                       "bound_iterations": [1, 8], "identity_points": 2, "identity_samples": 4096,
                       "theorem_points": 1, "theorem_n": 8, "theorem_samples": 512, "calabi_pairs": 4096},
    })
    results = run_acceptance(config, criteria=("AC4", "AC5", "AC6", "AC7"))
    assert {r.criterion for r in results} == {"AC4", "AC5", "AC6", "AC7"}
    assert all(r.passed for r in results), [r for r in results if not r.passed]
