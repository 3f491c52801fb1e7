import csv
import json

from pytest import raises

from main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, build_parser, run

TRIVIAL = {
    "hamiltonian": {"terms": []},
    "flow": {"steps_per_unit_time": 32},
    "quadrature": {"kind": "polar-grid", "n_r": 4, "n_theta": 4},
    "pair_samples": 64,
    "n": 4,
    "x": [0.3, 0.1],
    "y": [-0.2, 0.4],
    "points": 3,
    "seed": 5,
}
RADIAL = {**TRIVIAL, "hamiltonian": {"terms": [{"type": "radial", "coeffs": [1.0]}]},
          "x": [0.0, 0.0], "y": [0.0, 0.5], "flow": {"steps_per_unit_time": 64}}


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_parser_requires_config():
    with raises(SystemExit):
        build_parser().parse_args(["calabi"])
    args = build_parser().parse_args(["winding", "--config", "c.json", "--threads", "2", "--seed", "3", "--xlsx"])
    assert (args.command, args.threads, args.seed, args.xlsx) == ("winding", 2, 3, True)


def test_coincident_points_exit_with_config_error(write_config, tmp_path):
    path = write_config({**TRIVIAL, "y": TRIVIAL["x"]})
    assert run("winding", path, str(tmp_path / "out")) == EXIT_CONFIG
    assert not (tmp_path / "out").exists()


def test_schema_error_and_missing_file(write_config, tmp_path):
    assert run("flow", write_config({"bogus": True}), str(tmp_path)) == EXIT_CONFIG
    assert run("flow", str(tmp_path / "absent.json"), str(tmp_path)) == EXIT_FAILURE
    assert run("flow", write_config(TRIVIAL), str(tmp_path), threads=0) == EXIT_CONFIG


def test_misaligned_breakpoint_is_a_config_error(write_config, tmp_path):
    composite = {"terms": [{"type": "concatenation", "first": RADIAL["hamiltonian"],
                            "second": RADIAL["hamiltonian"]}]}
    path = write_config({**TRIVIAL, "hamiltonian": composite, "flow": {"steps_per_unit_time": 17}})
    assert run("flow", path, str(tmp_path)) == EXIT_CONFIG


def test_flow_table(write_config, tmp_path):
    assert run("flow", write_config(RADIAL), str(tmp_path)) == EXIT_OK
    rows = _read_rows(tmp_path / "flow-5.csv")
    assert len(rows) == 4 * 64 + 1
    assert rows[0]["provenance"].startswith("flow")
    assert (tmp_path / "flow-5.json").exists()


def test_seed_override_names_the_outputs(write_config, tmp_path):
    assert run("action", write_config(RADIAL), str(tmp_path), seed=11) == EXIT_OK
    rows = _read_rows(tmp_path / "action-11.csv")
    assert len(rows) == 4
    assert abs(float(rows[0]["value"]) - 1.0) < 1e-6


def test_winding_and_intersect(write_config, tmp_path):
    path = write_config(RADIAL)
    assert run("winding", path, str(tmp_path)) == EXIT_OK
    assert len(_read_rows(tmp_path / "winding-5.csv")) == 4
    assert run("intersect", path, str(tmp_path)) == EXIT_OK
    crossings = _read_rows(tmp_path / "intersect-5.csv")
    assert [row["sign"] for row in crossings] == ["1"] * len(crossings)


def test_calabi_on_trivial_map_passes(write_config, tmp_path):
    assert run("calabi", write_config(TRIVIAL), str(tmp_path), xlsx=False) == EXIT_OK
    rows = _read_rows(tmp_path / "calabi-5.csv")
    assert [row["route"] for row in rows] == ["action", "hamiltonian", "winding"]
    assert all(float(row["value"]) == 0.0 for row in rows)


def test_asymptotic_and_theorem(write_config, tmp_path):
    path = write_config(RADIAL)
    assert run("asymptotic", path, str(tmp_path)) == EXIT_OK
    assert len(_read_rows(tmp_path / "asymptotic-5.csv")) == 2
    assert run("verify-theorem", write_config({**RADIAL, "quadrature": {"kind": "polar-grid", "n_r": 16,
                                                                         "n_theta": 8}}), str(tmp_path)) == EXIT_OK


def test_verify_all_reports_determinism(write_config, tmp_path):
    config = {**TRIVIAL, "acceptance": {
        "suite": ["trivial"], "oracle_points": 3, "bound_triples": 4, "bound_iterations": [1],
        "identity_points": 1, "identity_samples": 16, "theorem_points": 1, "theorem_n": 4, "theorem_samples": 16,
        "calabi_pairs": 32, "jacobian_points": 2, "bookkeeping_n": [4], "cauchy_n": 16, "cauchy_samples": 2,
        "alternate_threads": 2}}
    status = run("verify-all", write_config(config), str(tmp_path), threads=1)
    rows = _read_rows(tmp_path / "verify-all-5.csv")
    determinism = [row for row in rows if row["criterion"] == "AC11"]
    assert len(determinism) == 1
    assert determinism[0]["passed"] == "true"
    assert status == (EXIT_OK if all(row["passed"] == "true" for row in rows) else EXIT_FAILURE)


def test_flow_from_a_boundary_point(write_config, tmp_path):
    assert run("flow", write_config({**RADIAL, "x": [1.0, 0.0]}), str(tmp_path)) == EXIT_OK
    rows = _read_rows(tmp_path / "flow-5.csv")
    assert {(float(row["x"]), float(row["y"])) for row in rows} == {(1.0, 0.0)}
    summary = json.loads((tmp_path / "flow-5.json").read_text(encoding="utf-8"))
    assert summary["endpoint"] == [1.0, 0.0]
    assert summary["jacobian_determinant"] is None


def test_asymptotic_rows_for_a_periodic_point(write_config, tmp_path):
    config = {**RADIAL, "k": 1, "primitives": [{"base": "radial"}, {"base": "horizontal"}]}
    assert run("asymptotic", write_config(config), str(tmp_path)) == EXIT_OK
    rows = _read_rows(tmp_path / "asymptotic-5.csv")
    assert len(rows) == 3
    action_row, periodic_row, winding_row = rows
    assert "max|a|" in action_row["provenance"]
    assert float(action_row["budget"]) > 7.0 / 3.0 / 4
    assert abs(float(periodic_row["estimate"]) - 1.0) < 1e-9
    assert periodic_row["pass"] == "true"
    assert float(winding_row["budget"]) == 7.0 / 3.0 / 4


def test_asymptotic_with_a_non_periodic_point_fails(write_config, tmp_path):
    assert run("asymptotic", write_config({**RADIAL, "x": [0.5, 0.0], "k": 1}), str(tmp_path)) == EXIT_FAILURE
