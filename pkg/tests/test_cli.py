import json
import subprocess
import sys

import pytest
import yaml

from weylstates.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, run
from weylstates.scenario import builtin_names

SCENARIOS = {
    "weyl_relations": "algebra",
    "bochner_families": "bochner",
    "field_rates": "field",
    "classical_limits": "limit",
    "gaussian_witness": "witness",
    "trace_witness": "witness",
    "zoo_witness": "witness",
    "measure_capture": "measure",
    "gns_lattice": "gns",
    "clockshift": "clockshift",
    "reduce_block": "reduce",
    "reduce_not_ideal": "reduce",
}


def _run(tmp_path, command, config, *extra):
    out = tmp_path / f"{command}.json"
    code = run([command, "--config", str(config), "--out", str(out), *extra])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def _write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_bundled_scenarios_listed():
    assert set(SCENARIOS) | {"invalid_n0"} == set(builtin_names())


@pytest.mark.parametrize("name,command", sorted(SCENARIOS.items()))
def test_bundled_scenarios_pass(tmp_path, name, command):
    code, report = _run(tmp_path, command, f"builtin:{name}")
    assert code == EXIT_OK, [c for c in report["checks"] if not c["passed"]]
    assert report["passed"] and report["version"] == "0.1.0"
    assert report["config"]["n"] >= 1 and "tolerances" in report["config"]


def test_gaussian_witness_report(tmp_path):
    code, report = _run(tmp_path, "witness", "builtin:gaussian_witness")
    entry = report["results"]["states"][0]["report"]
    assert code == 0 and entry["verdict"] == "consistent"
    assert entry["regularity"]["verdict"] == "Regular"


def test_trace_witness_report(tmp_path):
    code, report = _run(tmp_path, "witness", "builtin:trace_witness")
    entry = report["results"]["states"][0]["report"]
    assert code == 0 and entry["verdict"] == "consistent"
    assert entry["regularity"]["verdict"] == "NonRegular" and entry["mass"]["defect"] >= 0.99


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["bochner", "--config", "builtin:bochner_families", "--out", str(a)]) == 0
    assert run(["bochner", "--config", "builtin:bochner_families", "--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_override_changes_random_states(tmp_path):
    cfg = _write(tmp_path, {"n": 1, "states": [{"name": "f", "family": "fock", "h": 1.0, "N": 4}]})
    _, r0 = _run(tmp_path, "witness", cfg, "--seed", "0")
    _, r1 = _run(tmp_path, "witness", cfg, "--seed", "1")
    assert r0["config"]["seed"] == 0 and r1["config"]["seed"] == 1
    assert r0["results"]["states"][0]["state"] != r1["results"]["states"][0]["state"]


def test_n_zero_is_a_validation_error(tmp_path, capsys):
    code = run(["witness", "--config", "builtin:invalid_n0"])
    assert code == EXIT_CONFIG
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert diag["error"] == "validation" and diag["path"] == "n"


@pytest.mark.parametrize(
    "data",
    [
        {"n": 1, "states": [{"family": "unicorn"}]},
        {"n": 1, "states": [{"family": "gaussian", "h": 3}]},
        {"n": 1, "states": [{"family": "gaussian", "mean": [0, 0, 0]}]},
        {"n": 1, "states": []},
        {"n": 1, "tolerances": {"bogus": 1}, "states": [{"family": "trace", "h": 1}]},
        {"n": "one"},
    ],
)
def test_malformed_configs(tmp_path, data):
    assert run(["witness", "--config", str(_write(tmp_path, data))]) == EXIT_CONFIG


def test_missing_and_unparseable_files(tmp_path):
    assert run(["witness", "--config", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG
    bad = tmp_path / "bad.yaml"
    bad.write_text("n: [1\n")
    assert run(["witness", "--config", str(bad)]) == EXIT_CONFIG
    assert run(["witness", "--config", "builtin:nope"]) == EXIT_CONFIG


def test_tolerance_overrides(tmp_path):
    code, report = _run(tmp_path, "witness", "builtin:gaussian_witness", "--tol-overrides", "defect=1e-5")
    assert report["config"]["tolerances"]["defect"] == 1e-5
    # defect 1 - 2500/2501 = 4e-4 exceeds the tightened tolerance
    assert code == EXIT_FAIL
    assert run(["witness", "--config", "builtin:gaussian_witness", "--tol-overrides", "defect"]) == EXIT_CONFIG


def test_failed_expectation_exit_code(tmp_path):
    cfg = _write(tmp_path, {"n": 1, "states": [{"name": "g", "family": "gaussian", "h": 1.0, "cov": [[0.25, 0], [0, 0.25]]}],
                            "bochner": {"random_sets": {"count": 5, "max_size": 12}}})
    code, report = _run(tmp_path, "bochner", cfg)
    assert code == EXIT_FAIL and not report["passed"]


def test_non_convergence_exit_code(tmp_path):
    cfg = _write(tmp_path, {"n": 3, "states": [{"family": "trace", "h": 1.0}]})
    assert run(["witness", "--config", str(cfg)]) == EXIT_NUMERIC


def test_field_csv_side_export(tmp_path):
    out = tmp_path / "field.json"
    assert run(["field", "--config", "builtin:field_rates", "--out", str(out)]) == 0
    lines = (tmp_path / "field.rates.csv").read_text().splitlines()
    assert lines[0] == "property,h,defect,bound,radius,method"
    assert len(lines) == 1 + 2 * 9


def test_stdout_report_without_out(capsys):
    assert run(["clockshift", "--config", "builtin:clockshift"]) == 0
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["command"] == "clockshift"
    assert "monomial rank" in captured.err


def test_reduce_not_ideal_report(tmp_path):
    code, report = _run(tmp_path, "reduce", "builtin:reduce_not_ideal")
    assert code == 0
    assert "witness" in report["results"]["not_ideal"]
    assert report["results"]["condition_ii"]["violated"]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "weylstates.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
