import itertools
import json
import math

import pandas as pd
import pytest

from dd_metrology.cli import run
from dd_metrology.cli.output import format_value, render_table
from dd_metrology.cli.scenario import build_schedule, build_strategy_map
from dd_metrology.config.app import RESOURCES
from dd_metrology.decoupling import correlated_scheme, schedule_to_map
from dd_metrology.entities import Scenario
from dd_metrology.metrology import Unbounded
from dd_metrology.operators import DenseOperator, pauli, pauli_string

RATE_CONSTANT = 1 / math.sqrt(2 * math.e)


def _write(path, payload):
    path.write_text(json.dumps(payload))
    return path


@pytest.fixture
def transverse(tmp_path):
    return _write(
        tmp_path / "transverse.json",
        {
            "name": "transverse",
            "omega": 1.0,
            "sites": 1,
            "env": {"model": "independent", "dims": [2]},
            "terms": [
                {"c": 0.5, "paulis": "X", "env_op": "pauli_x"},
                {"c": 0.3, "paulis": "Y", "env_op": "pauli_y"},
            ],
            "strategy": {"kind": "projection", "r": [0, 0, 1]},
            "sweep": {"m": [32, 64, 128, 256]},
        },
    )


@pytest.fixture
def gaussian(tmp_path):
    return _write(
        tmp_path / "gaussian.json",
        {
            "name": "gaussian",
            "noise": {"kind": "gaussian", "model": "collective", "sigma": 0.5},
            "sweep": {"N": [1, 2, 4, 8]},
            "seed": 11,
            "outputs": ["monte_carlo"],
        },
    )


def test_format_value():
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(math.inf) == "unbounded"
    assert format_value(Unbounded.UNBOUNDED) == "unbounded"
    assert format_value(True) == "true"
    assert format_value(-0.0) == "0"
    assert format_value(7) == "7"
    assert format_value(None) == "n/a"


def test_render_table_formats():
    rows = [{"N": 2, "rate": 0.5}, {"N": 4, "rate": Unbounded.UNBOUNDED}, {"N": 8, "rate": None}]
    assert render_table(rows, ["N", "rate"]) == "N,rate\n2,0.5\n4,unbounded\n8,n/a\n"
    payload = json.loads(render_table(rows, ["N", "rate"], "json"))
    assert payload == {"columns": ["N", "rate"], "rows": [[2, 0.5], [4, "unbounded"], [8, None]]}


def test_analyze_writes_tables_and_manifest(transverse, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    out = tmp_path / "analyze"
    assert run(["analyze", "--scenario", str(transverse), "--out", str(out)]) == 0
    table = pd.read_csv(out / "analyze.csv")
    assert table.loc[0, "rank"] == 2
    assert table.loc[0, "verdict"] == "decouple"
    assert table.loc[0, "r3"] == pytest.approx(1.0)
    assert table.loc[0, "b1"] == pytest.approx(math.sqrt(0.5))
    strategy = pd.read_csv(out / "strategy.csv")
    assert strategy.loc[0, "residual_noise"] == pytest.approx(0.0)
    assert strategy.loc[0, "signal_fraction"] == pytest.approx(1.0)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "analyze"
    assert manifest["timestamp"] == "1970-01-01T00:00:00+00:00"
    assert set(manifest["outputs"]) == {"analyze.csv", "strategy.csv"}
    assert len(manifest["scenario_sha256"]) == 64


def test_analyze_to_stdout(transverse, capsys):
    assert run(["analyze", "--scenario", str(transverse)]) == 0
    assert capsys.readouterr().out.startswith("site,b1,b2,b3,")


def test_evolve_reports_first_order(transverse, tmp_path):
    out = tmp_path / "evolve"
    assert run(["evolve", "--scenario", str(transverse), "--out", str(out), "--threads", "2"]) == 0
    table = pd.read_csv(out / "convergence.csv")
    assert list(table["m"]) == [32, 64, 128, 256]
    assert table["error"].is_monotonic_decreasing
    assert table["fitted_order"].iloc[0] == pytest.approx(1.0, abs=0.15)


def test_evolve_without_noise_has_unbounded_order(tmp_path):
    scenario = _write(
        tmp_path / "quiet.json",
        {"strategy": {"kind": "projection", "r": [0, 0, 1]}, "sweep": {"m": [4, 8]}},
    )
    out = tmp_path / "quiet"
    assert run(["evolve", "--scenario", str(scenario), "--out", str(out)]) == 0
    table = pd.read_csv(out / "convergence.csv")
    assert table["error"].max() < 1e-10
    assert (table["fitted_order"] == "unbounded").all()


def test_qfi_gaussian_rows(gaussian, tmp_path):
    out = tmp_path / "qfi"
    assert run(["qfi", "--scenario", str(gaussian), "--out", str(out)]) == 0
    table = pd.read_csv(out / "qfi.csv")
    assert list(table["N"]) == [1, 2, 4, 8]
    for _, row in table.iterrows():
        assert row["qfi_rate"] == pytest.approx(row["N"] * RATE_CONSTANT / 0.5, rel=1e-9)
        assert row["ratio"] == pytest.approx(math.exp(-0.5) / math.sqrt(2), rel=1e-6)
    monte_carlo = pd.read_csv(out / "monte_carlo.csv")
    assert (monte_carlo["z_score"].abs() < 5).all()


def test_qfi_is_reproducible_for_a_seed(gaussian, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert run(["qfi", "--scenario", str(gaussian), "--out", str(first), "--seed", "5"]) == 0
    assert run(["qfi", "--scenario", str(gaussian), "--out", str(second), "--seed", "5"]) == 0
    assert (first / "monte_carlo.csv").read_bytes() == (second / "monte_carlo.csv").read_bytes()
    assert json.loads((first / "manifest.json").read_text())["seed"] == 5


def test_qfi_json_format(gaussian, tmp_path):
    out = tmp_path / "json"
    assert run(["qfi", "--scenario", str(gaussian), "--out", str(out), "--format", "json"]) == 0
    payload = json.loads((out / "qfi.json").read_text())
    assert payload["columns"][:2] == ["N", "sigma"]
    assert len(payload["rows"]) == 4


def test_qfi_revival_columns(tmp_path):
    scenario = _write(
        tmp_path / "gapped.json",
        {
            "noise": {"kind": "equally_gapped", "gap": 0.7, "levels": 5, "coupling": 1.3},
            "sweep": {"N": [1, 2], "t": [0.5, 1.0]},
        },
    )
    out = tmp_path / "gapped"
    assert run(["qfi", "--scenario", str(scenario), "--out", str(out)]) == 0
    table = pd.read_csv(out / "qfi.csv")
    assert (table["bound"] == "unbounded").all()
    assert table["revival_coherence"].to_list() == pytest.approx([1.0, 1.0], abs=1e-10)


def test_sweep_local_noise(tmp_path):
    scenario = _write(
        tmp_path / "local.json",
        {
            "noise": {"kind": "gaussian", "model": "local", "sigma": 1.0},
            "sweep": {"N": [2, 4, 8, 16]},
        },
    )
    out = tmp_path / "sweep"
    assert run(["sweep", "--scenario", str(scenario), "--out", str(out)]) == 0
    scaling = json.loads((out / "scaling.json").read_text())
    assert scaling["beta"] == pytest.approx(1.5, abs=1e-6)
    assert len(scaling["points"]) == 4


def test_schedule_file_is_resolved_next_to_scenario(tmp_path):
    _write(tmp_path / "flip.json", {"gates": ["X", "X"], "fractions": [1, 1]})
    scenario = _write(
        tmp_path / "dephasing.json",
        {
            "terms": [{"c": 0.4, "paulis": "Z", "env_op": "pauli_x"}],
            "strategy": {"kind": "schedule", "schedule": {"file": "flip.json"}},
        },
    )
    out = tmp_path / "schedule"
    assert run(["analyze", "--scenario", str(scenario), "--out", str(out)]) == 0
    strategy = pd.read_csv(out / "strategy.csv")
    assert strategy.loc[0, "residual_noise"] == pytest.approx(0.0)
    assert strategy.loc[0, "signal_fraction"] == pytest.approx(0.0)


def test_correlated_strategy(tmp_path):
    scenario = _write(
        tmp_path / "chain.json",
        {
            "sites": 4,
            "env": {"model": "common", "dims": [2]},
            "terms": [
                {"c": 0.2, "paulis": "ZZII", "env_op": "pauli_x"},
                {"c": 0.2, "paulis": "IZZI", "env_op": "pauli_x"},
                {"c": 0.2, "paulis": "IIZZ", "env_op": "pauli_x"},
            ],
            "strategy": {"kind": "correlated", "k": 1},
        },
    )
    out = tmp_path / "chain"
    assert run(["analyze", "--scenario", str(scenario), "--out", str(out)]) == 0
    strategy = pd.read_csv(out / "strategy.csv")
    assert strategy.loc[0, "residual_noise"] == pytest.approx(0.0)
    assert strategy.loc[0, "alpha"] == pytest.approx(0.5)


def test_malformed_json_exits_with_two(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"sites": 1,,}')
    assert run(["analyze", "--scenario", str(broken)]) == 2


def test_unknown_field_exits_with_two(tmp_path):
    scenario = _write(tmp_path / "typo.json", {"sitez": 2})
    assert run(["analyze", "--scenario", str(scenario)]) == 2


def test_missing_schedule_exits_with_two(tmp_path):
    scenario = _write(tmp_path / "bare.json", {"sites": 1})
    assert run(["evolve", "--scenario", str(scenario)]) == 2


def test_monte_carlo_needs_seed(tmp_path):
    scenario = _write(
        tmp_path / "unseeded.json",
        {"noise": {"kind": "gaussian", "sigma": 1.0}, "outputs": ["monte_carlo"]},
    )
    assert run(["qfi", "--scenario", str(scenario)]) == 2


def test_unknown_command_is_a_usage_error():
    assert run(["calibrate"]) == 2


def test_reproduce_selected_criteria(tmp_path):
    out = tmp_path / "reproduce"
    assert run(["reproduce-paper", "--criteria", "4,5,11", "--out", str(out), "--seed", "3"]) == 0
    summary = pd.read_csv(out / "summary.csv")
    assert list(summary["criterion"]) == [4, 5, 11]
    assert (summary["status"] == "PASS").all()
    assert (out / "criterion_05_ghz_gaussian_constant.csv").exists()


def test_reproduce_fails_on_tightened_tolerance(tmp_path, monkeypatch):
    text = (RESOURCES / "config" / "default.yaml").read_text()
    strict = tmp_path / "strict.yaml"
    strict.write_text(text.replace("ghz_constant_rel: 1.0e-2", "ghz_constant_rel: 1.0e-9"))
    monkeypatch.setenv("CONFIG_PATH", str(strict))
    out = tmp_path / "strict"
    assert run(["reproduce-paper", "--criteria", "5", "--out", str(out)]) == 1
    summary = pd.read_csv(out / "summary.csv")
    assert summary.loc[0, "status"] == "FAIL"


def test_reproduce_determinism_check(tmp_path):
    out = tmp_path / "determinism"
    assert run(["reproduce-paper", "--criteria", "5,13", "--out", str(out), "--seed", "9"]) == 0
    summary = pd.read_csv(out / "summary.csv")
    assert list(summary["name"]) == ["ghz_gaussian_constant", "determinism"]


def test_too_few_sweep_points_exits_with_two(tmp_path):
    scenario = _write(
        tmp_path / "short.json",
        {"noise": {"kind": "gaussian", "model": "local", "sigma": 1.0}, "sweep": {"N": [2, 4, 8]}},
    )
    assert run(["sweep", "--scenario", str(scenario), "--out", str(tmp_path / "short")]) == 2


def test_projection_cycle_matches_reported_map():
    scenario = Scenario.model_validate(
        {
            "sites": 2,
            "env": {"model": "common", "dims": [2]},
            "terms": [{"c": 1.0, "paulis": "XX", "env_op": "pauli_x"}],
            "strategy": {"kind": "projection", "r": [0, 0, 1]},
        }
    )
    pulsed = schedule_to_map(build_schedule(scenario, "evolve"))
    reported = build_strategy_map(scenario, "analyze")
    for label in map("".join, itertools.product("IXYZ", repeat=2)):
        op = pauli_string(label)
        assert pulsed.apply_operator(op).allclose(reported.apply_operator(op), atol=1e-12)
    assert pulsed.apply_operator(pauli_string("XX")).max_norm() < 1e-12


def test_analyze_writes_symmetrized_environment_operator(tmp_path):
    scenario = _write(
        tmp_path / "ladder.json",
        {
            "sites": 3,
            "env": {"model": "common", "dims": [2]},
            "terms": [
                {"c": 1.0, "paulis": "ZII", "env_op": "pauli_x"},
                {"c": 2.0, "paulis": "IZI", "env_op": "pauli_x"},
                {"c": 3.0, "paulis": "IIZ", "env_op": "pauli_x"},
            ],
            "strategy": {"kind": "symmetrize"},
        },
    )
    out = tmp_path / "ladder"
    assert run(["analyze", "--scenario", str(scenario), "--out", str(out)]) == 0
    strategy = pd.read_csv(out / "strategy.csv")
    assert strategy.loc[0, "c_bar"] == pytest.approx(2.0)
    A_bar = DenseOperator.from_dict(json.loads((out / "a_bar.json").read_text()))
    assert A_bar.allclose(DenseOperator(A_bar.space, pauli(1).matrix), atol=1e-12)
    manifest = json.loads((out / "manifest.json").read_text())
    assert "a_bar.json" in manifest["outputs"]


def test_analyze_writes_correlated_scheme(tmp_path):
    scenario = _write(
        tmp_path / "pairs.json",
        {
            "sites": 4,
            "env": {"model": "common", "dims": [2]},
            "terms": [{"c": 0.2, "paulis": "ZZII", "env_op": "pauli_x"}],
            "strategy": {"kind": "correlated", "k": 1},
        },
    )
    out = tmp_path / "pairs"
    assert run(["analyze", "--scenario", str(scenario), "--out", str(out)]) == 0
    recipe = json.loads((out / "scheme.json").read_text())
    assert recipe == correlated_scheme(4, 1).to_dict()
    assert [layer["sites"] for layer in recipe["layers"]] == [[0, 1, 2, 3], [1, 3]]
    assert recipe["alpha"] == pytest.approx(0.5)
