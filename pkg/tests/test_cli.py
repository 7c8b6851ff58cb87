"""End-to-end CLI behavior: outputs, exit codes, determinism."""

import json
from pathlib import Path

import numpy as np
import pytest

from ipcap.capacity import save_dataset_csv
from ipcap.cli import load_scenario, main
from ipcap.sampling import pseudo_random_points, sobol_points
from ipcap.synthetic import evaluate_readouts, make_synthetic

SCENARIO_FAST = """\
[fiber]
length_m = 5.0  # short fiber keeps the split-step cheap

[run]
power_dbm = -10.0
"""


@pytest.fixture(scope="module")
def dataset_csvs(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    system = make_synthetic(2, 4, 3, 4, seed=0)
    data = evaluate_readouts(system, sobol_points(2, 128))
    inputs = root / "inputs.csv"
    readouts = root / "readouts.csv"
    save_dataset_csv(data, str(inputs), str(readouts))
    return str(inputs), str(readouts)


@pytest.fixture(scope="module")
def rank3_csvs(tmp_path_factory):
    root = tmp_path_factory.mktemp("rank3")
    system = make_synthetic(2, 4, 3, 8, seed=5)
    data = evaluate_readouts(system, pseudo_random_points(2, 2048, seed=9))
    inputs = root / "inputs.csv"
    readouts = root / "readouts.csv"
    save_dataset_csv(data, str(inputs), str(readouts))
    return str(inputs), str(readouts)


def test_estimate_and_plot_round_trip(dataset_csvs, tmp_path, capsys):
    inputs, readouts = dataset_csvs
    code = main(
        ["--out-dir", str(tmp_path), "estimate", inputs, readouts, "--d-max", "4"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "Total capacity" in out
    report_path = tmp_path / "report.json"
    assert report_path.exists()
    blob = json.loads(report_path.read_text())
    assert blob["K"] == 5  # 4 readouts + constant augmentation
    assert blob["N"] == 128
    assert blob["max_capacity"] == 5.0
    assert 0.0 < blob["total_corrected"] <= 5.0

    for kind, name in (("capacity-matrix", "m.svg"), ("capacity-barplot", "b.svg")):
        code = main(
            ["--out-dir", str(tmp_path), "plot", str(report_path), "--kind", kind,
             "--out", name]
        )
        assert code == 0
        svg = (tmp_path / name).read_text()
        assert svg.startswith("<svg ") and svg.endswith("</svg>\n")


def test_estimate_is_byte_stable(dataset_csvs, tmp_path):
    inputs, readouts = dataset_csvs
    for sub in ("a", "b"):
        assert (
            main(
                ["--out-dir", str(tmp_path / sub), "estimate", inputs, readouts,
                 "--d-max", "4"]
            )
            == 0
        )
    assert (tmp_path / "a" / "report.json").read_bytes() == (
        tmp_path / "b" / "report.json"
    ).read_bytes()


def test_estimate_without_augmentation(dataset_csvs, tmp_path):
    inputs, readouts = dataset_csvs
    code = main(
        ["--out-dir", str(tmp_path), "estimate", inputs, readouts, "--d-max", "4",
         "--no-augment"]
    )
    assert code == 0
    blob = json.loads((tmp_path / "report.json").read_text())
    assert blob["K"] == 4
    assert blob["max_capacity"] == 4.0


def test_estimate_q_mismatch_is_precondition(dataset_csvs, tmp_path, capsys):
    inputs, readouts = dataset_csvs
    code = main(
        ["--out-dir", str(tmp_path), "estimate", inputs, readouts, "--d-max", "4",
         "--q", "3"]
    )
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_estimate_missing_file_is_parse_error(tmp_path, capsys):
    code = main(
        ["--out-dir", str(tmp_path), "estimate", "missing.csv", "also-missing.csv",
         "--d-max", "4"]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_bad_flags_exit_2(dataset_csvs):
    inputs, readouts = dataset_csvs
    with pytest.raises(SystemExit) as exc:
        main(["estimate", inputs, readouts])  # --d-max missing
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["plot", "report.json", "--kind", "histogram"])
    assert exc.value.code == 2


def test_simulate_writes_dataset(tmp_path, capsys):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text(SCENARIO_FAST)
    code = main(["--out-dir", str(tmp_path), "simulate", str(scenario), "--n", "2"])
    assert code == 0
    out = capsys.readouterr().out
    assert "simulated 2 samples, 71 readouts" in out
    assert (tmp_path / "dataset_inputs.csv").exists()
    assert (tmp_path / "dataset_readouts.csv").exists()


def test_simulate_is_byte_stable(tmp_path):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text(SCENARIO_FAST)
    for sub in ("a", "b"):
        assert (
            main(["--out-dir", str(tmp_path / sub), "simulate", str(scenario),
                  "--n", "2"])
            == 0
        )
    for name in ("dataset_inputs.csv", "dataset_readouts.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()


def test_scenario_defaults_and_comments(tmp_path):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text(SCENARIO_FAST)
    loaded = load_scenario(str(scenario))
    assert loaded["fiber"].length_m == 5.0
    assert loaded["power_dbm"] == -10.0
    # untouched sections keep their defaults
    assert loaded["encoder"].n_bins == 20
    assert loaded["detector"].n_readouts == 71
    assert loaded["tau_fwhm_ps"] == 4.2


def test_scenario_unknown_key_exits_2(tmp_path, capsys):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text("[fiber]\nlength_km = 5.0\n")
    code = main(["--out-dir", str(tmp_path), "simulate", str(scenario), "--n", "1"])
    assert code == 2
    assert "unknown key" in capsys.readouterr().err


def test_runaway_gain_exits_4(tmp_path, capsys):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text(
        "[fiber]\nlength_m = 40.0\ngamma_per_w_km = 0.0\nalpha_per_km = -1e6\n"
    )
    with np.errstate(over="ignore", invalid="ignore"):
        code = main(
            ["--out-dir", str(tmp_path), "simulate", str(scenario), "--n", "1"]
        )
    assert code == 4
    assert "non-finite" in capsys.readouterr().err


def test_detector_finer_than_grid_exits_3(tmp_path, capsys):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text(
        "[fiber]\nlength_m = 5.0\n\n"
        "[detector]\nresolution_nm = 0.02\nn_readouts = 176\n\n"
        "[run]\npower_dbm = -10.0\n"
    )
    code = main(["--out-dir", str(tmp_path), "simulate", str(scenario), "--n", "1"])
    assert code == 3
    assert "resolution" in capsys.readouterr().err


def test_factor_dim_round_trip(rank3_csvs, tmp_path, capsys):
    inputs, readouts = rank3_csvs
    code = main(
        ["--out-dir", str(tmp_path), "factor-dim", inputs, readouts,
         "--csv", "curve.csv"]
    )
    assert code == 0
    assert "indicator argmin: 3" in capsys.readouterr().out
    blob = json.loads((tmp_path / "indicator.json").read_text())
    assert blob["argmin"] == 3
    assert blob["K"] == 8
    curve = (tmp_path / "curve.csv").read_text().splitlines()
    assert curve[0] == "kappa,IND"
    assert len(curve) == 1 + 7


def test_factor_dim_with_repeated_measurements(rank3_csvs, tmp_path, capsys):
    inputs, readouts = rank3_csvs
    rng = np.random.default_rng(1)
    repeated = tmp_path / "repeated.csv"
    np.savetxt(repeated, rng.normal(0.0, 0.5, (16, 8)), delimiter=",")
    code = main(
        ["--out-dir", str(tmp_path), "factor-dim", inputs, readouts,
         "--repeated", str(repeated)]
    )
    assert code == 0
    assert "indicator argmin" in capsys.readouterr().out


def test_validate_smoke(tmp_path, capsys):
    code = main(
        ["--out-dir", str(tmp_path), "validate", "--q", "1", "--d-max", "3",
         "--n-sel", "2", "--readouts", "2", "--n", "64", "--repeats", "2"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "mean error raw" in out
    blob = json.loads((tmp_path / "validation.json").read_text())
    assert blob["repeats"] == 2
    assert "total_err_stats" in blob


def test_benchmark_linear_baseline(tmp_path, capsys):
    code = main(
        ["--out-dir", str(tmp_path), "benchmark", "--task", "two-spirals",
         "--n", "40", "--noise-std", "0.1", "--folds", "4"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "linear-baseline on two-spirals" in out
    blob = json.loads((tmp_path / "benchmark.json").read_text())
    assert blob["task"] == "two-spirals"
    assert blob["n_samples"] == 40
    assert len(blob["fold_accuracies"]) == 4


def test_benchmark_photonic_smoke(tmp_path, capsys):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text(SCENARIO_FAST)
    code = main(
        ["--out-dir", str(tmp_path), "benchmark", "--task", "two-spirals",
         "--n", "8", "--noise-std", "0.1", "--folds", "2", "--system", "photonic",
         "--scenario", str(scenario)]
    )
    assert code == 0
    assert "photonic-elm on two-spirals" in capsys.readouterr().out


def test_benchmark_photonic_needs_scenario(tmp_path, capsys):
    code = main(
        ["--out-dir", str(tmp_path), "benchmark", "--task", "two-spirals",
         "--n", "8", "--system", "photonic"]
    )
    assert code == 3
    assert "--scenario" in capsys.readouterr().err


def test_benchmark_scenario_input_count_mismatch(tmp_path, capsys):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text(
        "[encoder]\nscheme = sequential-5x4\n\n[fiber]\nlength_m = 5.0\n\n"
        "[run]\npower_dbm = -10.0\n"
    )
    code = main(
        ["--out-dir", str(tmp_path), "benchmark", "--task", "two-spirals",
         "--n", "8", "--system", "photonic", "--scenario", str(scenario)]
    )
    assert code == 3
    assert "2 features" in capsys.readouterr().err


def test_benchmark_digits_needs_idx_files(tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "benchmark", "--task", "digits"])
    assert code == 3
    assert "IDX" in capsys.readouterr().err


def test_plot_rejects_invalid_json(tmp_path, capsys):
    bad = tmp_path / "report.json"
    bad.write_text("{not json")
    code = main(
        ["--out-dir", str(tmp_path), "plot", str(bad), "--kind", "capacity-matrix"]
    )
    assert code == 2


def test_out_dir_is_created(dataset_csvs, tmp_path):
    inputs, readouts = dataset_csvs
    nested = tmp_path / "deep" / "nested"
    code = main(
        ["--out-dir", str(nested), "estimate", inputs, readouts, "--d-max", "4"]
    )
    assert code == 0
    assert (nested / "report.json").exists()
