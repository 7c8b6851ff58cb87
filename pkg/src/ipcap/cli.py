"""Command-line interface.

Subcommands: estimate, simulate, validate, factor-dim, benchmark, plot.
Every command is deterministic given its inputs and --seed. Exit codes:
0 success, 2 unparseable input (bad flags, files, config), 3 violated
precondition, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys

import numpy as np

from .basis import enumerate_basis
from .capacity import augment_constant, load_dataset_csv, save_dataset_csv
from .errors import NumericalError, PreconditionError
from .estimators import Algorithm, CapacityReport, EstimatorConfig, estimate
from .factor_analysis import estimate_noise_std, indicator_function, noise_normalize
from .photonic import (
    DetectorConfig,
    EncoderConfig,
    FiberConfig,
    SCHEME_ALTERNATING_2,
    SCHEME_SEQUENTIAL_5X4,
    nonlinear_phase,
    simulate_dataset,
)
from .plots import KIND_CAPACITY_BARPLOT, KIND_CAPACITY_MATRIX, render_report
from .sampling import (
    SOURCE_PSEUDO_RANDOM,
    SOURCE_SOBOL,
    pseudo_random_points,
    sobol_points,
)
from .synthetic import validation_run
from .tasks import (
    PhotonicSystem,
    kfold_accuracy,
    load_digits_task,
    run_benchmark,
    two_spirals,
)

__all__ = ["main"]

logger = logging.getLogger(__name__)

EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_NUMERICAL = 4

JOBS_ENV_VAR = "IPCAP_JOBS"


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _out_path(args, name: str) -> str:
    if os.path.isabs(name):
        return name
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _write_json(obj: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _load_matrix_csv(path: str) -> np.ndarray:
    # Plain numeric CSV; a non-numeric first line is treated as a header.
    with open(path) as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(v) for v in first.strip().split(",") if v]
    except ValueError:
        skip = 1
    return np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)


# ---------------------------------------------------------------- scenario


_SCENARIO_DEFAULTS = {
    "pulse": {
        "tau_fwhm_ps": "4.2",
        "center_wavelength_nm": "1550.0",
        "n_points": "16384",
        "t_window_ps": "256.0",
        "repetition_rate_hz": "1e7",
    },
    "encoder": {
        "span_nm": "2.5",
        "n_bins": "20",
        "scheme": SCHEME_ALTERNATING_2,
        "instrument_filter_nm": "0.08",
        "phase_noise_std_rad": "9.42477796076938e-3",
    },
    "fiber": {
        "length_m": "40.0",
        "beta2_ps2_km": "-23.0",
        "gamma_per_w_km": "1.2",
        "alpha_per_km": "0.0",
        "max_phase_per_step_rad": "0.05",
    },
    "detector": {
        "span_nm": "3.5",
        "resolution_nm": "0.05",
        "n_readouts": "71",
    },
    "run": {
        "power_dbm": "4.6",
    },
}


def _parse_scheme(text: str):
    text = text.strip()
    if text in (SCHEME_ALTERNATING_2, SCHEME_SEQUENTIAL_5X4):
        return text
    return tuple(int(v) for v in text.split(","))


def load_scenario(path: str) -> dict:
    """Parse a scenario config file; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)
    merged = {s: dict(kv) for s, kv in _SCENARIO_DEFAULTS.items()}
    for section in parser.sections():
        if section not in merged:
            raise ValueError(f"{path}: unknown section [{section}]")
        for key, value in parser[section].items():
            if key not in merged[section]:
                raise ValueError(f"{path}: unknown key {key!r} in [{section}]")
            merged[section][key] = value
    pulse = merged["pulse"]
    enc_kv = merged["encoder"]
    fib = merged["fiber"]
    det = merged["detector"]
    filt = enc_kv["instrument_filter_nm"].strip().lower()
    encoder = EncoderConfig(
        span_nm=float(enc_kv["span_nm"]),
        n_bins=int(enc_kv["n_bins"]),
        scheme=_parse_scheme(enc_kv["scheme"]),
        instrument_filter_nm=None if filt in ("none", "off") else float(filt),
        phase_noise_std_rad=float(enc_kv["phase_noise_std_rad"]),
    )
    return {
        "encoder": encoder,
        "fiber": FiberConfig(
            length_m=float(fib["length_m"]),
            beta2_ps2_km=float(fib["beta2_ps2_km"]),
            gamma_per_w_km=float(fib["gamma_per_w_km"]),
            alpha_per_km=float(fib["alpha_per_km"]),
            max_phase_per_step_rad=float(fib["max_phase_per_step_rad"]),
        ),
        "detector": DetectorConfig(
            span_nm=float(det["span_nm"]),
            resolution_nm=float(det["resolution_nm"]),
            n_readouts=int(det["n_readouts"]),
        ),
        "power_dbm": float(merged["run"]["power_dbm"]),
        "tau_fwhm_ps": float(pulse["tau_fwhm_ps"]),
        "center_wavelength_nm": float(pulse["center_wavelength_nm"]),
        "n_points": int(pulse["n_points"]),
        "t_window_ps": float(pulse["t_window_ps"]),
        "repetition_rate_hz": float(pulse["repetition_rate_hz"]),
    }


def _scheme_inputs(encoder: EncoderConfig) -> int:
    if encoder.scheme == SCHEME_ALTERNATING_2:
        return 2
    if encoder.scheme == SCHEME_SEQUENTIAL_5X4:
        return 5
    return int(max(encoder.scheme)) + 1


# ---------------------------------------------------------------- commands


def cmd_estimate(args) -> int:
    data = load_dataset_csv(args.inputs, args.readouts)
    if args.q is not None and args.q != data.q:
        raise PreconditionError(f"--q {args.q} but inputs file has q = {data.q}")
    if args.augment and not data.augmented:
        data = augment_constant(data)
    basis = enumerate_basis(data.q, args.d_max)
    cfg = EstimatorConfig(
        algorithm=Algorithm(args.algorithm), eigen_tolerance=args.eigen_tolerance
    )
    report = estimate(data, basis, cfg)
    out = _out_path(args, args.out)
    _write_json(report.to_json_dict(), out)
    print(f"Total capacity {report.total_corrected:.4f} / {report.max_capacity:g}")
    print(f"report: {out}")
    return 0


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    q = _scheme_inputs(scenario["encoder"])
    if args.samples == SOURCE_SOBOL:
        samples = sobol_points(q, args.n)
    else:
        samples = pseudo_random_points(q, args.n, seed=args.seed)
    data = simulate_dataset(
        samples,
        scenario["encoder"],
        scenario["fiber"],
        scenario["detector"],
        scenario["power_dbm"],
        tau_fwhm_ps=scenario["tau_fwhm_ps"],
        n_points=scenario["n_points"],
        t_window_ps=scenario["t_window_ps"],
        center_wavelength_nm=scenario["center_wavelength_nm"],
        repetition_rate_hz=scenario["repetition_rate_hz"],
        seed=args.seed,
        jobs=args.jobs,
    )
    inputs_path = _out_path(args, f"{args.out_prefix}_inputs.csv")
    readouts_path = _out_path(args, f"{args.out_prefix}_readouts.csv")
    save_dataset_csv(data, inputs_path, readouts_path)
    print(
        f"simulated {data.n_samples} samples, {data.n_readouts} readouts, "
        f"phi_NL = {data.meta['phi_nl_rad']:.4f} rad"
    )
    print(f"inputs: {inputs_path}")
    print(f"readouts: {readouts_path}")
    return 0


def cmd_validate(args) -> int:
    cfg = EstimatorConfig(algorithm=Algorithm(args.algorithm))
    stats = validation_run(
        q=args.q,
        d_max=args.d_max,
        n_sel=args.n_sel,
        n_readouts=args.readouts,
        n_samples=args.n,
        source=args.source,
        repeats=args.repeats,
        cfg=cfg,
        seed=args.seed,
        jobs=args.jobs,
    )
    out = _out_path(args, args.out)
    _write_json(stats.to_json_dict(), out)
    print(
        f"mean error raw {stats.mean_raw_err:+.3e}, "
        f"corrected {stats.mean_corr_err:+.3e} over {stats.repeats} repeats"
    )
    print(f"stats: {out}")
    return 0


def cmd_factor_dim(args) -> int:
    data = load_dataset_csv(args.inputs, args.readouts)
    if args.repeated is not None:
        std = estimate_noise_std(_load_matrix_csv(args.repeated))
        data = noise_normalize(data, std)
    elif args.noise_std is not None:
        data = noise_normalize(data, args.noise_std)
    else:
        logger.info("no noise scale given; treating readouts as already normalized")
    curve = indicator_function(data)
    out = _out_path(args, args.out)
    _write_json(curve.to_json_dict(), out)
    if args.csv is not None:
        curve.save_csv(_out_path(args, args.csv))
    if curve.argmin is None:
        print("indicator argmin: none (no interior minimum)")
    else:
        print(f"indicator argmin: {curve.argmin}")
    print(f"curve: {out}")
    return 0


def cmd_benchmark(args) -> int:
    if args.task == "two-spirals":
        task = two_spirals(args.n, noise_std=args.noise_std, seed=args.seed)
    else:
        if not args.images or not args.labels:
            raise PreconditionError(
                "the digits task needs --images and --labels IDX files"
            )
        task = load_digits_task(
            args.images,
            args.labels,
            n_components=args.components,
            max_samples=args.max_samples,
            seed=args.seed,
        )
    if args.system == "photonic":
        if not args.scenario:
            raise PreconditionError("--system photonic needs --scenario")
        scenario = load_scenario(args.scenario)
        expected_q = _scheme_inputs(scenario["encoder"])
        if expected_q != task.q:
            raise PreconditionError(
                f"scenario encodes {expected_q} inputs but task has {task.q} features"
            )
        system = PhotonicSystem(
            encoder=scenario["encoder"],
            fiber=scenario["fiber"],
            detector=scenario["detector"],
            power_dbm=scenario["power_dbm"],
            seed=args.seed,
            n_points=scenario["n_points"],
            t_window_ps=scenario["t_window_ps"],
            jobs=args.jobs,
        )
        result = run_benchmark(
            task, system, ridge=args.ridge, k=args.folds, seed=args.seed
        )
    else:
        result = kfold_accuracy(task, k=args.folds, ridge=args.ridge, seed=args.seed)
    out = _out_path(args, args.out)
    payload = {"task": task.name, "n_samples": task.n_samples, **result.to_json_dict()}
    _write_json(payload, out)
    print(
        f"{result.model} on {task.name}: accuracy "
        f"{result.mean:.4f} +/- {result.std_error:.4f} ({args.folds}-fold)"
    )
    print(f"result: {out}")
    return 0


def cmd_plot(args) -> int:
    with open(args.report) as fh:
        report = CapacityReport.from_json_dict(json.load(fh))
    svg = render_report(report, args.kind)
    out = _out_path(args, args.out)
    with open(out, "w") as fh:
        fh.write(svg)
    print(f"plot: {out}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipcap",
        description="Information processing capacity estimation toolkit.",
        epilog=(
            "exit codes: 0 ok, 2 unparseable input, 3 precondition violated, "
            "4 numerical failure. dBm conversion: P[W] = 10^(dBm/10)/1000."
        ),
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="-v for progress, -vv for debug output",
    )
    parser.add_argument(
        "--out-dir", default=".", help="directory for output files (default: .)"
    )
    parser.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    parser.add_argument(
        "--jobs",
        type=int,
        default=int(os.environ.get(JOBS_ENV_VAR, "1")),
        help=f"worker processes (default ${JOBS_ENV_VAR} or 1)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="capacity report from a dataset CSV pair")
    p.add_argument("inputs", help="inputs CSV (u1..uq columns)")
    p.add_argument("readouts", help="readouts CSV (x1..xK columns)")
    p.add_argument("--q", type=int, default=None, help="expected input dimension")
    p.add_argument("--d-max", type=int, required=True, help="total degree cap")
    p.add_argument(
        "--algorithm",
        choices=[a.value for a in Algorithm],
        default=Algorithm.THRESHOLD_FIRST.value,
    )
    p.add_argument("--eigen-tolerance", type=float, default=1e-10)
    p.add_argument(
        "--augment",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="append the constant readout column (default on)",
    )
    p.add_argument("--out", default="report.json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="photonic simulation to a dataset CSV pair")
    p.add_argument("scenario", help="scenario config file")
    p.add_argument(
        "--samples",
        choices=[SOURCE_SOBOL, SOURCE_PSEUDO_RANDOM],
        default=SOURCE_SOBOL,
    )
    p.add_argument("--n", type=int, required=True, help="number of input samples")
    p.add_argument("--out-prefix", default="dataset")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="estimator error statistics on synthetic systems")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--d-max", type=int, required=True)
    p.add_argument("--n-sel", type=int, required=True, help="selected basis functions")
    p.add_argument("--readouts", type=int, required=True, help="readout count K")
    p.add_argument("--n", type=int, required=True, help="samples per repeat")
    p.add_argument(
        "--source",
        choices=[SOURCE_SOBOL, SOURCE_PSEUDO_RANDOM],
        default=SOURCE_SOBOL,
    )
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument(
        "--algorithm",
        choices=[a.value for a in Algorithm],
        default=Algorithm.THRESHOLD_FIRST.value,
    )
    p.add_argument("--out", default="validation.json")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("factor-dim", help="effective dimensionality of readouts")
    p.add_argument("inputs", help="inputs CSV")
    p.add_argument("readouts", help="readouts CSV")
    p.add_argument(
        "--noise-std",
        type=float,
        default=None,
        help="uniform noise std used to normalize readouts",
    )
    p.add_argument(
        "--repeated",
        default=None,
        help="CSV of repeated constant-input measurements to estimate noise",
    )
    p.add_argument("--out", default="indicator.json")
    p.add_argument("--csv", default=None, help="also write a (kappa, IND) CSV")
    p.set_defaults(func=cmd_factor_dim)

    p = sub.add_parser("benchmark", help="cross-validated task accuracy")
    p.add_argument("--task", choices=["two-spirals", "digits"], required=True)
    p.add_argument("--n", type=int, default=2000, help="two-spirals sample count")
    p.add_argument("--noise-std", type=float, default=0.0, help="two-spirals jitter")
    p.add_argument("--images", default=None, help="digits IDX image file")
    p.add_argument("--labels", default=None, help="digits IDX label file")
    p.add_argument("--components", type=int, default=5, help="digits PCA components")
    p.add_argument("--max-samples", type=int, default=5000)
    p.add_argument("--system", choices=["linear", "photonic"], default="linear")
    p.add_argument("--scenario", default=None, help="scenario for --system photonic")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--out", default="benchmark.json")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("plot", help="render a capacity report to SVG")
    p.add_argument("report", help="capacity report JSON")
    p.add_argument(
        "--kind",
        choices=[KIND_CAPACITY_MATRIX, KIND_CAPACITY_BARPLOT],
        required=True,
    )
    p.add_argument("--out", default="plot.svg")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError, KeyError, configparser.Error, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
