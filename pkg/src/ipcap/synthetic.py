"""Synthetic input-to-readout systems with analytically known capacities.

Readouts are random linear combinations of a selected subset of basis
functions, so every true capacity is the squared projection of a basis
direction onto the row space of the mixing matrix. Running the estimator
against these systems measures its bias and fluctuation directly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, MultiIndex, enumerate_basis, eval_index_matrix
from .capacity import Dataset, augment_constant
from .errors import NumericalError, PreconditionError
from .estimators import EstimatorConfig, estimate
from .sampling import (
    SOURCE_PSEUDO_RANDOM,
    SOURCE_SOBOL,
    SampleMatrix,
    pseudo_random_points,
    sobol_points,
)

__all__ = [
    "SyntheticSystem",
    "ValidationStats",
    "make_synthetic",
    "true_capacities",
    "true_capacity_vector",
    "evaluate_readouts",
    "validation_run",
]

logger = logging.getLogger(__name__)

# Standard-normal mixing is rank deficient only on a measure-zero set;
# a handful of retries covers pathological seeds.
MAX_MIXING_ATTEMPTS = 8

RANK_TOLERANCE = 1e-12

HISTOGRAM_LO = -0.005
HISTOGRAM_HI = 0.02
HISTOGRAM_WIDTH = 2e-4


@dataclass(frozen=True)
class SyntheticSystem:
    """K readouts mixed from n_sel selected basis functions."""

    basis: BasisSet
    selected: tuple[MultiIndex, ...]
    coefficients: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self) -> None:
        if len(set(self.selected)) != len(self.selected):
            raise PreconditionError("selected indices must be distinct")
        members = set(self.basis.indices)
        if any(idx not in members for idx in self.selected):
            raise PreconditionError("selected indices must belong to the basis")
        coeff = np.asarray(self.coefficients, dtype=np.float64)
        if coeff.ndim != 2 or coeff.shape[1] != len(self.selected):
            raise PreconditionError(
                f"coefficients must be (K, {len(self.selected)}), got {coeff.shape}"
            )
        coeff = coeff.copy()
        coeff.setflags(write=False)
        object.__setattr__(self, "coefficients", coeff)

    @property
    def q(self) -> int:
        return self.basis.q

    @property
    def n_selected(self) -> int:
        return len(self.selected)

    @property
    def n_readouts(self) -> int:
        return self.coefficients.shape[0]


def make_synthetic(
    q: int, d_max: int, n_sel: int, n_readouts: int, seed: int
) -> SyntheticSystem:
    """Uniform random basis subset plus standard-normal mixing.

    With K <= n_sel the mixing matrix has full row rank and the system
    spans a K-dimensional function space; with K > n_sel the readouts are
    redundant and the rank is n_sel (low-rank systems for dimensionality
    studies).
    """
    basis = enumerate_basis(q, d_max)
    if n_sel > len(basis):
        raise PreconditionError(
            f"cannot select {n_sel} functions from a basis of size {len(basis)}"
        )
    if n_sel < 1 or n_readouts < 1:
        raise PreconditionError(
            f"need n_sel >= 1 and K >= 1, got n_sel={n_sel}, K={n_readouts}"
        )
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(len(basis), size=n_sel, replace=False))
    selected = tuple(basis[int(p)] for p in positions)
    for attempt in range(MAX_MIXING_ATTEMPTS):
        coefficients = rng.standard_normal((n_readouts, n_sel))
        singulars = np.linalg.svd(coefficients, compute_uv=False)
        if singulars[-1] > singulars[0] * RANK_TOLERANCE:
            if attempt:
                logger.info("redrew mixing matrix %d time(s) for full rank", attempt)
            return SyntheticSystem(
                basis=basis, selected=selected, coefficients=coefficients, seed=seed
            )
    raise NumericalError(
        f"mixing matrix rank deficient after {MAX_MIXING_ATTEMPTS} draws (seed={seed})"
    )


def _row_space_capacities(coefficients: np.ndarray) -> np.ndarray:
    # Squared norm of each coordinate direction's projection onto the row
    # space, via the right singular vectors.
    _, singulars, vt = np.linalg.svd(coefficients, full_matrices=False)
    if singulars.size == 0:
        return np.zeros(coefficients.shape[1])
    rank = int(np.sum(singulars > singulars[0] * RANK_TOLERANCE))
    v = vt[:rank]
    return np.einsum("ri,ri->i", v, v)


def true_capacity_vector(
    system: SyntheticSystem, include_constant: bool = False
) -> np.ndarray:
    """True capacity of every basis function, in basis enumeration order.

    With include_constant=True the readout set is treated as extended by
    the all-ones column (constant basis function), matching an augmented
    dataset; the capacity sum then equals the extended mixing rank.
    """
    coefficients = system.coefficients
    selected = list(system.selected)
    if include_constant:
        zero_idx = MultiIndex((0,) * system.q)
        k = system.n_readouts
        if zero_idx in selected:
            row = np.zeros((1, len(selected)))
            row[0, selected.index(zero_idx)] = 1.0
            coefficients = np.vstack([coefficients, row])
        else:
            coefficients = np.block(
                [
                    [coefficients, np.zeros((k, 1))],
                    [np.zeros((1, len(selected))), np.ones((1, 1))],
                ]
            )
            selected = selected + [zero_idx]
    caps = _row_space_capacities(coefficients)
    position = {idx: i for i, idx in enumerate(system.basis.indices)}
    out = np.zeros(len(system.basis))
    for idx, cap in zip(selected, caps):
        out[position[idx]] = cap
    return out


def true_capacities(
    system: SyntheticSystem,
) -> list[tuple[MultiIndex, float]]:
    """(multi-index, true capacity) for every basis function."""
    vector = true_capacity_vector(system)
    return [(idx, float(c)) for idx, c in zip(system.basis.indices, vector)]


def evaluate_readouts(system: SyntheticSystem, samples: SampleMatrix) -> Dataset:
    """X(n) = coefficients @ selected-basis evaluations at u(n)."""
    if samples.q != system.q:
        raise PreconditionError(
            f"samples have q={samples.q}, system expects q={system.q}"
        )
    phi = eval_index_matrix(system.selected, samples.points)
    readouts = phi @ system.coefficients.T
    meta = {
        "sampling_source": samples.source,
        "ordered": samples.ordered,
        "sample_seed": samples.seed,
        "system_seed": system.seed,
    }
    return Dataset(
        inputs=samples.points, readouts=readouts, augmented=False, meta=meta
    )


@dataclass(frozen=True)
class ValidationStats:
    """Error statistics of the estimator over repeated synthetic systems."""

    repeats: int
    histogram_lo: float
    histogram_hi: float
    histogram_width: float
    counts_raw: np.ndarray = field(repr=False)
    counts_corrected: np.ndarray = field(repr=False)
    mean_raw_err: float
    mean_corr_err: float
    std_raw_err: float
    std_corr_err: float
    true_total: float
    totals_raw_err: np.ndarray = field(repr=False)
    totals_corr_err: np.ndarray = field(repr=False)
    max_abs_corr_err: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict:
        totals_raw = self.totals_raw_err
        totals_corr = self.totals_corr_err
        ddof = 1 if self.repeats > 1 else 0
        return {
            "repeats": self.repeats,
            "histogram": {
                "lo": self.histogram_lo,
                "hi": self.histogram_hi,
                "width": self.histogram_width,
                "counts_raw": self.counts_raw.tolist(),
                "counts_corrected": self.counts_corrected.tolist(),
            },
            "mean_raw_err": self.mean_raw_err,
            "mean_corr_err": self.mean_corr_err,
            "std_raw_err": self.std_raw_err,
            "std_corr_err": self.std_corr_err,
            "total_err_stats": {
                "true_total": self.true_total,
                "raw": {
                    "mean": float(np.mean(totals_raw)),
                    "std": float(np.std(totals_raw, ddof=ddof)),
                },
                "corrected": {
                    "mean": float(np.mean(totals_corr)),
                    "std": float(np.std(totals_corr, ddof=ddof)),
                },
            },
        }


def _draw_samples(source: str, q: int, n_samples: int, seed: int):
    if source == SOURCE_SOBOL:
        # The unscrambled sequence is deterministic; repeats share points
        # and vary only through the system draw.
        return sobol_points(q, n_samples)
    if source == SOURCE_PSEUDO_RANDOM:
        return pseudo_random_points(q, n_samples, seed=seed)
    raise PreconditionError(f"unknown sampling source {source!r}")


def _validation_repeat(args) -> tuple:
    # One independent repeat; module-level so worker processes can run it.
    (q, d_max, n_sel, n_readouts, n_samples, source, system_seed, sample_seed, cfg) = args
    system = make_synthetic(q, d_max, n_sel, n_readouts, seed=system_seed)
    samples = _draw_samples(source, q, n_samples, sample_seed)
    data = augment_constant(evaluate_readouts(system, samples))
    report = estimate(data, system.basis, cfg)
    truth = true_capacity_vector(system, include_constant=True)
    true_total = float(np.sum(truth))
    raw_err = report.raw_array() - truth
    corr_err = report.corrected_array() - truth
    return (
        raw_err,
        corr_err,
        report.total_raw - true_total,
        report.total_corrected - true_total,
        float(np.max(np.abs(corr_err))),
        true_total,
    )


def validation_run(
    q: int,
    d_max: int,
    n_sel: int,
    n_readouts: int,
    n_samples: int,
    source: str,
    repeats: int,
    cfg: EstimatorConfig | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> ValidationStats:
    """Estimate fresh synthetic systems `repeats` times and pool the errors.

    Each repeat draws a new system, evaluates it on fresh samples,
    augments with the constant readout, runs the configured estimator and
    records per-basis-function errors (estimate minus truth) plus the
    total-capacity errors. The histogram covers the per-function errors.
    Repeats are independent; jobs > 1 spreads them over processes without
    changing any result (seeds are preassigned, aggregation keeps repeat
    order).
    """
    if repeats < 1:
        raise PreconditionError(f"repeats must be >= 1, got {repeats}")
    cfg = cfg or EstimatorConfig()
    rng = np.random.default_rng(seed)
    system_seeds = rng.integers(2**62, size=repeats)
    sample_seeds = rng.integers(2**62, size=repeats)
    work = [
        (
            q,
            d_max,
            n_sel,
            n_readouts,
            n_samples,
            source,
            int(system_seeds[r]),
            int(sample_seeds[r]),
            cfg,
        )
        for r in range(repeats)
    ]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_validation_repeat, work))
    else:
        results = [_validation_repeat(args) for args in work]
    raw_errors = [res[0] for res in results]
    corr_errors = [res[1] for res in results]
    totals_raw_err = np.array([res[2] for res in results])
    totals_corr_err = np.array([res[3] for res in results])
    max_abs_corr = np.array([res[4] for res in results])
    true_total = results[-1][5]
    raw_all = np.concatenate(raw_errors)
    corr_all = np.concatenate(corr_errors)
    n_bins = int(round((HISTOGRAM_HI - HISTOGRAM_LO) / HISTOGRAM_WIDTH))
    edges = np.linspace(HISTOGRAM_LO, HISTOGRAM_HI, n_bins + 1)
    counts_raw, _ = np.histogram(raw_all, bins=edges)
    counts_corr, _ = np.histogram(corr_all, bins=edges)
    ddof = 1 if raw_all.size > 1 else 0
    return ValidationStats(
        repeats=repeats,
        histogram_lo=HISTOGRAM_LO,
        histogram_hi=HISTOGRAM_HI,
        histogram_width=HISTOGRAM_WIDTH,
        counts_raw=counts_raw,
        counts_corrected=counts_corr,
        mean_raw_err=float(np.mean(raw_all)),
        mean_corr_err=float(np.mean(corr_all)),
        std_raw_err=float(np.std(raw_all, ddof=ddof)),
        std_corr_err=float(np.std(corr_all, ddof=ddof)),
        true_total=true_total,
        totals_raw_err=totals_raw_err,
        totals_corr_err=totals_corr_err,
        max_abs_corr_err=max_abs_corr,
    )
