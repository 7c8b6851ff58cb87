"""Gram statistics, raw capacities, optimal weights, noise injection.

The capacity of a target y against readouts X is R^T G^+ R / E[y^2] with
G the empirical second-moment matrix and R the empirical correlation
vector. Everything here goes through a whitener L with L^T G L = I on the
retained subspace, so the capacity is plainly a squared projection length
and stays in [0, 1] up to round-off.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, MultiIndex, eval_basis_matrix
from .errors import PreconditionError

__all__ = [
    "Dataset",
    "GramStats",
    "CapacityValue",
    "CapacityStatus",
    "DEFAULT_EIGEN_TOLERANCE",
    "gram",
    "whiten",
    "correlation",
    "raw_capacity",
    "capacity_sweep",
    "optimal_weights",
    "augment_constant",
    "inject_additive_noise",
    "save_dataset_csv",
    "load_dataset_csv",
]

logger = logging.getLogger(__name__)

# Relative eigenvalue cutoff for the pseudo-inverse; spectra of measured
# readouts are near-degenerate, so exact rank is not meaningful.
DEFAULT_EIGEN_TOLERANCE = 1e-10

# Round-off slack tolerated outside [0, 1] before clamping is considered
# a numerical problem rather than noise.
CLAMP_SLACK = 1e-9


@dataclass(frozen=True)
class Dataset:
    """Paired input samples and readout responses with provenance."""

    inputs: np.ndarray
    readouts: np.ndarray
    augmented: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        inputs = np.asarray(self.inputs, dtype=np.float64)
        readouts = np.asarray(self.readouts, dtype=np.float64)
        if inputs.ndim != 2 or readouts.ndim != 2:
            raise PreconditionError("inputs and readouts must both be 2-D")
        if inputs.shape[0] != readouts.shape[0]:
            raise PreconditionError(
                f"row mismatch: {inputs.shape[0]} inputs vs {readouts.shape[0]} readouts"
            )
        if self.augmented and readouts.shape[1] >= 1:
            if not np.all(readouts[:, -1] == 1.0):
                raise PreconditionError(
                    "augmented dataset must end with an all-ones readout column"
                )
        for arr in (inputs, readouts):
            arr.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "readouts", readouts)

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def q(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_readouts(self) -> int:
        return self.readouts.shape[1]


@dataclass(frozen=True)
class GramStats:
    """Factorized second-moment matrix of one dataset's readouts."""

    gram: np.ndarray
    eigenvalues: np.ndarray  # descending
    rank: int
    whitener: np.ndarray  # K x rank
    eigen_tolerance: float


class CapacityStatus(str, enum.Enum):
    KEPT = "kept"
    ZEROED_BY_THRESHOLD = "zeroed_by_threshold"
    ZEROED_NEGATIVE = "zeroed_negative"


@dataclass(frozen=True)
class CapacityValue:
    """Raw and (optionally) corrected capacity of one basis function."""

    basis_index: MultiIndex
    raw: float
    corrected: float | None = None
    threshold: float | None = None
    status: CapacityStatus = CapacityStatus.KEPT

    def to_json_dict(self) -> dict:
        return {
            "index": list(self.basis_index.degrees),
            "raw": self.raw,
            "corrected": self.corrected,
            "threshold": self.threshold,
            "status": self.status.value,
        }


def gram(data: Dataset, eigen_tolerance: float = DEFAULT_EIGEN_TOLERANCE) -> GramStats:
    """Factorize G = X^T X / N into a rank-revealing whitener.

    The spectrum comes from the singular values of X / sqrt(N) rather
    than from an eigendecomposition of the formed G: the factorization is
    identical in exact arithmetic but loses half the digits less, which
    matters for the saturation property at N = K. Eigenvalues below
    eigen_tolerance * lambda_max are discarded.
    """
    if eigen_tolerance <= 0:
        raise PreconditionError(f"eigen_tolerance must be > 0, got {eigen_tolerance}")
    x = data.readouts
    n = data.n_samples
    if n < 1:
        raise PreconditionError("gram needs at least one sample")
    g = x.T @ x / n
    _, singulars, vt = np.linalg.svd(x / np.sqrt(n), full_matrices=False)
    eigenvalues = singulars**2
    if eigenvalues.size == 0 or eigenvalues[0] == 0.0:
        logger.warning("all-zero readout matrix: Gram has rank 0")
        rank = 0
    else:
        rank = int(np.count_nonzero(eigenvalues > eigen_tolerance * eigenvalues[0]))
    whitener = vt[:rank].T / singulars[:rank]
    return GramStats(
        gram=g,
        eigenvalues=eigenvalues,
        rank=rank,
        whitener=whitener,
        eigen_tolerance=eigen_tolerance,
    )


def whiten(stats: GramStats, readouts: np.ndarray) -> np.ndarray:
    """Map readout rows into the whitened coordinates (N x rank)."""
    return readouts @ stats.whitener


def correlation(data: Dataset, y_values: np.ndarray) -> np.ndarray:
    """Empirical correlation R_i = <X_i y> between readouts and a target."""
    y = np.asarray(y_values, dtype=np.float64)
    if y.shape != (data.n_samples,):
        raise PreconditionError(
            f"target has shape {y.shape}, expected ({data.n_samples},)"
        )
    return data.readouts.T @ y / data.n_samples


def _clamp_unit(values: np.ndarray, context: str) -> np.ndarray:
    below = values < 0.0
    above = values > 1.0
    n_below = int(np.count_nonzero(below))
    n_above = int(np.count_nonzero(above))
    if n_below or n_above:
        worst = float(np.max(np.maximum(-values, values - 1.0)))
        level = logging.WARNING if worst > CLAMP_SLACK else logging.DEBUG
        logger.log(
            level,
            "%s: clamped %d values below 0 and %d above 1 (worst excursion %.3g)",
            context,
            n_below,
            n_above,
            worst,
        )
    return np.clip(values, 0.0, 1.0)


def raw_capacity(stats: GramStats, r: np.ndarray, y_norm_sq: float = 1.0) -> float:
    """Capacity R^T G^+ R / E[y^2] via the whitener; clamped to [0, 1].

    y_norm_sq is the analytic second moment of the target, 1 for the
    normalized Legendre basis; it is never estimated from data.
    """
    if y_norm_sq <= 0:
        raise PreconditionError(f"y_norm_sq must be > 0, got {y_norm_sq}")
    if stats.rank == 0:
        logger.warning("rank-0 Gram: capacity is 0 by convention")
        return 0.0
    projected = stats.whitener.T @ np.asarray(r, dtype=np.float64)
    value = float(projected @ projected) / y_norm_sq
    return float(_clamp_unit(np.array([value]), "raw_capacity")[0])


def raw_capacities_bulk(stats: GramStats, data: Dataset, targets: np.ndarray) -> np.ndarray:
    """Raw capacities of many unit-normalized targets (columns of targets)."""
    if stats.rank == 0:
        logger.warning("rank-0 Gram: capacities are 0 by convention")
        return np.zeros(targets.shape[1])
    x_white = whiten(stats, data.readouts)
    m = x_white.T @ targets / data.n_samples
    return _clamp_unit(np.einsum("ij,ij->j", m, m), "capacity_sweep")


def capacity_sweep(
    data: Dataset,
    basis: BasisSet,
    eigen_tolerance: float = DEFAULT_EIGEN_TOLERANCE,
) -> list[CapacityValue]:
    """Raw capacity of every basis function; Gram factorized once."""
    if basis.q != data.q:
        raise PreconditionError(
            f"basis has q={basis.q} but dataset inputs have q={data.q}"
        )
    stats = gram(data, eigen_tolerance)
    y = eval_basis_matrix(basis, data.inputs)
    raws = raw_capacities_bulk(stats, data, y)
    return [
        CapacityValue(basis_index=idx, raw=float(c))
        for idx, c in zip(basis.indices, raws)
    ]


def optimal_weights(stats: GramStats, r: np.ndarray) -> np.ndarray:
    """Least-squares readout weights W = G^+ R (Moore-Penrose)."""
    r = np.asarray(r, dtype=np.float64)
    return stats.whitener @ (stats.whitener.T @ r)


def augment_constant(data: Dataset) -> Dataset:
    """Append the all-ones readout column; raises if already augmented."""
    if data.augmented:
        raise PreconditionError("dataset is already augmented with a constant readout")
    ones = np.ones((data.n_samples, 1))
    meta = dict(data.meta)
    meta["augmented_constant"] = True
    return Dataset(
        inputs=data.inputs,
        readouts=np.concatenate([data.readouts, ones], axis=1),
        augmented=True,
        meta=meta,
    )


def inject_additive_noise(data: Dataset, noise_std, seed: int) -> Dataset:
    """Add independent zero-mean Gaussian noise per readout column.

    noise_std is a scalar or a K-vector of standard deviations. The
    constant augmentation column, when present, stays noiseless. Columns
    with zero std are returned bit-identical.
    """
    k = data.n_readouts
    std = np.broadcast_to(np.asarray(noise_std, dtype=np.float64), (k,)).copy()
    if np.any(std < 0):
        raise PreconditionError("noise_std must be non-negative")
    if data.augmented:
        std[-1] = 0.0
    active = np.flatnonzero(std > 0)
    readouts = np.array(data.readouts)
    if active.size:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal((data.n_samples, active.size))
        readouts[:, active] += noise * std[active]
    meta = dict(data.meta)
    meta["noise_std"] = std.tolist()
    meta["noise_seed"] = seed
    return Dataset(
        inputs=data.inputs, readouts=readouts, augmented=data.augmented, meta=meta
    )


def save_dataset_csv(data: Dataset, inputs_path: str, readouts_path: str) -> None:
    """Write the dataset as an (inputs.csv, readouts.csv) pair."""
    for path, arr, prefix in (
        (inputs_path, data.inputs, "u"),
        (readouts_path, data.readouts, "x"),
    ):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"{prefix}{j + 1}" for j in range(arr.shape[1])])
            for row in arr:
                writer.writerow([f"{v:.17g}" for v in row])


def load_dataset_csv(inputs_path: str, readouts_path: str) -> Dataset:
    """Read a dataset pair written by save_dataset_csv.

    The augmented flag is inferred from the last readout column being
    exactly all ones.
    """

    def read(path: str) -> np.ndarray:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise PreconditionError(f"{path}: empty file")
            rows = [[float(v) for v in row] for row in reader if row]
        return np.array(rows, dtype=np.float64).reshape(len(rows), len(header))

    inputs = read(inputs_path)
    readouts = read(readouts_path)
    if inputs.shape[0] != readouts.shape[0]:
        raise PreconditionError(
            f"row mismatch between {inputs_path} and {readouts_path}"
        )
    augmented = readouts.shape[1] > 0 and bool(np.all(readouts[:, -1] == 1.0))
    return Dataset(inputs=inputs, readouts=readouts, augmented=augmented)
