"""Bias-corrected capacity estimation.

Raw capacities carry a systematic positive bias of order 1/N. Two
procedures remove it: threshold-first zeroes everything below a
basis-dependent detection threshold and Richardson-extrapolates the
rest; Richardson-first extrapolates everything and zeroes values below
the reflected minimum -B. Threshold-first is the default; the
Richardson-first sum fluctuates more.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, MultiIndex, eval_basis_matrix, fourth_moment_product
from .capacity import (
    DEFAULT_EIGEN_TOLERANCE,
    CapacityStatus,
    CapacityValue,
    Dataset,
    GramStats,
    gram,
    raw_capacities_bulk,
    whiten,
)
from .errors import PreconditionError
from .sampling import SOURCE_SOBOL, ordered_halves

__all__ = [
    "Algorithm",
    "EstimatorConfig",
    "CapacityReport",
    "s_n_statistic",
    "threshold_for",
    "richardson",
    "sweep_extrapolated",
    "estimate_threshold_first",
    "estimate_richardson_first",
    "estimate",
]

logger = logging.getLogger(__name__)


class Algorithm(str, enum.Enum):
    THRESHOLD_FIRST = "threshold-first"
    RICHARDSON_FIRST = "richardson-first"


@dataclass(frozen=True)
class EstimatorConfig:
    algorithm: Algorithm = Algorithm.THRESHOLD_FIRST
    eigen_tolerance: float = DEFAULT_EIGEN_TOLERANCE
    record_halves: bool = False

    def __post_init__(self) -> None:
        if self.eigen_tolerance <= 0:
            raise PreconditionError(
                f"eigen_tolerance must be > 0, got {self.eigen_tolerance}"
            )


@dataclass(frozen=True)
class CapacityReport:
    """Per-basis capacities plus the statistics behind them."""

    basis: BasisSet
    values: tuple[CapacityValue, ...]
    total_raw: float
    total_corrected: float
    max_capacity: float
    s_n: float
    n_samples: int
    n_readouts: int
    algorithm: Algorithm
    sampling_source: str
    eigen_tolerance: float
    reliable: bool
    halves: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def corrected_array(self) -> np.ndarray:
        return np.array(
            [0.0 if v.corrected is None else v.corrected for v in self.values]
        )

    def raw_array(self) -> np.ndarray:
        return np.array([v.raw for v in self.values])

    def to_json_dict(self) -> dict:
        # Field order is part of the report contract; golden tests compare
        # serialized bytes.
        out = {
            "basis": self.basis.to_json_dict(),
            "N": self.n_samples,
            "K": self.n_readouts,
            "S_N": self.s_n,
            "algorithm": self.algorithm.value,
            "sampling_source": self.sampling_source,
            "eigen_tolerance": self.eigen_tolerance,
            "reliable": self.reliable,
            "values": [v.to_json_dict() for v in self.values],
            "total_raw": self.total_raw,
            "total_corrected": self.total_corrected,
            "max_capacity": self.max_capacity,
        }
        if self.halves is not None:
            out["halves"] = [self.halves[0].tolist(), self.halves[1].tolist()]
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CapacityReport":
        basis = BasisSet.from_json_dict(obj["basis"])
        values = tuple(
            CapacityValue(
                basis_index=MultiIndex(tuple(v["index"])),
                raw=float(v["raw"]),
                corrected=None if v["corrected"] is None else float(v["corrected"]),
                threshold=None if v["threshold"] is None else float(v["threshold"]),
                status=CapacityStatus(v["status"]),
            )
            for v in obj["values"]
        )
        halves = obj.get("halves")
        return cls(
            basis=basis,
            values=values,
            total_raw=float(obj["total_raw"]),
            total_corrected=float(obj["total_corrected"]),
            max_capacity=float(obj["max_capacity"]),
            s_n=float(obj["S_N"]),
            n_samples=int(obj["N"]),
            n_readouts=int(obj["K"]),
            algorithm=Algorithm(obj["algorithm"]),
            sampling_source=str(obj["sampling_source"]),
            eigen_tolerance=float(obj["eigen_tolerance"]),
            reliable=bool(obj["reliable"]),
            halves=None if halves is None else (np.array(halves[0]), np.array(halves[1])),
        )


def s_n_statistic(stats: GramStats, data: Dataset) -> float:
    """S_N = E_N[(sum_i X~_i^2)^2] over the whitened readouts."""
    if stats.rank == 0:
        return 0.0
    x_white = whiten(stats, data.readouts)
    square_norms = np.einsum("ij,ij->i", x_white, x_white)
    return float(np.mean(square_norms**2))


def threshold_for(idx: MultiIndex, s_n: float, n_samples: int) -> float:
    """Detection threshold (1/N) * sqrt(S_N * E[y^4]) for one basis function.

    A zero-capacity target's raw estimate stays below this bound in
    expectation, so anything smaller is indistinguishable from zero.
    """
    if n_samples < 1:
        raise PreconditionError(f"n_samples must be >= 1, got {n_samples}")
    return float(np.sqrt(s_n * fourth_moment_product(idx)) / n_samples)


def richardson(c_full: float, c_half_mean: float) -> float:
    """Extrapolate the 1/N bias away; the result may be negative."""
    return 2.0 * c_full - c_half_mean


def _check_estimation_inputs(data: Dataset, basis: BasisSet) -> None:
    if basis.q != data.q:
        raise PreconditionError(
            f"basis has q={basis.q} but dataset inputs have q={data.q}"
        )
    if data.n_samples % 2 != 0:
        raise PreconditionError(
            f"estimation needs an even sample count for the halves split, got {data.n_samples}"
        )
    source = data.meta.get("sampling_source")
    if source == SOURCE_SOBOL and not data.meta.get("ordered", False):
        raise PreconditionError(
            "Sobol-sampled data must preserve sequence order (ordered=true); "
            "shuffled halves lose the low-discrepancy property"
        )


def sweep_extrapolated(
    data: Dataset,
    basis: BasisSet,
    eigen_tolerance: float = DEFAULT_EIGEN_TOLERANCE,
) -> tuple[GramStats, np.ndarray, np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Raw and Richardson-extrapolated capacities for every basis function.

    Returns (full-sample GramStats, raw, extrapolated, (half1, half2)).
    Each half recomputes its own Gram and correlations from scratch; no
    thresholding or zeroing is applied here.
    """
    _check_estimation_inputs(data, basis)
    stats = gram(data, eigen_tolerance)
    targets = eval_basis_matrix(basis, data.inputs)
    raw = raw_capacities_bulk(stats, data, targets)
    first, second = ordered_halves(data)
    half = data.n_samples // 2
    raw_1 = raw_capacities_bulk(gram(first, eigen_tolerance), first, targets[:half])
    raw_2 = raw_capacities_bulk(gram(second, eigen_tolerance), second, targets[half:])
    extrapolated = 2.0 * raw - 0.5 * (raw_1 + raw_2)
    return stats, raw, extrapolated, (raw_1, raw_2)


def _build_report(
    data: Dataset,
    basis: BasisSet,
    cfg: EstimatorConfig,
    values: list[CapacityValue],
    s_n: float,
    halves: tuple[np.ndarray, np.ndarray],
) -> CapacityReport:
    total_raw = float(sum(v.raw for v in values))
    total_corrected = float(sum(v.corrected for v in values if v.corrected is not None))
    reliable = data.n_samples // 2 > data.n_readouts
    if not reliable:
        logger.warning(
            "N/2 = %d <= K = %d: half-sample capacities saturate, report flagged unreliable",
            data.n_samples // 2,
            data.n_readouts,
        )
    return CapacityReport(
        basis=basis,
        values=tuple(values),
        total_raw=total_raw,
        total_corrected=total_corrected,
        max_capacity=float(data.n_readouts),
        s_n=s_n,
        n_samples=data.n_samples,
        n_readouts=data.n_readouts,
        algorithm=cfg.algorithm,
        sampling_source=str(data.meta.get("sampling_source", "unknown")),
        eigen_tolerance=cfg.eigen_tolerance,
        reliable=reliable,
        halves=halves if cfg.record_halves else None,
    )


def estimate_threshold_first(
    data: Dataset, basis: BasisSet, cfg: EstimatorConfig | None = None
) -> CapacityReport:
    """Basis-dependent thresholding, then Richardson on the survivors."""
    cfg = cfg or EstimatorConfig(algorithm=Algorithm.THRESHOLD_FIRST)
    if cfg.algorithm != Algorithm.THRESHOLD_FIRST:
        cfg = EstimatorConfig(
            algorithm=Algorithm.THRESHOLD_FIRST,
            eigen_tolerance=cfg.eigen_tolerance,
            record_halves=cfg.record_halves,
        )
    stats, raw, extrapolated, halves = sweep_extrapolated(
        data, basis, cfg.eigen_tolerance
    )
    s_n = s_n_statistic(stats, data)
    n = data.n_samples
    values: list[CapacityValue] = []
    for idx, c_raw, c_ext in zip(basis.indices, raw, extrapolated):
        thr = threshold_for(idx, s_n, n)
        if c_raw <= thr:
            status, corrected = CapacityStatus.ZEROED_BY_THRESHOLD, 0.0
        elif c_ext < 0.0:
            status, corrected = CapacityStatus.ZEROED_NEGATIVE, 0.0
        else:
            status, corrected = CapacityStatus.KEPT, min(float(c_ext), 1.0)
        values.append(
            CapacityValue(
                basis_index=idx,
                raw=float(c_raw),
                corrected=corrected,
                threshold=thr,
                status=status,
            )
        )
    return _build_report(data, basis, cfg, values, s_n, halves)


def estimate_richardson_first(
    data: Dataset, basis: BasisSet, cfg: EstimatorConfig | None = None
) -> CapacityReport:
    """Richardson everywhere, then zero values below the reflected minimum.

    B = min over extrapolated values; everything below -B is treated as
    statistical fluctuation around zero. Survivors in (-B, 0) cannot occur
    when B is the minimum, but are clamped to 0 defensively.
    """
    cfg = cfg or EstimatorConfig(algorithm=Algorithm.RICHARDSON_FIRST)
    if cfg.algorithm != Algorithm.RICHARDSON_FIRST:
        cfg = EstimatorConfig(
            algorithm=Algorithm.RICHARDSON_FIRST,
            eigen_tolerance=cfg.eigen_tolerance,
            record_halves=cfg.record_halves,
        )
    stats, raw, extrapolated, halves = sweep_extrapolated(
        data, basis, cfg.eigen_tolerance
    )
    s_n = s_n_statistic(stats, data)
    cutoff = -float(np.min(extrapolated)) if len(extrapolated) else 0.0
    values: list[CapacityValue] = []
    for idx, c_raw, c_ext in zip(basis.indices, raw, extrapolated):
        if c_ext < cutoff:
            status, corrected = CapacityStatus.ZEROED_BY_THRESHOLD, 0.0
        elif c_ext < 0.0:
            status, corrected = CapacityStatus.ZEROED_NEGATIVE, 0.0
        else:
            status, corrected = CapacityStatus.KEPT, min(float(c_ext), 1.0)
        values.append(
            CapacityValue(
                basis_index=idx,
                raw=float(c_raw),
                corrected=corrected,
                threshold=cutoff,
                status=status,
            )
        )
    return _build_report(data, basis, cfg, values, s_n, halves)


def estimate(
    data: Dataset, basis: BasisSet, cfg: EstimatorConfig | None = None
) -> CapacityReport:
    """Run the configured estimation algorithm (threshold-first default)."""
    cfg = cfg or EstimatorConfig()
    if cfg.algorithm == Algorithm.THRESHOLD_FIRST:
        return estimate_threshold_first(data, basis, cfg)
    return estimate_richardson_first(data, basis, cfg)
