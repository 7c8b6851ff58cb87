"""Effective dimensionality via the Malinowski indicator function.

After normalizing each readout by its measurement noise, the indicator
IND(kappa) drops while real factors are being absorbed and rises once
only noise eigenvalues remain; its interior minimum estimates how many
independent directions the readouts carry.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .capacity import Dataset
from .errors import PreconditionError

__all__ = [
    "IndicatorCurve",
    "noise_normalize",
    "estimate_noise_std",
    "indicator_function",
]

logger = logging.getLogger(__name__)

# Eigenvalue ordering is checked non-ascending up to this slack; exact
# ties occur in synthetic data.
EIGEN_ORDER_SLACK = 1e-12

# Eigenvalues this far below the largest are eigvalsh round-off (observed
# ~1e-16 relative for exact low-rank data), not a noise floor; genuine
# noise eigenvalues in normalized data sit many orders above.
EIGEN_JUNK_REL = 1e-12


@dataclass(frozen=True)
class IndicatorCurve:
    """IND(kappa) for kappa in [1, K-1], plus the spectrum behind it."""

    kappas: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    argmin: int | None
    n_readouts: int
    n_samples: int

    def to_json_dict(self) -> dict:
        return {
            "K": self.n_readouts,
            "N": self.n_samples,
            "argmin": self.argmin,
            "kappas": self.kappas.tolist(),
            "values": self.values.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    def save_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kappa", "IND"])
            for kappa, value in zip(self.kappas, self.values):
                writer.writerow([int(kappa), f"{value:.17g}"])


def noise_normalize(data: Dataset, noise_std) -> Dataset:
    """Divide each readout column by its noise standard deviation."""
    std = np.broadcast_to(
        np.asarray(noise_std, dtype=np.float64), (data.n_readouts,)
    )
    bad = np.flatnonzero(std <= 0)
    if bad.size:
        raise PreconditionError(
            f"noise_std must be strictly positive; column(s) {bad.tolist()} are not"
        )
    meta = dict(data.meta)
    meta["noise_normalized"] = True
    return Dataset(
        inputs=data.inputs,
        readouts=data.readouts / std,
        augmented=False,
        meta=meta,
    )


def estimate_noise_std(repeated: np.ndarray) -> np.ndarray:
    """Per-column sample standard deviation of repeated constant-input runs."""
    repeated = np.asarray(repeated, dtype=np.float64)
    if repeated.ndim != 2 or repeated.shape[0] < 2:
        raise PreconditionError(
            f"need an (M >= 2, K) matrix of repeated measurements, got shape {repeated.shape}"
        )
    std = np.std(repeated, axis=0, ddof=1)
    zero = np.flatnonzero(std == 0)
    if zero.size:
        logger.warning(
            "column(s) %s show zero variance over %d repeats",
            zero.tolist(),
            repeated.shape[0],
        )
    return std


def indicator_function(data: Dataset) -> IndicatorCurve:
    """IND(kappa) = (K-kappa)^-2 * sqrt(sum_{j>kappa} lambda_j / (N(K-kappa))).

    Eigenvalues are those of Z^T Z in descending order. The argmin is the
    smallest kappa in [1, K-2] that is strictly below its left neighbor
    (vacuous at kappa=1) and not above its right neighbor; absent when the
    curve keeps falling. The non-strict right comparison keeps noiseless
    rank-r data (IND identically zero from kappa=r on) resolving to r.
    The position is invariant to any fixed positive rescaling of Z.
    """
    z = data.readouts
    n, k = z.shape
    if k < 2:
        raise PreconditionError(f"need at least 2 readouts, got {k}")
    if not np.any(z):
        raise PreconditionError("all-zero readouts have no indicator curve")
    if n <= k:
        logger.warning("N = %d <= K = %d: noise eigenvalues are unreliable", n, k)
    eigenvalues = np.linalg.eigvalsh(z.T @ z)[::-1]
    # Round-off pushes trailing eigenvalues slightly negative and leaves
    # junk of order eps * lambda_max in exactly low-rank data; either would
    # fake a nonzero noise floor below genuinely rank-deficient spectra.
    eigenvalues[eigenvalues < EIGEN_JUNK_REL * eigenvalues[0]] = 0.0
    tail = np.cumsum(eigenvalues[::-1])[::-1]  # tail[j] = sum of lambda_{j+1..K}
    kappas = np.arange(1, k)
    remaining = k - kappas
    values = np.sqrt(tail[kappas] / (n * remaining)) / remaining**2
    argmin: int | None = None
    for i in range(len(values) - 1):
        kappa = int(kappas[i])
        if kappa > k - 2:
            break
        left_ok = i == 0 or values[i] < values[i - 1]
        if left_ok and values[i] <= values[i + 1]:
            argmin = kappa
            break
    return IndicatorCurve(
        kappas=kappas,
        values=values,
        eigenvalues=eigenvalues,
        argmin=argmin,
        n_readouts=k,
        n_samples=n,
    )
