"""Input sample generation on [-1, 1]^q and the ordered-halves split.

Sobol points come from scipy's unscrambled generator (Joe-Kuo direction
numbers). The sequence here starts at the point (0.5, ..., 0.5) of the
unit cube, i.e. the generator's leading all-zeros point is skipped, and
the affine map x -> 2x - 1 is applied exactly. Pseudo-random points use
numpy's default_rng (PCG64), seeded, so both sources are reproducible
across runs and platforms.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.stats import qmc

from .errors import PreconditionError

if TYPE_CHECKING:  # pragma: no cover
    from .capacity import Dataset

__all__ = [
    "SampleMatrix",
    "SOBOL_MAX_DIMENSION",
    "sobol_points",
    "pseudo_random_points",
    "ordered_halves",
    "save_samples_csv",
    "load_samples_csv",
]

# Dimension bound of the Joe-Kuo direction-number table used by scipy.
SOBOL_MAX_DIMENSION = 21201

SOURCE_SOBOL = "sobol"
SOURCE_PSEUDO_RANDOM = "pseudo-random"
SOURCE_FILE = "file"


@dataclass(frozen=True)
class SampleMatrix:
    """N x q input samples plus provenance; immutable after construction."""

    points: np.ndarray
    source: str
    seed: int | None = None
    ordered: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2:
            raise PreconditionError(f"points must be N x q, got shape {points.shape}")
        if points.size and (points.min() < -1.0 or points.max() > 1.0):
            raise PreconditionError("sample points must lie in [-1, 1]")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def n_samples(self) -> int:
        return self.points.shape[0]

    @property
    def q(self) -> int:
        return self.points.shape[1]


def sobol_points(q: int, n_samples: int) -> SampleMatrix:
    """First n_samples unscrambled Sobol points, mapped to [-1, 1)^q.

    Deterministic: the same (q, N) always yields the same matrix. The
    first point is the cube center, which maps to the origin.
    """
    if not 1 <= q <= SOBOL_MAX_DIMENSION:
        raise PreconditionError(
            f"Sobol dimension must be in [1, {SOBOL_MAX_DIMENSION}], got {q}"
        )
    if n_samples < 1:
        raise PreconditionError(f"need at least one sample, got {n_samples}")
    engine = qmc.Sobol(d=q, scramble=False)
    engine.fast_forward(1)  # drop the all-zeros point; sequence starts at 0.5
    with warnings.catch_warnings():
        # scipy warns when N is not a power of two; prefix draws are intended.
        warnings.simplefilter("ignore", UserWarning)
        unit = engine.random(n_samples)
    return SampleMatrix(
        points=2.0 * unit - 1.0,
        source=SOURCE_SOBOL,
        seed=None,
        ordered=True,
        meta={"skip_leading_zero_point": True},
    )


def pseudo_random_points(q: int, n_samples: int, seed: int) -> SampleMatrix:
    """i.i.d. uniform points on [-1, 1]^q from a seeded PCG64 generator."""
    if q < 1:
        raise PreconditionError(f"q must be >= 1, got {q}")
    if n_samples < 0:
        raise PreconditionError(f"n_samples must be >= 0, got {n_samples}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1.0, 1.0, size=(n_samples, q))
    return SampleMatrix(points=points, source=SOURCE_PSEUDO_RANDOM, seed=seed, ordered=False)


def ordered_halves(data: "Dataset") -> tuple["Dataset", "Dataset"]:
    """Split a dataset into its first and second halves, order preserved.

    Richardson extrapolation relies on both halves of a low-discrepancy
    sequence being low-discrepancy themselves, so no shuffling happens
    here. Odd N is refused; drop the last row explicitly if needed.
    """
    from .capacity import Dataset

    n = data.n_samples
    if n % 2 != 0:
        raise PreconditionError(
            f"ordered_halves needs an even sample count, got {n}; "
            "drop the last row explicitly first"
        )
    half = n // 2

    def build(rows: slice) -> Dataset:
        return Dataset(
            inputs=data.inputs[rows],
            readouts=data.readouts[rows],
            augmented=data.augmented,
            meta=dict(data.meta),
        )

    return build(slice(0, half)), build(slice(half, n))


def save_samples_csv(samples: SampleMatrix, path: str) -> None:
    """Write samples as CSV with header u1..uq, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"u{j + 1}" for j in range(samples.q)])
        for row in samples.points:
            writer.writerow([f"{x:.17g}" for x in row])


def load_samples_csv(path: str) -> SampleMatrix:
    """Read a sample CSV written by save_samples_csv."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or not all(h.strip().startswith("u") for h in header):
            raise PreconditionError(f"{path}: expected a u1..uq header row")
        rows = [[float(x) for x in row] for row in reader if row]
    q = len(header)
    points = np.array(rows, dtype=np.float64).reshape(len(rows), q)
    return SampleMatrix(points=points, source=SOURCE_FILE, seed=None, ordered=True)
