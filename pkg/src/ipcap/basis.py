"""Orthonormal Legendre product basis on the hypercube [-1, 1]^q.

Polynomials are normalized against the uniform probability measure on
[-1, 1], i.e. (1/2) * integral of P_i * P_j equals delta_ij, which makes
every basis function satisfy E[y^2] = 1 exactly. Fourth moments E[y^4],
needed for the zero-capacity thresholds, are computed in exact rational
arithmetic from Wigner-3j symbols so they are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import PreconditionError

__all__ = [
    "MultiIndex",
    "BasisSet",
    "legendre_eval",
    "legendre_table",
    "enumerate_basis",
    "eval_basis_function",
    "eval_basis_matrix",
    "eval_index_matrix",
    "wigner_3j_000",
    "fourth_moment",
    "fourth_moment_product",
]

# Values this far outside [-1, 1] are treated as round-off and clipped.
DOMAIN_SLACK = 1e-12

# enumerate_basis refuses to build anything larger than this by default.
DEFAULT_MAX_BASIS_SIZE = 10_000_000


@dataclass(frozen=True)
class MultiIndex:
    """Degrees (l_1, ..., l_q) of one Legendre product basis function."""

    degrees: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.degrees:
            raise PreconditionError("MultiIndex needs at least one degree")
        if any(l < 0 for l in self.degrees):
            raise PreconditionError(f"negative degree in {self.degrees}")

    @property
    def q(self) -> int:
        return len(self.degrees)

    @property
    def total_degree(self) -> int:
        return sum(self.degrees)

    def __iter__(self) -> Iterator[int]:
        return iter(self.degrees)

    def __len__(self) -> int:
        return len(self.degrees)


@dataclass(frozen=True)
class BasisSet:
    """All multi-indices with total degree <= d_max, in graded lex order."""

    q: int
    d_max: int
    indices: tuple[MultiIndex, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.indices)

    def __getitem__(self, i: int) -> MultiIndex:
        return self.indices[i]

    @cached_property
    def index_array(self) -> np.ndarray:
        """Degrees as an (L, q) integer array; read-only."""
        arr = np.array([idx.degrees for idx in self.indices], dtype=np.int64)
        arr.setflags(write=False)
        return arr

    def to_json_dict(self) -> dict:
        return {
            "q": self.q,
            "d_max": self.d_max,
            "indices": [list(idx.degrees) for idx in self.indices],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "BasisSet":
        indices = tuple(MultiIndex(tuple(d)) for d in obj["indices"])
        return cls(q=int(obj["q"]), d_max=int(obj["d_max"]), indices=indices)


def legendre_table(d_max: int, x: np.ndarray) -> np.ndarray:
    """Evaluate all orthonormal Legendre polynomials up to degree d_max.

    Returns an array of shape x.shape + (d_max + 1,). Uses the classical
    three-term recurrence, then scales degree l by sqrt(2l + 1); storing
    expanded coefficients would lose precision at high degree.
    """
    x = np.asarray(x, dtype=np.float64)
    bad = np.abs(x) > 1.0 + DOMAIN_SLACK
    if bad.any():
        worst = float(np.max(np.abs(x)))
        raise PreconditionError(f"input outside [-1, 1]: max |x| = {worst!r}")
    x = np.clip(x, -1.0, 1.0)

    out = np.empty(x.shape + (d_max + 1,), dtype=np.float64)
    out[..., 0] = 1.0
    if d_max >= 1:
        out[..., 1] = x
    for l in range(1, d_max):
        out[..., l + 1] = ((2 * l + 1) * x * out[..., l] - l * out[..., l - 1]) / (l + 1)
    out *= np.sqrt(2.0 * np.arange(d_max + 1) + 1.0)
    return out


def legendre_eval(l: int, x) -> np.ndarray | float:
    """Orthonormal Legendre polynomial of degree l at x (scalar or array)."""
    if l < 0:
        raise PreconditionError(f"degree must be non-negative, got {l}")
    table = legendre_table(l, np.asarray(x, dtype=np.float64))
    value = table[..., l]
    return float(value) if value.ndim == 0 else value


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # All tuples of `parts` non-negative integers summing to `total`,
    # in lexicographic order.
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_basis(q: int, d_max: int, max_count: int = DEFAULT_MAX_BASIS_SIZE) -> BasisSet:
    """All multi-indices with total degree <= d_max, graded lex order.

    The count is binomial(q + d_max, d_max); enumeration is refused above
    max_count because downstream matrices scale linearly with it.
    """
    if q < 1:
        raise PreconditionError(f"q must be >= 1, got {q}")
    if d_max < 0:
        raise PreconditionError(f"d_max must be >= 0, got {d_max}")
    count = math.comb(q + d_max, d_max)
    if count > max_count:
        raise PreconditionError(
            f"basis would contain {count} functions, above the limit of {max_count}"
        )
    indices: list[MultiIndex] = []
    for degree in range(d_max + 1):
        indices.extend(MultiIndex(t) for t in _compositions(degree, q))
    return BasisSet(q=q, d_max=d_max, indices=tuple(indices))


def eval_basis_function(idx: MultiIndex, u: Sequence[float]) -> float:
    """Product of orthonormal Legendre polynomials at one input point."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (len(idx),):
        raise PreconditionError(
            f"input has shape {u.shape}, multi-index expects ({len(idx)},)"
        )
    value = 1.0
    for l, x in zip(idx.degrees, u):
        value *= legendre_eval(l, x)
    return float(value)


def eval_basis_matrix(basis: BasisSet, points: np.ndarray) -> np.ndarray:
    """Evaluate every basis function at every sample point.

    points has shape (N, q); the result has shape (N, len(basis)).
    Memory is N * len(basis) doubles; callers stream in chunks when that
    is too large.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != basis.q:
        raise PreconditionError(
            f"points have shape {points.shape}, basis expects (N, {basis.q})"
        )
    degrees = basis.index_array
    out = np.ones((points.shape[0], len(basis)), dtype=np.float64)
    for j in range(basis.q):
        table = legendre_table(basis.d_max, points[:, j])
        out *= table[:, degrees[:, j]]
    return out


def eval_index_matrix(indices: Sequence[MultiIndex], points: np.ndarray) -> np.ndarray:
    """Evaluate an arbitrary collection of multi-indices at sample points.

    Like eval_basis_matrix but for a subset that need not form a complete
    degree-bounded basis. All indices must share the same q.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise PreconditionError(f"points must be 2-d, got shape {points.shape}")
    if not indices:
        return np.ones((points.shape[0], 0), dtype=np.float64)
    q = len(indices[0])
    if any(len(idx) != q for idx in indices):
        raise PreconditionError("all multi-indices must have the same length")
    if points.shape[1] != q:
        raise PreconditionError(
            f"points have shape {points.shape}, indices expect (N, {q})"
        )
    degrees = np.array([idx.degrees for idx in indices], dtype=np.int64)
    d_max = int(degrees.max())
    out = np.ones((points.shape[0], len(indices)), dtype=np.float64)
    for j in range(q):
        table = legendre_table(d_max, points[:, j])
        out *= table[:, degrees[:, j]]
    return out


@lru_cache(maxsize=None)
def _wigner_3j_000_sq(l: int, L: int) -> tuple[int, Fraction]:
    # Sign and exact square of the 3j symbol (l l 2L; 0 0 0).
    #
    # For (j1 j2 j3; 0 0 0) with even J = j1 + j2 + j3 and g = J/2 the
    # closed form is
    #   (-1)^g * sqrt((J-2j1)! (J-2j2)! (J-2j3)! / (J+1)!)
    #          * g! / ((g-j1)! (g-j2)! (g-j3)!)
    # Here j1 = j2 = l and j3 = 2L, so J = 2l + 2L and g = l + L.
    g = l + L
    sign = -1 if g % 2 else 1
    ratio = Fraction(
        math.factorial(2 * L) ** 2 * math.factorial(2 * l - 2 * L),
        math.factorial(2 * l + 2 * L + 1),
    )
    integer_part = Fraction(
        math.factorial(g), math.factorial(L) ** 2 * math.factorial(l - L)
    )
    return sign, ratio * integer_part**2


def wigner_3j_000(l: int, L: int) -> float:
    """The Wigner 3j symbol (l l 2L; 0 0 0), exact up to the final sqrt."""
    if not 0 <= L <= l:
        raise PreconditionError(f"need 0 <= L <= l, got l={l}, L={L}")
    sign, square = _wigner_3j_000_sq(l, L)
    return sign * math.sqrt(square)


@lru_cache(maxsize=None)
def _fourth_moment_exact(l: int) -> Fraction:
    # E[P_l^4] = (2l+1)^2 * sum_L (4L+1) * (l l 2L; 0 0 0)^4, which is
    # rational because the 3j symbol enters at an even power.
    total = Fraction(0)
    for L in range(l + 1):
        _, square = _wigner_3j_000_sq(l, L)
        total += (4 * L + 1) * square**2
    return Fraction((2 * l + 1) ** 2) * total


def fourth_moment(l: int) -> float:
    """E[P_l^4] under the uniform measure, for the orthonormal P_l."""
    if l < 0:
        raise PreconditionError(f"degree must be non-negative, got {l}")
    return float(_fourth_moment_exact(l))


def fourth_moment_product(idx: MultiIndex) -> float:
    """E[y^4] for a product basis function: independence factorizes it."""
    exact = Fraction(1)
    for l in idx.degrees:
        exact *= _fourth_moment_exact(l)
    return float(exact)
