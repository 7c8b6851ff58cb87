"""Classification benchmarks for the trained-linear-readout pipeline.

Two Spirals probes a 2-d nonlinear decision boundary; the digit task
probes 5-d inputs after PCA reduction. Either runs through the photonic
simulator or straight into the linear readout (the baseline), scored by
seeded k-fold cross-validation.
"""

from __future__ import annotations

import csv
import gzip
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .photonic import (
    DetectorConfig,
    EncoderConfig,
    FiberConfig,
    simulate_dataset,
)
from .sampling import SOURCE_FILE, SampleMatrix

__all__ = [
    "TaskDataset",
    "CVResult",
    "PcaTransform",
    "PhotonicSystem",
    "MODEL_PHOTONIC_ELM",
    "MODEL_LINEAR_BASELINE",
    "two_spirals",
    "pca_reduce",
    "train_linear_readout",
    "kfold_accuracy",
    "run_benchmark",
    "read_idx",
    "load_digits_task",
    "save_task_csv",
    "load_task_csv",
]

logger = logging.getLogger(__name__)

MODEL_PHOTONIC_ELM = "photonic-elm"
MODEL_LINEAR_BASELINE = "linear-baseline"

SPIRAL_THETA_START = np.pi / 2.0
SPIRAL_THETA_END = 3.5 * np.pi

RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class TaskDataset:
    """Features in [-1, 1]^q with one class label per row."""

    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    name: str

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2:
            raise PreconditionError(f"features must be 2-d, got {features.shape}")
        if labels.shape != (features.shape[0],):
            raise PreconditionError(
                f"labels shape {labels.shape} does not match {features.shape[0]} rows"
            )
        if features.size and np.max(np.abs(features)) > 1.0 + RANGE_SLACK:
            raise PreconditionError("features must be normalized into [-1, 1]")
        features = features.copy()
        features.setflags(write=False)
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def q(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class CVResult:
    fold_accuracies: tuple[float, ...]
    mean: float
    std_error: float
    model: str

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "fold_accuracies": list(self.fold_accuracies),
            "mean": self.mean,
            "std_error": self.std_error,
        }


def two_spirals(n: int, noise_std: float = 0.0, seed: int = 0) -> TaskDataset:
    """Two interleaving spirals, n/2 points each, labels -1 and +1.

    r grows linearly with the angle over theta in [pi/2, 3.5 pi]; the
    second spiral is the first rotated by pi. Gaussian jitter is added to
    the coordinates before rescaling everything into [-1, 1]^2.
    """
    if n < 2 or n % 2:
        raise PreconditionError(f"n must be even and >= 2, got {n}")
    half = n // 2
    theta = np.linspace(SPIRAL_THETA_START, SPIRAL_THETA_END, half)
    radius = theta / SPIRAL_THETA_END
    x = radius * np.cos(theta)
    y = radius * np.sin(theta)
    features = np.concatenate(
        [np.stack([x, y], axis=1), np.stack([-x, -y], axis=1)]
    )
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        features = features + rng.normal(0.0, noise_std, features.shape)
    features /= np.max(np.abs(features))
    labels = np.concatenate([-np.ones(half), np.ones(half)])
    return TaskDataset(features=features, labels=labels, name="two-spirals")


@dataclass(frozen=True)
class PcaTransform:
    """Centering, top-k projection and per-component [-1, 1] scaling."""

    mean: np.ndarray = field(repr=False)
    components: np.ndarray = field(repr=False)  # (k, D), descending variance
    explained_variance: np.ndarray = field(repr=False)
    lo: np.ndarray = field(repr=False)
    hi: np.ndarray = field(repr=False)

    def project(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) @ self.components.T

    def apply(self, features: np.ndarray) -> np.ndarray:
        span = np.where(self.hi > self.lo, self.hi - self.lo, 1.0)
        scaled = 2.0 * (self.project(features) - self.lo) / span - 1.0
        return np.clip(scaled, -1.0, 1.0)


def pca_reduce(features: np.ndarray, k: int) -> tuple[np.ndarray, PcaTransform]:
    """Project onto the top-k principal directions, min-max scaled to [-1, 1]."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise PreconditionError(f"features must be 2-d, got {features.shape}")
    n, d = features.shape
    if not 1 <= k <= min(n, d):
        raise PreconditionError(f"need 1 <= k <= min(N, D) = {min(n, d)}, got {k}")
    mean = features.mean(axis=0)
    _, singulars, vt = np.linalg.svd(features - mean, full_matrices=False)
    components = vt[:k]
    explained = singulars[:k] ** 2 / max(n - 1, 1)
    projected = (features - mean) @ components.T
    lo = projected.min(axis=0)
    hi = projected.max(axis=0)
    transform = PcaTransform(
        mean=mean, components=components, explained_variance=explained, lo=lo, hi=hi
    )
    return transform.apply(features), transform


def train_linear_readout(
    x: np.ndarray, targets: np.ndarray, ridge: float = 0.0
) -> np.ndarray:
    """W = (X^T X + ridge * N * I)^+ X^T Y; plain least squares at ridge = 0."""
    if ridge < 0:
        raise PreconditionError(f"ridge must be >= 0, got {ridge}")
    x = np.asarray(x, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, None]
    if ridge == 0:
        weights, *_ = np.linalg.lstsq(x, targets, rcond=None)
        return weights
    k = x.shape[1]
    normal = x.T @ x + ridge * x.shape[0] * np.eye(k)
    return np.linalg.solve(normal, x.T @ targets)


def _encode_labels(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Targets for regression plus the class list for decoding.

    Two classes give a single +-1 column (sign decoding); more give a
    one-hot matrix (argmax decoding).
    """
    classes = np.unique(labels)
    if classes.size < 2:
        raise PreconditionError("need at least two classes")
    if classes.size == 2:
        targets = np.where(labels == classes[1], 1.0, -1.0)[:, None]
    else:
        targets = (labels[:, None] == classes[None, :]).astype(np.float64)
    return targets, classes


def _decode(scores: np.ndarray, classes: np.ndarray) -> np.ndarray:
    if classes.size == 2:
        return np.where(scores[:, 0] > 0, classes[1], classes[0])
    return classes[np.argmax(scores, axis=1)]


def _with_bias(x: np.ndarray) -> np.ndarray:
    # Constant column, mirroring the constant readout used in capacity runs.
    return np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)


def kfold_accuracy(
    data,
    k: int = 5,
    ridge: float = 0.0,
    seed: int = 0,
    model: str = MODEL_LINEAR_BASELINE,
) -> CVResult:
    """Seeded k-fold cross-validated accuracy of the linear readout.

    data is a TaskDataset or a (features, labels) pair. A constant bias
    column is appended to the features before training.
    """
    if isinstance(data, TaskDataset):
        features, labels = data.features, data.labels
    else:
        features, labels = data
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels)
    n = features.shape[0]
    if k < 2 or k > n:
        raise PreconditionError(f"need 2 <= k <= N = {n}, got k = {k}")
    _, classes = _encode_labels(labels)
    order = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(order, k)
    accuracies = []
    for f, test_idx in enumerate(folds):
        train_mask = np.ones(n, dtype=bool)
        train_mask[test_idx] = False
        train_labels = labels[train_mask]
        absent = [c for c in classes if not np.any(train_labels == c)]
        if absent:
            logger.warning("fold %d: class(es) %s absent from training split", f, absent)
        targets, _ = _encode_labels_against(train_labels, classes)
        weights = train_linear_readout(
            _with_bias(features[train_mask]), targets, ridge
        )
        scores = _with_bias(features[test_idx]) @ weights
        predicted = _decode(scores, classes)
        accuracies.append(float(np.mean(predicted == labels[test_idx])))
    accuracies = np.array(accuracies)
    std_error = float(np.std(accuracies, ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    return CVResult(
        fold_accuracies=tuple(accuracies.tolist()),
        mean=float(np.mean(accuracies)),
        std_error=std_error,
        model=model,
    )


def _encode_labels_against(
    labels: np.ndarray, classes: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    # Same encoding as _encode_labels but against a fixed class list, so
    # folds stay aligned even when a class is missing from one split.
    if classes.size == 2:
        targets = np.where(labels == classes[1], 1.0, -1.0)[:, None]
    else:
        targets = (labels[:, None] == classes[None, :]).astype(np.float64)
    return targets, classes


@dataclass(frozen=True)
class PhotonicSystem:
    """Simulator bundle that maps task features to spectral readouts."""

    encoder: EncoderConfig
    fiber: FiberConfig
    detector: DetectorConfig
    power_dbm: float
    seed: int = 0
    n_points: int = 2**14
    t_window_ps: float = 256.0
    jobs: int = 1

    def transform(self, features: np.ndarray) -> np.ndarray:
        samples = SampleMatrix(
            points=np.asarray(features, dtype=np.float64),
            source=SOURCE_FILE,
            seed=None,
            ordered=False,
            meta={"origin": "task-features"},
        )
        data = simulate_dataset(
            samples,
            self.encoder,
            self.fiber,
            self.detector,
            self.power_dbm,
            n_points=self.n_points,
            t_window_ps=self.t_window_ps,
            seed=self.seed,
            jobs=self.jobs,
        )
        return data.readouts


def run_benchmark(
    task: TaskDataset,
    system: PhotonicSystem | None = None,
    ridge: float = 0.0,
    k: int = 5,
    seed: int = 0,
) -> CVResult:
    """Cross-validate the task, optionally through the photonic simulator.

    system=None scores the linear baseline on the raw features.
    """
    if system is None:
        return kfold_accuracy(task, k=k, ridge=ridge, seed=seed)
    features = system.transform(task.features)
    return kfold_accuracy(
        (features, task.labels),
        k=k,
        ridge=ridge,
        seed=seed,
        model=MODEL_PHOTONIC_ELM,
    )


def read_idx(path: str) -> np.ndarray:
    """Read an IDX-format array (the classic digit-dataset byte layout).

    Supports unsigned-byte payloads with any number of dimensions;
    gzip-compressed files are detected by their magic bytes.
    """
    with open(path, "rb") as fh:
        head = fh.read(2)
    opener = gzip.open if head == b"\x1f\x8b" else open
    with opener(path, "rb") as fh:
        zero, dtype, ndim = struct.unpack(">HBB", fh.read(4))
        if zero != 0 or dtype != 0x08:
            raise PreconditionError(
                f"{path}: not an unsigned-byte IDX file (magic {zero:#06x}, type {dtype:#04x})"
            )
        dims = struct.unpack(f">{ndim}I", fh.read(4 * ndim))
        payload = fh.read()
    expected = int(np.prod(dims))
    if len(payload) < expected:
        raise PreconditionError(
            f"{path}: truncated IDX payload ({len(payload)} < {expected} bytes)"
        )
    return np.frombuffer(payload[:expected], dtype=np.uint8).reshape(dims)


def load_digits_task(
    images_path: str,
    labels_path: str,
    n_components: int = 5,
    max_samples: int | None = 5000,
    seed: int = 0,
) -> TaskDataset:
    """Digit images -> optional random subset -> PCA to [-1, 1]^k features."""
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise PreconditionError(
            f"{images.shape[0]} images but {labels.shape[0]} labels"
        )
    flat = images.reshape(images.shape[0], -1).astype(np.float64)
    if max_samples is not None and max_samples < flat.shape[0]:
        keep = np.random.default_rng(seed).choice(
            flat.shape[0], size=max_samples, replace=False
        )
        flat = flat[keep]
        labels = labels[keep]
    features, _ = pca_reduce(flat, n_components)
    return TaskDataset(
        features=features, labels=labels.astype(np.int64), name="digits-pca"
    )


def save_task_csv(task: TaskDataset, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"u{j + 1}" for j in range(task.q)] + ["label"])
        for row, label in zip(task.features, task.labels):
            writer.writerow([f"{v:.17g}" for v in row] + [label])


def load_task_csv(path: str, name: str | None = None) -> TaskDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise PreconditionError(f"{path}: last column must be 'label'")
        rows = [line for line in reader if line]
    features = np.array([[float(v) for v in row[:-1]] for row in rows])
    raw_labels = [row[-1] for row in rows]
    try:
        labels = np.array([int(v) for v in raw_labels])
    except ValueError:
        try:
            labels = np.array([float(v) for v in raw_labels])
        except ValueError:
            labels = np.array(raw_labels)
    return TaskDataset(
        features=features, labels=labels, name=name or "task-csv"
    )
