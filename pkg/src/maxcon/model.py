"""Datasets, residuals, and synthetic instance generators.

The model family is linear regression: a dataset holds feature rows
``x_i`` and scalar targets ``y_i``, a candidate model is a coefficient
vector theta, and the fit quality at point i is the absolute residual
``|x_i . theta - y_i|``.  A point agrees with a model when that residual
is at most the inlier tolerance epsilon.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "ModelParams",
    "Tolerance",
    "residual",
    "residuals",
    "generate_line2d",
    "generate_linear",
    "save_dataset_csv",
    "load_dataset_csv",
]

OUTLIER_LABEL = 0


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out is arr:
        out = arr.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Tolerance:
    """Inlier tolerance epsilon for the absolute residual."""

    epsilon: float

    def __post_init__(self) -> None:
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps < 0.0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def coerce(cls, value) -> "Tolerance":
        if isinstance(value, Tolerance):
            return value
        return cls(float(value))


@dataclass(frozen=True)
class ModelParams:
    """Linear model coefficients; theta has one entry per feature column."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        if theta.ndim != 1 or theta.size == 0:
            raise ValueError("theta must be a nonempty 1-D vector")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        theta = theta.copy()
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def p(self) -> int:
        return int(self.theta.size)

    @classmethod
    def coerce(cls, value) -> "ModelParams":
        if isinstance(value, ModelParams):
            return value
        return cls(np.asarray(value, dtype=np.float64))


@dataclass(frozen=True)
class Dataset:
    """n points of p features plus targets, optionally with truth labels.

    labels, when present, record how each point was generated: 0 marks
    an outlier, r >= 1 membership in structure r.  They are bookkeeping
    for benchmarks only; nothing in the solvers reads them.
    """

    features: np.ndarray
    targets: np.ndarray
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        targs = np.ascontiguousarray(self.targets, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D array (n, p)")
        n, p = feats.shape
        if n < 1 or p < 1:
            raise ValueError(f"need n >= 1 and p >= 1, got shape {feats.shape}")
        if targs.shape != (n,):
            raise ValueError(f"targets shape {targs.shape} does not match n={n}")
        if not (np.all(np.isfinite(feats)) and np.all(np.isfinite(targs))):
            raise ValueError("features and targets must be finite")
        object.__setattr__(self, "features", _readonly(feats))
        object.__setattr__(self, "targets", _readonly(targs))
        if self.labels is not None:
            labels = np.ascontiguousarray(self.labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValueError(f"labels shape {labels.shape} does not match n={n}")
            labels = labels.copy()
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def p(self) -> int:
        return int(self.features.shape[1])

    def inlier_indices(self) -> np.ndarray:
        if self.labels is None:
            raise ValueError("dataset has no labels")
        return np.flatnonzero(self.labels != OUTLIER_LABEL)

    def outlier_indices(self) -> np.ndarray:
        if self.labels is None:
            raise ValueError("dataset has no labels")
        return np.flatnonzero(self.labels == OUTLIER_LABEL)


def residual(dataset: Dataset, index: int, params) -> float:
    """Absolute residual of one point under a model."""
    theta = ModelParams.coerce(params).theta
    if theta.size != dataset.p:
        raise ValueError(f"theta has {theta.size} entries, dataset has p={dataset.p}")
    if not 0 <= index < dataset.n:
        raise ValueError(f"index {index} out of range for n={dataset.n}")
    return float(abs(dataset.features[index] @ theta - dataset.targets[index]))


def residuals(dataset: Dataset, params) -> np.ndarray:
    """Absolute residuals of all points under a model."""
    theta = ModelParams.coerce(params).theta
    if theta.size != dataset.p:
        raise ValueError(f"theta has {theta.size} entries, dataset has p={dataset.p}")
    return np.abs(dataset.features @ theta - dataset.targets)


def round_half_up(value: float) -> int:
    """Round to nearest integer with exact .5 going up."""
    return int(math.floor(value + 0.5))


def _outlier_offsets(rng: np.random.Generator, count: int, inner: float, outer: float) -> np.ndarray:
    """Offsets with inner < |offset| <= outer, uniform over both bands.

    1 - U[0,1) lands in (0,1], which keeps the magnitude strictly above
    inner; a plain uniform(inner, outer) can return exactly inner.
    """
    signs = rng.integers(0, 2, size=count) * 2 - 1
    mags = inner + (outer - inner) * (1.0 - rng.random(count))
    return signs * mags


def _validate_noise_args(inlier_noise: float, outlier_range: tuple[float, float]) -> tuple[float, float]:
    inner, outer = float(outlier_range[0]), float(outlier_range[1])
    if inlier_noise < 0:
        raise ValueError(f"inlier_noise must be >= 0, got {inlier_noise}")
    if not 0 <= inner < outer:
        raise ValueError(f"need 0 <= inner < outer in outlier_range, got {outlier_range}")
    return inner, outer


def generate_line2d(
    n: int,
    outlier_fraction: float,
    inlier_noise: float = 0.1,
    outlier_range: tuple[float, float] = (0.1, 5.0),
    seed: int = 0,
) -> Dataset:
    """Random 2-D line instance: features are (x, 1), targets a*x + b plus noise.

    The line coefficients and the x coordinates are uniform on [-1, 1].
    round(n * outlier_fraction) points (half up) get an offset from
    +-(inner, outer]; the rest get uniform noise on [-inlier_noise,
    inlier_noise].  labels: 1 inlier, 0 outlier.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= outlier_fraction <= 1.0:
        raise ValueError(f"outlier_fraction must be in [0, 1], got {outlier_fraction}")
    inner, outer = _validate_noise_args(inlier_noise, outlier_range)
    n_out = round_half_up(n * outlier_fraction)

    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-1.0, 1.0, size=2)
    x = rng.uniform(-1.0, 1.0, size=n)
    out_idx = rng.choice(n, size=n_out, replace=False)

    y = a * x + b
    labels = np.ones(n, dtype=np.int64)
    labels[out_idx] = OUTLIER_LABEL
    noise = rng.uniform(-inlier_noise, inlier_noise, size=n)
    y = y + noise
    offsets = _outlier_offsets(rng, n_out, inner, outer)
    y[out_idx] = a * x[out_idx] + b + offsets

    features = np.column_stack([x, np.ones(n)])
    return Dataset(features, y, labels)


def generate_linear(
    n: int,
    p: int,
    n_outliers: int,
    inlier_noise: float = 0.1,
    outlier_range: tuple[float, float] = (0.1, 5.0),
    seed: int = 0,
) -> Dataset:
    """Random p-dimensional linear regression instance with an intercept.

    Feature columns 1..p-1 are uniform on [-1, 1]; the last column is
    the constant 1.  Exactly n_outliers points get band offsets, the
    rest bounded noise, as in generate_line2d.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not 0 <= n_outliers <= n:
        raise ValueError(f"n_outliers must be in [0, n], got {n_outliers}")
    inner, outer = _validate_noise_args(inlier_noise, outlier_range)

    rng = np.random.default_rng(seed)
    theta = rng.uniform(-1.0, 1.0, size=p)
    features = np.ones((n, p))
    if p > 1:
        features[:, : p - 1] = rng.uniform(-1.0, 1.0, size=(n, p - 1))
    out_idx = rng.choice(n, size=n_outliers, replace=False)

    y = features @ theta
    labels = np.ones(n, dtype=np.int64)
    labels[out_idx] = OUTLIER_LABEL
    y = y + rng.uniform(-inlier_noise, inlier_noise, size=n)
    y[out_idx] = features[out_idx] @ theta + _outlier_offsets(rng, n_outliers, inner, outer)

    return Dataset(features, y, labels)


# -- CSV interchange ----------------------------------------------------
#
# Header row x_1..x_p,y[,label]; UTF-8; '.' decimal separator.  Floats
# are written with repr so a save/load round trip is exact.


def save_dataset_csv(dataset: Dataset, path) -> None:
    path = Path(path)
    header = [f"x_{j + 1}" for j in range(dataset.p)] + ["y"]
    if dataset.labels is not None:
        header.append("label")
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.features[i]]
            row.append(repr(float(dataset.targets[i])))
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            writer.writerow(row)


def load_dataset_csv(path) -> Dataset:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    has_label = header and header[-1] == "label"
    feat_names = header[:-2] if has_label else header[:-1]
    y_name = header[-2] if has_label else header[-1]
    expected = [f"x_{j + 1}" for j in range(len(feat_names))]
    if not feat_names or feat_names != expected or y_name != "y":
        raise ValueError(
            f"{path}: header must be x_1..x_p,y[,label], got {','.join(header)}"
        )
    p = len(feat_names)
    width = p + 1 + (1 if has_label else 0)

    feats, targs, labels = [], [], []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        try:
            feats.append([float(v) for v in row[:p]])
            targs.append(float(row[p]))
            if has_label:
                labels.append(int(row[p + 1]))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad numeric field ({exc})") from None
    if not feats:
        raise ValueError(f"{path}: no data rows")
    return Dataset(
        np.asarray(feats),
        np.asarray(targs),
        np.asarray(labels, dtype=np.int64) if has_label else None,
    )
