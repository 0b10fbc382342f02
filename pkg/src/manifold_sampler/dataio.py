"""Sample matrices: CSV I/O, min-max scaling and synthetic data sets.

Matrices are held internally with one sample per column (shape ``(n, N)``).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ROWS_ARE_SAMPLES = "rows-are-samples"
COLUMNS_ARE_SAMPLES = "columns-are-samples"
LAYOUTS = (ROWS_ARE_SAMPLES, COLUMNS_ARE_SAMPLES)

SCALING_VERSION = 1


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DataMatrix:
    """Real ``n x N`` matrix whose columns are samples."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DataError(f"data matrix must be 2-D, got shape {v.shape}")
        if v.shape[0] < 1:
            raise DataError("data matrix needs at least one feature")
        if v.shape[1] < 2:
            raise DataError(f"need at least 2 samples, got N={v.shape[1]}")
        if not np.all(np.isfinite(v)):
            raise DataError("data matrix contains NaN or Inf")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ScalingMap:
    """Per-feature min-max map plus the positive offset ``eps_s``."""

    minimum: np.ndarray
    maximum: np.ndarray
    eps_s: float = 1e-9
    version: int = field(default=SCALING_VERSION)

    def __post_init__(self):
        if not self.eps_s > 0:
            raise DataError("eps_s must be positive")
        lo, hi = _frozen(self.minimum), _frozen(self.maximum)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DataError("minimum and maximum must be vectors of equal length")
        if np.any(hi < lo):
            raise DataError("maximum below minimum")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    @property
    def degenerate(self) -> np.ndarray:
        """Boolean mask of constant features."""
        return self.maximum == self.minimum

    def apply(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        span = np.where(self.degenerate, 1.0, self.maximum - self.minimum)
        out = (raw - self.minimum[:, None]) / span[:, None] + self.eps_s
        out[self.degenerate, :] = self.eps_s
        return out

    def invert(self, scaled: np.ndarray) -> np.ndarray:
        """Map scaled values back to raw units (constant features come back exact)."""
        scaled = np.asarray(scaled, dtype=float)
        span = self.maximum - self.minimum
        return (scaled - self.eps_s) * span[:, None] + self.minimum[:, None]

    def to_dict(self) -> dict:
        return {
            "kind": "ScalingMap",
            "version": self.version,
            "minimum": self.minimum.tolist(),
            "maximum": self.maximum.tolist(),
            "eps_s": self.eps_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingMap":
        if d.get("kind") != "ScalingMap":
            raise DataError("JSON document is not a ScalingMap")
        return cls(np.asarray(d["minimum"]), np.asarray(d["maximum"]), float(d["eps_s"]), int(d["version"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "ScalingMap":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, layout: str = ROWS_ARE_SAMPLES) -> DataMatrix:
    """Read a comma-delimited numeric matrix.

    A first line containing any non-numeric cell is treated as a header and
    skipped. The result is always in column-per-sample orientation.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            lines = [row for row in csv.reader(fh)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = [(i + 1, row) for i, row in enumerate(lines) if row and any(c.strip() for c in row)]
    if lines and not all(_is_number(c.strip()) for c in lines[0][1]):
        lines = lines[1:]
    if not lines:
        raise DataError(f"{path}: no numeric rows")

    width = len(lines[0][1])
    rows = []
    for lineno, row in lines:
        if len(row) != width:
            raise DataError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
        parsed = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell.strip())
            except ValueError:
                raise DataError(f"{path}: cannot parse cell {cell!r} at line {lineno}, column {col}") from None
            if not np.isfinite(v):
                raise DataError(f"{path}: non-finite cell {cell!r} at line {lineno}, column {col}")
            parsed.append(v)
        rows.append(parsed)
    table = np.array(rows, dtype=float)
    values = table.T if layout == ROWS_ARE_SAMPLES else table
    return DataMatrix(values)


def save_csv(path, x, layout: str = ROWS_ARE_SAMPLES, header: list[str] | None = None) -> None:
    """Write a matrix with 17 significant digits (lossless for float64)."""
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    values = x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)
    table = values.T if layout == ROWS_ARE_SAMPLES else values
    with Path(path).open("w", newline="") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(table):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def scale(raw: DataMatrix, eps_s: float = 1e-9) -> tuple[DataMatrix, ScalingMap]:
    """Min-max scale every feature to ``[eps_s, 1 + eps_s]``.

    Constant features map to ``eps_s``; they are removed later by the PCA
    rank cutoff.
    """
    v = raw.values
    smap = ScalingMap(v.min(axis=1), v.max(axis=1), eps_s)
    return DataMatrix(smap.apply(v)), smap


def synth_circles(
    N: int = 230,
    radii: tuple[float, float] = (1.0, 0.5),
    noise_sigma: float = 0.02,
    seed: int = 0,
    centers: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 0.0), (2.5, 0.0)),
) -> DataMatrix:
    """Points near two circles in the plane, half per circle.

    Each point is ``center + (r + sigma * xi) * (cos theta, sin theta)`` with
    ``theta`` uniform on ``[0, 2 pi)`` and ``xi`` standard normal.
    """
    if N < 4 or N % 2:
        raise ValueError("N must be even and at least 4")
    if min(radii) <= 0 or noise_sigma < 0:
        raise ValueError("radii must be positive and noise_sigma non-negative")
    rng = np.random.default_rng(seed)
    half = N // 2
    r = np.repeat(np.asarray(radii, dtype=float), half)
    c = np.repeat(np.asarray(centers, dtype=float), half, axis=0).T
    theta = rng.uniform(0.0, 2.0 * np.pi, size=N)
    rho = r + noise_sigma * rng.standard_normal(N)
    return DataMatrix(c + rho * np.vstack([np.cos(theta), np.sin(theta)]))


def synth_helix(
    N: int = 400,
    noise_sigma: float = 0.02,
    seed: int = 0,
    pitch: float = 0.15,
    turns: float = 2.0,
) -> DataMatrix:
    """Points near the helix ``(cos t, sin t, pitch * t)``, ``t`` uniform on ``[0, 2 pi turns]``.

    Isotropic Gaussian noise of standard deviation ``noise_sigma`` is added.
    """
    if N < 2 or noise_sigma < 0:
        raise ValueError("N must be >= 2 and noise_sigma non-negative")
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 2.0 * np.pi * turns, size=N)
    curve = np.vstack([np.cos(t), np.sin(t), pitch * t])
    return DataMatrix(curve + noise_sigma * rng.standard_normal((3, N)))


def synth_features(
    N: int = 2000,
    n: int = 35,
    n_latent: int = 3,
    n_dependent: int = 3,
    noise_sigma: float = 0.02,
    seed: int = 0,
) -> DataMatrix:
    """Many-feature data concentrated near a low-dimensional curved set.

    ``n - n_dependent`` features are smooth nonlinear functions of
    ``n_latent`` uniform latent variables plus noise, each in its own units;
    the last ``n_dependent`` features are exact linear combinations of the
    others, so the covariance has rank ``n - n_dependent``.
    """
    if n_dependent >= n or n_latent < 1:
        raise ValueError("need n_latent >= 1 and n_dependent < n")
    rng = np.random.default_rng(seed)
    n_free = n - n_dependent
    latent = rng.uniform(-1.0, 1.0, size=(n_latent, N))
    w = rng.normal(size=(n_free, n_latent))
    freq = rng.uniform(0.5, 2.5, size=(n_free, 1))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n_free, 1))
    proj = w @ latent
    free = np.sin(freq * proj + phase) + 0.3 * proj ** 2
    free += noise_sigma * rng.standard_normal(free.shape)
    units = 10.0 ** rng.uniform(-2, 3, size=(n_free, 1))
    free = units * free + rng.normal(scale=units, size=(n_free, 1))
    mix = rng.normal(size=(n_dependent, n_free)) / np.sqrt(n_free)
    return DataMatrix(np.vstack([free, mix @ free]))
