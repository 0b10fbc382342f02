"""PCA normalization to zero empirical mean and identity empirical covariance."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import DataError, DataMatrix

PCA_VERSION = 1


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component of every column made positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


@dataclass(frozen=True)
class PcaModel:
    """Mean vector and retained covariance eigenpairs, eigenvalues descending."""

    mean: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    rank_tol: float = 1e-12

    def __post_init__(self):
        for name in ("mean", "eigvals", "eigvecs"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.eigvecs.shape != (self.mean.size, self.eigvals.size):
            raise DataError("inconsistent PCA model shapes")
        if self.eigvals.size < 1 or np.any(self.eigvals <= 0):
            raise DataError("PCA model needs at least one positive eigenvalue")

    @property
    def n(self) -> int:
        return self.mean.size

    @property
    def nu(self) -> int:
        return self.eigvals.size

    def to_dict(self) -> dict:
        return {
            "kind": "PcaModel",
            "version": PCA_VERSION,
            "n": self.n,
            "nu": self.nu,
            "rank_tol": self.rank_tol,
            "mean": self.mean.tolist(),
            "eigvals": self.eigvals.tolist(),
            "eigvecs": self.eigvecs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        if d.get("kind") != "PcaModel":
            raise DataError("JSON document is not a PcaModel")
        return cls(np.asarray(d["mean"]), np.asarray(d["eigvals"]),
                   np.asarray(d["eigvecs"]).reshape(d["n"], d["nu"]), float(d["rank_tol"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "PcaModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class NormalizedData:
    """The ``nu x N`` matrix of normalized samples."""

    eta: np.ndarray

    def __post_init__(self):
        a = np.array(self.eta, dtype=float)
        if a.ndim != 2:
            raise DataError("normalized data must be 2-D")
        if not np.all(np.isfinite(a)):
            raise DataError("normalized data contains NaN or Inf")
        a.setflags(write=False)
        object.__setattr__(self, "eta", a)

    @property
    def nu(self) -> int:
        return self.eta.shape[0]

    @property
    def N(self) -> int:
        return self.eta.shape[1]


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)


def empirical_moments(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column mean and unbiased ``1/(N-1)`` covariance of a column-per-sample matrix."""
    mean = x.mean(axis=1)
    d = x - mean[:, None]
    return mean, d @ d.T / (x.shape[1] - 1)


def fit_pca(x: DataMatrix, rank_tol: float = 1e-12) -> PcaModel:
    """Fit the mean and the eigenpairs of the empirical covariance.

    Eigenvalues not exceeding ``rank_tol`` times the largest one are dropped,
    which removes constant or linearly dependent features.
    """
    v = _values(x)
    if v.shape[1] < 2:
        raise DataError("PCA needs N >= 2")
    mean, cov = empirical_moments(v)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    top = vals[0] if vals.size else 0.0
    if not top > 0:
        raise DataError("all covariance eigenvalues vanish: the data is a single repeated point")
    keep = vals > rank_tol * top
    return PcaModel(mean, vals[keep], _fix_signs(vecs[:, keep]), rank_tol)


def normalize(x: DataMatrix, pca: PcaModel) -> NormalizedData:
    """``eta = mu^{-1/2} phi^T (x - mean)`` column by column."""
    v = _values(x)
    if v.shape[0] != pca.n:
        raise DataError(f"dimension mismatch: data has n={v.shape[0]}, PCA model n={pca.n}")
    eta = (pca.eigvecs.T @ (v - pca.mean[:, None])) / np.sqrt(pca.eigvals)[:, None]
    return NormalizedData(eta)


def denormalize(eta_samples, pca: PcaModel) -> DataMatrix:
    """Affine map back to data space: ``mean + phi mu^{1/2} eta``."""
    eta = eta_samples.eta if isinstance(eta_samples, NormalizedData) else np.asarray(eta_samples, dtype=float)
    if eta.ndim != 2 or eta.shape[0] != pca.nu:
        raise DataError(f"dimension mismatch: expected {pca.nu} rows, got shape {eta.shape}")
    x = pca.mean[:, None] + pca.eigvecs @ (np.sqrt(pca.eigvals)[:, None] * eta)
    return DataMatrix(x)
