"""Gaussian kernel-density model with the modified Silverman bandwidth.

The density is the mixture ``(1/N) sum_j pi(c_j - eta)`` of isotropic
Gaussians of width ``s_hat`` around the shrunken centres
``c_j = (s_hat / s) eta_j``. With normalized training data its mean is zero
and its second moment is the identity.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .normalize import NormalizedData

# Relative log-weight below which truncated evaluation drops a kernel term.
TRUNCATION_LOG_WEIGHT = 20.0


def silverman_bandwidth(nu: int, N: int) -> float:
    """Multidimensional Silverman bandwidth for unit-variance components."""
    return (4.0 / (N * (2.0 + nu))) ** (1.0 / (nu + 4.0))


def modified_bandwidth(nu: int, N: int) -> float:
    """Shrunken bandwidth making the mixture's second moment exactly the identity."""
    s = silverman_bandwidth(nu, N)
    return s / np.sqrt(s * s + (N - 1.0) / N)


@dataclass(frozen=True)
class KdeModel:
    nu: int
    n_samples: int
    s: float
    s_hat: float
    centers: np.ndarray
    truncate: bool = False

    @classmethod
    def fit(cls, eta, truncate: bool = False) -> "KdeModel":
        """Build the model from a ``nu x N`` matrix of normalized samples."""
        e = eta.eta if isinstance(eta, NormalizedData) else np.asarray(eta, dtype=float)
        nu, N = e.shape
        s = silverman_bandwidth(nu, N)
        s_hat = modified_bandwidth(nu, N)
        centers = (s_hat / s) * e
        centers.setflags(write=False)
        return cls(nu, N, s, s_hat, centers, truncate)

    # squared distances between every column of u and every centre, shape (cols, N)
    def _points(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.ndim > 2 or u.shape[0] != self.nu:
            raise ValueError(f"expected points with leading dimension nu={self.nu}, got shape {u.shape}")
        return u.reshape(self.nu, -1)

    def _sqdist(self, u: np.ndarray) -> np.ndarray:
        c = self.centers
        d2 = (u * u).sum(axis=0)[:, None] + (c * c).sum(axis=0)[None, :] - 2.0 * (u.T @ c)
        return np.maximum(d2, 0.0)

    def _log_weights(self, u: np.ndarray) -> np.ndarray:
        logw = -self._sqdist(u) / (2.0 * self.s_hat ** 2)
        if self.truncate:
            top = logw.max(axis=1, keepdims=True)
            logw = np.where(logw < top - TRUNCATION_LOG_WEIGHT, -np.inf, logw)
        return logw

    def log_density(self, eta_point) -> float | np.ndarray:
        """``log p(eta)``; a ``nu x k`` argument gives ``k`` values."""
        single = np.ndim(eta_point) == 1
        u = self._points(eta_point)
        norm = -np.log(self.n_samples) - 0.5 * self.nu * np.log(2.0 * np.pi * self.s_hat ** 2)
        out = logsumexp(self._log_weights(u), axis=1) + norm
        return float(out[0]) if single else out

    def _gradient_block(self, u: np.ndarray) -> np.ndarray:
        logw = self._log_weights(u)
        logw -= logw.max(axis=1, keepdims=True)
        w = np.exp(logw)
        w /= w.sum(axis=1, keepdims=True)
        return (self.centers @ w.T - u) / self.s_hat ** 2

    def potential_gradient(self, u, workers: int = 1, block: int = 1024) -> np.ndarray:
        """Column-wise ``grad log q`` for a ``nu x N'`` matrix of positions.

        Computed as a softmax-weighted average of ``(c_j - u) / s_hat**2`` so
        that distant points do not underflow. Columns are independent, so
        blocks of columns may be evaluated on ``workers`` threads.
        """
        u = self._points(u)
        cols = u.shape[1]
        if workers <= 1 or cols <= block:
            return self._gradient_block(u)
        starts = range(0, cols, block)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda i: self._gradient_block(u[:, i:i + block]), starts))
        return np.concatenate(parts, axis=1)

    def analytic_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact mean and second moment ``E[eta eta^T]`` of the mixture."""
        c = self.centers
        mean = c.mean(axis=1)
        second = self.s_hat ** 2 * np.eye(self.nu) + c @ c.T / self.n_samples
        return mean, second

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``size`` points from the mixture, returned as ``nu x size``."""
        idx = rng.integers(0, self.n_samples, size=size)
        return self.centers[:, idx] + self.s_hat * rng.standard_normal((self.nu, size))


def fit(eta, truncate: bool = False) -> KdeModel:
    return KdeModel.fit(eta, truncate)


def log_density(model: KdeModel, eta_point):
    return model.log_density(eta_point)


def potential_gradient(model: KdeModel, u, workers: int = 1) -> np.ndarray:
    return model.potential_gradient(u, workers=workers)


def analytic_moments(model: KdeModel):
    return model.analytic_moments()
