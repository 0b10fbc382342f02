"""Diffusion-maps basis built from the normalized data.

The Gaussian kernel matrix ``K`` is turned into the row-stochastic transition
matrix ``P = b^{-1} K``. Its eigenpairs come from the symmetric similarity
transform ``P_S = b^{-1/2} K b^{-1/2}``. The basis vectors are the right
eigenvectors of ``P``, scaled by ``lambda**kappa``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import eigh

from .dataio import DataError, save_csv
from .normalize import NormalizedData

BASIS_VERSION = 1
MIN_EIGENVALUE = 1e-14


class SpectrumError(DataError):
    """Raised when the requested eigenpairs are unusable."""


def _eta(eta) -> np.ndarray:
    return eta.eta if isinstance(eta, NormalizedData) else np.asarray(eta, dtype=float)


def kernel_matrix(eta, epsilon: float) -> np.ndarray:
    """``K_ij = exp(-|eta_i - eta_j|^2 / (4 epsilon))``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    e = _eta(eta)
    sq = (e * e).sum(axis=0)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (e.T @ e), 0.0)
    np.fill_diagonal(d2, 0.0)
    return np.exp(-d2 / (4.0 * epsilon))


def transition_matrix(eta, epsilon: float) -> np.ndarray:
    k = kernel_matrix(eta, epsilon)
    return k / k.sum(axis=1, keepdims=True)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first component that is clearly nonzero made positive
    tol = 1e-12 * np.abs(vecs).max(axis=0)
    first = np.argmax(np.abs(vecs) > tol, axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


@dataclass(frozen=True)
class _Eigen:
    lam: np.ndarray  # descending
    phi: np.ndarray  # orthonormal eigenvectors of P_S
    b: np.ndarray  # row sums of K


def _symmetric_eigen(eta, epsilon: float, m: int) -> _Eigen:
    k = kernel_matrix(eta, epsilon)
    N = k.shape[0]
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= N={N}, got m={m}")
    b = k.sum(axis=1)
    rs = 1.0 / np.sqrt(b)
    ps = rs[:, None] * k * rs[None, :]
    ps = 0.5 * (ps + ps.T)
    try:
        lam, phi = eigh(ps, subset_by_index=[N - m, N - 1])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SpectrumError(f"symmetric eigensolver failed: {exc}") from exc
    # stable sort: value descending, ties by original index
    order = np.lexsort((np.arange(m), -lam))
    return _Eigen(lam[order], _fix_signs(phi[:, order]), b)


def spectrum(eta, epsilon: float, m_max: int) -> np.ndarray:
    """The ``m_max`` largest eigenvalues of the transition matrix, descending."""
    return _symmetric_eigen(eta, epsilon, m_max).lam.copy()


@dataclass(frozen=True)
class DiffusionBasis:
    """Reduced basis ``g`` (``N x m``) and its dual ``a = g (g^T g)^{-1}``."""

    epsilon: float
    kappa: int
    m: int
    lam: np.ndarray
    g: np.ndarray
    a: np.ndarray
    b_diag: np.ndarray

    def __post_init__(self):
        for name in ("lam", "g", "a", "b_diag"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def N(self) -> int:
        return self.g.shape[0]

    @property
    def psi(self) -> np.ndarray:
        """Right eigenvectors of ``P`` normalized so that ``psi^T b psi = I``."""
        return self.g / self.lam ** self.kappa

    def projector(self) -> np.ndarray:
        """``a g^T``: orthogonal projector of ``R^N`` onto span(g)."""
        return self.a @ self.g.T

    def truncated(self, m: int) -> "DiffusionBasis":
        """Basis made of the first ``m`` vectors (eigenvectors do not depend on m)."""
        return _assemble(self.epsilon, self.kappa, self.lam[:m], self.psi[:, :m], self.b_diag)

    def rescaled(self, factors) -> "DiffusionBasis":
        """Same span with every column multiplied by a positive factor."""
        f = np.asarray(factors, dtype=float)
        return DiffusionBasis(self.epsilon, self.kappa, self.m, self.lam, self.g * f, self.a / f, self.b_diag)

    def metadata(self) -> dict:
        return {
            "kind": "DiffusionBasis",
            "version": BASIS_VERSION,
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "m": self.m,
            "N": self.N,
            "lambda": self.lam.tolist(),
        }

    def save(self, prefix) -> list[Path]:
        """Write ``<prefix>.json`` plus ``<prefix>.g.csv``, ``.a.csv`` and ``.b.csv``."""
        prefix = Path(prefix)
        paths = [prefix.with_name(prefix.name + suffix) for suffix in (".json", ".g.csv", ".a.csv", ".b.csv")]
        paths[0].write_text(json.dumps(self.metadata(), indent=2))
        save_csv(paths[1], self.g.T)
        save_csv(paths[2], self.a.T)
        save_csv(paths[3], self.b_diag[None, :])
        return paths

    @classmethod
    def load(cls, prefix) -> "DiffusionBasis":
        prefix = Path(prefix)
        meta = json.loads(prefix.with_name(prefix.name + ".json").read_text())
        if meta.get("kind") != "DiffusionBasis":
            raise DataError("JSON document is not a DiffusionBasis")
        N, m = meta["N"], meta["m"]

        def read(suffix, shape):
            return np.loadtxt(prefix.with_name(prefix.name + suffix), delimiter=",", ndmin=2).reshape(shape)

        g = read(".g.csv", (N, m))
        a = read(".a.csv", (N, m))
        b = read(".b.csv", (N,))
        return cls(meta["epsilon"], meta["kappa"], m, np.asarray(meta["lambda"]), g, a, b)


def _assemble(epsilon, kappa, lam, psi, b) -> DiffusionBasis:
    # a = psi (psi^T psi)^{-1} lam^{-kappa}: same as g (g^T g)^{-1} but never
    # squares the (possibly tiny) eigenvalues into a Gram matrix.
    gram = psi.T @ psi
    a0 = np.linalg.solve(gram, psi.T).T
    scale = lam ** kappa
    return DiffusionBasis(float(epsilon), int(kappa), lam.size, lam, psi * scale, a0 / scale, b)


def build_basis(eta, epsilon: float, kappa: int = 1, m: int = 3) -> DiffusionBasis:
    """Diffusion-maps basis with the ``m`` dominant eigenvectors."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    N = _eta(eta).shape[1]
    if m > N:
        raise ValueError(f"m={m} exceeds N={N}")
    if m < 2:
        raise ValueError("m must exceed 1")
    return _basis_from_eigen(_symmetric_eigen(eta, epsilon, m), epsilon, kappa)


def _basis_from_eigen(eig: _Eigen, epsilon: float, kappa: int) -> DiffusionBasis:
    # only lam**kappa with kappa > 0 needs the eigenvalues to be resolved
    bad = np.flatnonzero(eig.lam <= MIN_EIGENVALUE) if kappa > 0 else np.array([], dtype=int)
    if bad.size:
        raise SpectrumError(
            f"eigenvalue lambda_{bad[0] + 1} = {eig.lam[bad[0]]:.3e} is numerically zero; "
            "decrease epsilon or reduce m"
        )
    psi = eig.phi / np.sqrt(eig.b)[:, None]
    return _assemble(epsilon, kappa, eig.lam, psi, eig.b)


def project(eta_like, basis: DiffusionBasis) -> np.ndarray:
    """Reduced coordinates ``z = eta a`` (``nu x m``)."""
    e = _eta(eta_like)
    if e.shape[1] != basis.N:
        raise DataError(f"dimension mismatch: {e.shape[1]} columns, basis has N={basis.N}")
    return e @ basis.a


def median_sq_distance(eta) -> float:
    """Median pairwise squared distance; a heuristic starting point for epsilon."""
    e = _eta(eta)
    sq = (e * e).sum(axis=0)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (e.T @ e), 0.0)
    iu = np.triu_indices(e.shape[1], k=1)
    return float(np.median(d2[iu]))
