"""Choosing the basis size m from the covariance of the reduced reconstruction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataio import DataError, DataMatrix
from .diffmaps import MIN_EIGENVALUE, DiffusionBasis, _basis_from_eigen, _Eigen, _symmetric_eigen
from .normalize import NormalizedData, PcaModel, empirical_moments

log = logging.getLogger(__name__)

DENSE_UNTIL = 30
COARSE_STEP = 5


@dataclass
class ReductionDiagnostics:
    m_values: list[int]
    e_red: list[float]
    tol: float
    m_selected: int | None = None
    gap_m: int | None = None
    eigenvalues: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "m_values": self.m_values,
            "e_red": self.e_red,
            "tol": self.tol,
            "m_selected": self.m_selected,
            "gap_m": self.gap_m,
            "eigenvalues": self.eigenvalues,
        }


def _arrays(x, eta):
    xv = x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)
    ev = eta.eta if isinstance(eta, NormalizedData) else np.asarray(eta, dtype=float)
    return xv, ev


def reduced_reconstruction(pca: PcaModel, eta, basis: DiffusionBasis) -> np.ndarray:
    """``mean + phi mu^{1/2} eta a g^T``: the data rebuilt from m basis vectors."""
    ev = eta.eta if isinstance(eta, NormalizedData) else np.asarray(eta, dtype=float)
    if ev.shape[1] != basis.N:
        raise DataError(f"dimension mismatch: eta has {ev.shape[1]} columns, basis N={basis.N}")
    reduced = (ev @ basis.a) @ basis.g.T
    return pca.mean[:, None] + pca.eigvecs @ (np.sqrt(pca.eigvals)[:, None] * reduced)


def e_red(x, pca: PcaModel, eta, basis: DiffusionBasis) -> float:
    """Relative Frobenius error between the reduced and the original covariance."""
    xv, ev = _arrays(x, eta)
    if xv.shape[0] != pca.n or ev.shape[0] != pca.nu or xv.shape[1] != ev.shape[1]:
        raise DataError("dimension mismatch between data, PCA model and normalized data")
    _, c = empirical_moments(xv)
    _, c_red = empirical_moments(reduced_reconstruction(pca, ev, basis))
    return float(np.linalg.norm(c_red - c) / np.linalg.norm(c))


def sweep_schedule(m_max: int, N: int) -> list[int]:
    """Every m up to 30, then steps of 5, always ending at ``m_max``."""
    m_max = min(m_max, N)
    ms = list(range(2, min(DENSE_UNTIL, m_max) + 1))
    m = (ms[-1] if ms else 1) + COARSE_STEP
    while m < m_max:
        ms.append(m)
        m += COARSE_STEP
    if m_max >= 2 and ms[-1] != m_max:
        ms.append(m_max)
    return ms


def spectral_gap(lam: np.ndarray) -> int | None:
    """Index m (>= 2) after which the eigenvalues drop the most, in log scale."""
    lam = np.asarray(lam)
    positive = lam[lam > MIN_EIGENVALUE]
    if positive.size < 3:
        return None
    ratios = np.log(positive[1:-1]) - np.log(positive[2:])
    return int(np.argmax(ratios)) + 2


def select_m(
    x,
    pca: PcaModel,
    eta,
    epsilon: float,
    kappa: int = 1,
    tol: float = 1e-3,
    m_max: int | None = None,
) -> ReductionDiagnostics:
    """Smallest m in the sweep with ``e_red(m) <= tol``.

    One eigendecomposition at ``m_max`` serves every m (prefix columns).
    Eigenvalues that are numerically zero cap the sweep.
    """
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    _, ev = _arrays(x, eta)
    N = ev.shape[1]
    m_max = N if m_max is None else m_max
    if not 2 <= m_max <= N:
        raise ValueError(f"need 2 <= m_max <= N={N}")
    eig = _symmetric_eigen(ev, epsilon, m_max)
    lam = eig.lam
    usable = int(np.sum(lam > MIN_EIGENVALUE))
    if usable < m_max:
        log.warning("only %d eigenvalues exceed %.0e; sweep capped at m=%d", usable, MIN_EIGENVALUE, usable)
    diag = ReductionDiagnostics([], [], tol, eigenvalues=lam.tolist(), gap_m=spectral_gap(lam))
    if usable < 2:
        return diag
    full = _basis_from_eigen(_Eigen(lam[:usable], eig.phi[:, :usable], eig.b), epsilon, kappa)
    for m in sweep_schedule(usable, N):
        diag.m_values.append(m)
        diag.e_red.append(e_red(x, pca, ev, full.truncated(m)))
        if diag.m_selected is None and diag.e_red[-1] <= tol:
            diag.m_selected = m
    return diag
