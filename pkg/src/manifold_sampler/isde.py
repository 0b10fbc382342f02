"""Stormer-Verlet integration of the damped stochastic Hamiltonian system.

The state is a pair of ``nu x m`` matrices (position ``Z``, velocity ``Y``);
positions in the full space are ``U = Z g^T``. Passing ``basis=None`` uses the
identity basis (``g = a = I_N``), i.e. the full-order system.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .diffmaps import DiffusionBasis
from .normalize import NormalizedData
from .rng import NoiseStream

log = logging.getLogger(__name__)

# transient attenuation factor behind the M0 lower bound
ATTENUATION = 100.0


class DivergenceError(ArithmeticError):
    """The integrated state stopped being finite."""


def derive_step(s_hat: float, fac: float) -> float:
    """Integration step ``2 pi s_hat / fac`` for oversampling factor ``fac > 1``."""
    if not fac > 1:
        raise ValueError("fac must exceed 1")
    return 2.0 * math.pi * s_hat / fac


def m0_bound(f0: float, fac: float, s_hat: float) -> float:
    """Steps needed for the linearized transient to decay by a factor 100."""
    if min(f0, fac, s_hat) <= 0:
        raise ValueError("f0, fac and s_hat must be positive")
    return 2.0 * math.log(ATTENUATION) * fac / (math.pi * f0 * s_hat)


def min_m0(f0: float, fac: float, s_hat: float) -> int:
    """Smallest integer strictly above :func:`m0_bound`."""
    return math.floor(m0_bound(f0, fac, s_hat)) + 1


@dataclass(frozen=True)
class IsdeRunConfig:
    """Everything needed to replay a sampling run.

    ``delta_r=None`` means the step is derived from the KDE bandwidth and
    ``fac``.
    """

    f0: float = 1.5
    fac: float = 20.0
    delta_r: float | None = None
    m0: int = 110
    n_mc: int = 1
    seed: int = 0
    chain: int = 0

    def __post_init__(self):
        if not self.f0 >= 0:
            raise ValueError("f0 must be non-negative")
        if not self.fac > 1:
            raise ValueError("fac must exceed 1")
        if self.delta_r is not None and not self.delta_r > 0:
            raise ValueError("delta_r must be positive")
        if self.m0 < 1 or self.n_mc < 0:
            raise ValueError("m0 must be >= 1 and n_mc >= 0")

    def step(self, s_hat: float) -> float:
        return self.delta_r if self.delta_r is not None else derive_step(s_hat, self.fac)

    @property
    def total_steps(self) -> int:
        return self.n_mc * self.m0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IsdeState:
    z: np.ndarray
    y: np.ndarray
    step_index: int = 0


def _expand(z: np.ndarray, basis: DiffusionBasis | None) -> np.ndarray:
    return z if basis is None else z @ basis.g.T


def _reduce(u: np.ndarray, basis: DiffusionBasis | None) -> np.ndarray:
    return u if basis is None else u @ basis.a


def verlet_step(
    state: IsdeState,
    kde,
    basis: DiffusionBasis | None,
    config: IsdeRunConfig,
    noise: np.ndarray,
    workers: int = 1,
    delta_r: float | None = None,
) -> IsdeState:
    """Advance one step: half drift, damped kick at the midpoint, half drift.

    ``noise`` is the full ``nu x N`` Wiener increment (variance ``delta_r``
    per entry); it is reduced with ``a`` here. ``kde`` only needs a
    ``potential_gradient(u)`` method.
    """
    dr = delta_r if delta_r is not None else config.step(kde.s_hat)
    f0 = config.f0
    b = f0 * dr / 4.0
    z_half = state.z + 0.5 * dr * state.y
    force = _reduce(kde.potential_gradient(_expand(z_half, basis), workers=workers), basis)
    dw = _reduce(noise, basis)
    y_new = ((1.0 - b) * state.y + dr * force + math.sqrt(f0) * dw) / (1.0 + b)
    z_new = z_half + 0.5 * dr * y_new
    k = state.step_index + 1
    if not (np.all(np.isfinite(z_new)) and np.all(np.isfinite(y_new))):
        raise DivergenceError(f"non-finite state at step {k}; reduce the step (increase fac)")
    return IsdeState(z_new, y_new, k)


def initial_state(eta, basis: DiffusionBasis | None, stream: NoiseStream) -> IsdeState:
    """``Z0 = eta a`` and ``Y0 = N a`` with a fresh standard-normal ``N``."""
    e = eta.eta if isinstance(eta, NormalizedData) else np.asarray(eta, dtype=float)
    velocity = stream.normal(0, e.shape)
    return IsdeState(_reduce(e, basis), _reduce(velocity, basis), 0)


def run(
    eta,
    kde,
    basis: DiffusionBasis | None,
    config: IsdeRunConfig,
    workers: int = 1,
    progress=None,
) -> list[np.ndarray]:
    """Integrate ``n_mc * m0`` steps and keep every ``m0``-th position.

    Returns ``n_mc`` matrices of shape ``nu x N`` (positions mapped back with
    ``g^T``). The run is a deterministic function of ``config``.
    """
    e = eta.eta if isinstance(eta, NormalizedData) else np.asarray(eta, dtype=float)
    dr = config.step(kde.s_hat)
    stream = NoiseStream(config.seed, config.chain)
    state = initial_state(e, basis, stream)
    out = []
    for _ in range(config.n_mc):
        for _ in range(config.m0):
            noise = stream.increment(state.step_index + 1, e.shape, dr)
            state = verlet_step(state, kde, basis, config, noise, workers=workers, delta_r=dr)
        out.append(_expand(state.z, basis))
        if progress is not None:
            progress(len(out), config.n_mc)
    log.debug("integrated %d steps (dr=%.6g)", state.step_index, dr)
    return out


def energy(z: np.ndarray, y: np.ndarray, potential) -> float:
    """``|y|^2 / 2 + V(z)`` summed over columns, for a column potential ``V``."""
    return 0.5 * float(np.sum(y * y)) + float(np.sum(potential(z)))
