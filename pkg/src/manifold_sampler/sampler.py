"""End-to-end generation pipeline and the diagnostics that compare its output with the data."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import isde
from .dataio import DataError, DataMatrix, scale
from .diffmaps import build_basis, median_sq_distance
from .kde import KdeModel
from .normalize import denormalize, empirical_moments, fit_pca, normalize
from .reduction import e_red, select_m

log = logging.getLogger(__name__)

QUANTILES = (0.5, 0.9, 0.95, 0.99, 1.0)


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineOptions:
    """Full configuration of one generation run.

    ``m=None`` selects the basis size from the data with tolerance ``tol``.
    ``reduced=False`` integrates the full-order system instead.
    """

    epsilon: float
    kappa: int = 1
    m: int | None = None
    tol: float = 1e-3
    m_max: int | None = None
    reduced: bool = True
    scale: bool = False
    eps_s: float = 1e-9
    rank_tol: float = 1e-12
    f0: float = 1.5
    fac: float = 20.0
    delta_r: float | None = None
    m0: int = 110
    n_mc: int = 1
    seed: int = 0
    enforce_m0_bound: bool = True
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PipelineReport:
    n: int
    N: int
    nu: int
    reduced: bool
    m_selected: int | None
    gap_m: int | None
    e_red: float | None
    e_red_curve: list = field(default_factory=list)
    eigenvalues: list = field(default_factory=list)
    s: float = 0.0
    s_hat: float = 0.0
    delta_r: float = 0.0
    m0_bound: float = 0.0
    isde: dict = field(default_factory=dict)
    n_mc: int = 0
    n_generated: int = 0
    eta_mean: list = field(default_factory=list)
    eta_cov: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def manifest(options: PipelineOptions, source: str | None = None) -> dict:
    """Inputs needed to replay a run."""
    from . import __version__

    return {"kind": "RunManifest", "version": __version__, "source": source, "options": options.to_dict()}


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DataError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise PipelineError(name, exc) from exc


def generate(x: DataMatrix, options: PipelineOptions, progress=None) -> tuple[np.ndarray, PipelineReport]:
    """Run scale, normalize, KDE, basis, m selection, integration and back-mapping.

    Returns an ``n x (n_mc * N)`` array of generated samples in the units of
    ``x`` and the report.
    """
    t0 = time.perf_counter()
    smap = None
    data = x
    if options.scale:
        data, smap = _stage("scale", scale, x, options.eps_s)
    pca = _stage("normalize", fit_pca, data, options.rank_tol)
    eta = _stage("normalize", normalize, data, pca)
    kde = KdeModel.fit(eta)

    basis = None
    m_sel = gap = err = None
    curve: list = []
    eigenvalues: list = []
    if options.reduced:
        if options.m is None:
            m_max = options.m_max or min(eta.N, 200)
            diag = _stage("select-m", select_m, data, pca, eta, options.epsilon, options.kappa, options.tol, m_max)
            curve = [list(p) for p in zip(diag.m_values, diag.e_red)]
            eigenvalues, gap = diag.eigenvalues, diag.gap_m
            if diag.m_selected is None:
                raise PipelineError("select-m", DataError(f"no m <= {m_max} reaches e_red <= {options.tol}"))
            m_sel = diag.m_selected
        else:
            m_sel = options.m
        basis = _stage("basis", build_basis, eta, options.epsilon, options.kappa, m_sel)
        err = e_red(data, pca, eta, basis)
        eigenvalues = eigenvalues or basis.lam.tolist()

    bound = isde.m0_bound(options.f0, options.fac, kde.s_hat) if options.f0 > 0 else 0.0
    m0 = options.m0
    if options.f0 > 0 and m0 <= bound:
        floor = isde.min_m0(options.f0, options.fac, kde.s_hat)
        log.warning("M0=%d is below the transient-decay bound %.1f", m0, bound)
        if options.enforce_m0_bound:
            log.warning("raising M0 to %d", floor)
            m0 = floor
    config = _stage("isde", isde.IsdeRunConfig, options.f0, options.fac, options.delta_r, m0, options.n_mc, options.seed)
    dr = config.step(kde.s_hat)
    eta_samples = _stage("isde", isde.run, eta, kde, basis, config, options.workers, progress)

    if eta_samples:
        pooled = np.hstack(eta_samples)
        x_gen = denormalize(pooled, pca).values
        if smap is not None:
            x_gen = smap.invert(x_gen)
        mean, cov = empirical_moments(pooled) if pooled.shape[1] > 1 else (pooled.mean(1), np.zeros((pca.nu,) * 2))
        diagnostics = concentration_stats(x, x_gen)
    else:
        x_gen = np.empty((x.n, 0))
        mean, cov = np.full(pca.nu, np.nan), np.full((pca.nu, pca.nu), np.nan)
        diagnostics = {}

    report = PipelineReport(
        n=x.n, N=x.N, nu=pca.nu, reduced=options.reduced, m_selected=m_sel, gap_m=gap, e_red=err,
        e_red_curve=curve, eigenvalues=eigenvalues, s=kde.s, s_hat=kde.s_hat, delta_r=dr, m0_bound=bound,
        isde=config.to_dict(), n_mc=options.n_mc, n_generated=x_gen.shape[1],
        eta_mean=mean.tolist(), eta_cov=cov.tolist(), diagnostics=diagnostics,
    )
    # timing is logged, not reported, so the report stays a pure function of the inputs
    log.info("pipeline finished in %.1f s", time.perf_counter() - t0)
    return x_gen, report


def nearest_distances(points: np.ndarray, reference: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Exact distance from each column of ``points`` to its nearest column of ``reference``."""
    ref_sq = (reference * reference).sum(0)
    out = np.empty(points.shape[1])
    for start in range(0, points.shape[1], chunk):
        p = points[:, start:start + chunk]
        d2 = (p * p).sum(0)[:, None] + ref_sq[None, :] - 2.0 * p.T @ reference
        out[start:start + chunk] = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
    return out


def _quantiles(d: np.ndarray) -> dict:
    return {f"q{int(round(q * 100))}": float(np.quantile(d, q)) for q in QUANTILES}


def concentration_stats(given, generated, reference=None) -> dict:
    """How closely generated samples follow the given ones.

    Reports quantiles of nearest-given-point distances, optionally quantiles
    of exact distance to an analytic ``reference`` manifold (for both sets),
    and the mean/covariance discrepancy.
    """
    g = given.values if isinstance(given, DataMatrix) else np.asarray(given, dtype=float)
    s = generated.values if isinstance(generated, DataMatrix) else np.asarray(generated, dtype=float)
    if g.shape[0] != s.shape[0]:
        raise DataError(f"dimension mismatch: given n={g.shape[0]}, generated n={s.shape[0]}")
    out = {"nn_distance": _quantiles(nearest_distances(s, g))}
    if reference is not None:
        out["manifold_distance_generated"] = _quantiles(reference.distance(s))
        out["manifold_distance_given"] = _quantiles(reference.distance(g))
    mg, cg = empirical_moments(g)
    ms, cs = empirical_moments(s)
    out["mean_abs_diff"] = float(np.max(np.abs(ms - mg)))
    out["cov_rel_diff"] = float(np.linalg.norm(cs - cg) / np.linalg.norm(cg))
    return out


def silverman_1d(v: np.ndarray) -> float:
    """Silverman's rule of thumb ``0.9 min(sd, IQR/1.34) n^{-1/5}``."""
    v = np.asarray(v, dtype=float)
    sd = v.std(ddof=1) if v.size > 1 else 0.0
    q75, q25 = np.percentile(v, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) or sd
    if spread == 0:
        # degenerate sample: a narrow bump relative to the value's magnitude
        spread = 1e-3 * max(1.0, abs(float(v[0])))
    return 0.9 * spread * v.size ** (-0.2)


def marginal_pdf(samples, component: int, grid) -> tuple[np.ndarray, np.ndarray]:
    """1-D Gaussian KDE of one component over ``grid``.

    ``grid`` is an array of points or a ``(lo, hi, num)`` triple.
    """
    v = samples.values if isinstance(samples, DataMatrix) else np.asarray(samples, dtype=float)
    if v.ndim != 2 or v.shape[1] == 0:
        raise DataError("no samples")
    if not 0 <= component < v.shape[0]:
        raise DataError(f"component {component} out of range for n={v.shape[0]}")
    t = np.linspace(*grid) if isinstance(grid, tuple) else np.asarray(grid, dtype=float)
    x = v[component]
    h = silverman_1d(x)
    dens = np.empty(t.size)
    step = max(1, 2**22 // x.size)
    for i in range(0, t.size, step):
        z = (t[i:i + step, None] - x[None, :]) / h
        dens[i:i + step] = np.exp(-0.5 * z * z).sum(axis=1)
    return t, dens / (x.size * h * np.sqrt(2.0 * np.pi))


def epsilon_hint(eta) -> float:
    """Median pairwise squared distance of the normalized data (heuristic only)."""
    return median_sq_distance(eta)
