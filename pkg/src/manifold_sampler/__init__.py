"""Sampling on the manifold that a data set concentrates on.

A kernel-density model of the normalized data drives a damped stochastic
Hamiltonian system; projecting its sample paths onto a diffusion-maps basis
keeps generated realizations on the manifold discovered from the data.
"""

from .dataio import (
    DataMatrix,
    ScalingMap,
    load_csv,
    save_csv,
    scale,
    synth_circles,
    synth_features,
    synth_helix,
)
from .normalize import PcaModel, NormalizedData, fit_pca, normalize, denormalize
from .kde import KdeModel
from .diffmaps import DiffusionBasis, build_basis, spectrum, project
from .reduction import ReductionDiagnostics, e_red, select_m
from .isde import IsdeRunConfig, IsdeState, derive_step, min_m0, verlet_step, run
from .sampler import PipelineOptions, PipelineReport, generate, concentration_stats, marginal_pdf

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "ScalingMap",
    "load_csv",
    "save_csv",
    "scale",
    "synth_circles",
    "synth_features",
    "synth_helix",
    "PcaModel",
    "NormalizedData",
    "fit_pca",
    "normalize",
    "denormalize",
    "KdeModel",
    "DiffusionBasis",
    "build_basis",
    "spectrum",
    "project",
    "ReductionDiagnostics",
    "e_red",
    "select_m",
    "IsdeRunConfig",
    "IsdeState",
    "derive_step",
    "min_m0",
    "verlet_step",
    "run",
    "PipelineOptions",
    "PipelineReport",
    "generate",
    "concentration_stats",
    "marginal_pdf",
]
