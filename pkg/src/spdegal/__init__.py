"""spdegal: spectral Galerkin engine for stochastic fluid-type systems on the torus."""

__version__ = "0.1.0"

from .spectral import (
    GalerkinLevel,
    SpectralBasis,
    enumerate_modes,
    galerkin_project,
    galerkin_tail,
    poincare_gap,
    sobolev_seminorm,
)
from .state import (
    Field,
    StateVector,
    differentiate,
    h_norm,
    inner_product,
    leray_project,
    to_physical,
    to_spectral,
    unit_mode_field,
)
from .models import EvolutionOperators, ModelSpec, random_state, state_template
from .noise import NoiseSpec, WienerPath, default_noise, lipschitz_report, noise_terms, refine_path, sample_path
from .sde import IntegratorConfig, StoppingTracker, Trajectory, blowup_flag, integrate, step, track_stopping
from . import analysis

__all__ = [
    "EvolutionOperators",
    "Field",
    "GalerkinLevel",
    "IntegratorConfig",
    "ModelSpec",
    "NoiseSpec",
    "SpectralBasis",
    "StateVector",
    "StoppingTracker",
    "Trajectory",
    "WienerPath",
    "analysis",
    "blowup_flag",
    "default_noise",
    "differentiate",
    "enumerate_modes",
    "galerkin_project",
    "galerkin_tail",
    "h_norm",
    "inner_product",
    "integrate",
    "leray_project",
    "lipschitz_report",
    "noise_terms",
    "poincare_gap",
    "random_state",
    "refine_path",
    "sample_path",
    "sobolev_seminorm",
    "state_template",
    "step",
    "to_physical",
    "to_spectral",
    "track_stopping",
    "unit_mode_field",
]
