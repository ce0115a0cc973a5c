"""Affine multiplicative noise family and reproducible Brownian increments.

The forcing is sum_k g_k(Phi) d(beta_k) with g_k(Phi) = sigma_k * (psi_k +
gain_k * Phi), truncated to K directions.  Affine maps have the same exact
Lipschitz constant (sum_k sigma_k^2 gain_k^2)^(1/2) in every norm scale, so
the structural noise hypotheses hold by construction and are verifiable in
closed form.

Randomness comes from the counter-based philox4x64-10 generator (numpy
Philox) with Gaussians via numpy's ziggurat standard_normal.  Streams are
split by 128-bit key (seed, direction, refinement_depth), so every draw is
reproducible from those three integers alone: increments never depend on
execution order, thread count, or platform.
"""

from dataclasses import dataclass

import numpy as np

from .models import ModelSpec, state_template
from .spectral import SpectralBasis
from .state import StateVector, inner_product, leray_project

GENERATOR_NAME = "philox4x64-10/numpy, gaussian=ziggurat"


def _stream(seed: int, direction: int, depth: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a nonnegative 64-bit integer")
    words = [seed & 0xFFFFFFFFFFFFFFFF, ((direction << 32) | depth) & 0xFFFFFFFFFFFFFFFF]
    return np.random.Generator(np.random.Philox(key=np.array(words, dtype=np.uint64)))


@dataclass
class WienerPath:
    """Increments of K independent Brownian motions on a uniform grid.

    Fully determined by (seed, dt, steps, K, depth); depth counts bridge
    refinements so nested refinements stay reproducible.
    """

    seed: int
    dt: float
    steps: int
    K: int
    depth: int = 0
    increments: np.ndarray | None = None

    def __post_init__(self):
        if self.increments is None:
            raise ValueError("use sample_path to construct a WienerPath")


def sample_path(seed: int, dt: float, steps: int, K: int) -> WienerPath:
    """K x steps array of independent N(0, dt) increments, one substream per direction."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    inc = np.empty((K, steps), dtype=np.float64)
    root = np.sqrt(dt)
    for k in range(K):
        inc[k] = _stream(seed, k, 0).standard_normal(steps) * root
    return WienerPath(seed=seed, dt=dt, steps=steps, K=K, depth=0, increments=inc)


def refine_path(path: WienerPath) -> WienerPath:
    """Brownian-bridge midpoint insertion: halves dt, doubles steps.

    Consecutive fine increments sum to the coarse increment (to rounding);
    the midpoint draws come from the (seed, direction, depth+1) streams, so
    refinement is deterministic given the path's seed.
    """
    half = path.increments * 0.5
    fine = np.empty((path.K, 2 * path.steps), dtype=np.float64)
    root = np.sqrt(path.dt / 4.0)
    for k in range(path.K):
        xi = _stream(path.seed, k, path.depth + 1).standard_normal(path.steps) * root
        fine[k, 0::2] = half[k] + xi
        fine[k, 1::2] = half[k] - xi
    return WienerPath(
        seed=path.seed,
        dt=path.dt / 2.0,
        steps=2 * path.steps,
        K=path.K,
        depth=path.depth + 1,
        increments=fine,
    )


def coarsen_path(path: WienerPath, factor: int) -> WienerPath:
    """Sum consecutive blocks of increments (exact coupling for scheme ladders).

    Coarsened paths are for integration only; refining one would not
    reproduce the original midpoint streams.
    """
    if path.steps % factor:
        raise ValueError(f"steps {path.steps} not divisible by factor {factor}")
    blocks = path.increments.reshape(path.K, path.steps // factor, factor)
    return WienerPath(
        seed=path.seed,
        dt=path.dt * factor,
        steps=path.steps // factor,
        K=path.K,
        depth=path.depth,
        increments=blocks.sum(axis=2),
    )


@dataclass
class NoiseSpec:
    """K noise directions: amplitudes sigma_k > 0, shapes psi_k, gains >= 0.

    gains all zero is additive noise; positive gains make the forcing
    amplitude follow the state.
    """

    sigmas: np.ndarray
    gains: np.ndarray
    shapes: list[StateVector]

    def __post_init__(self):
        self.sigmas = np.asarray(self.sigmas, dtype=np.float64)
        self.gains = np.asarray(self.gains, dtype=np.float64)
        if self.sigmas.ndim != 1 or self.gains.shape != self.sigmas.shape:
            raise ValueError("sigmas and gains must be 1d arrays of equal length")
        if len(self.shapes) != len(self.sigmas):
            raise ValueError("need one shape state per direction")
        if np.any(self.sigmas <= 0):
            raise ValueError("sigmas must be strictly positive")
        if np.any(self.gains < 0):
            raise ValueError("gains must be nonnegative")

    @property
    def K(self) -> int:
        return len(self.sigmas)

    @property
    def additive(self) -> bool:
        return bool(np.all(self.gains == 0.0))


def default_noise(
    spec: ModelSpec,
    basis: SpectralBasis,
    K: int = 4,
    sigma: float | list = 0.1,
    gain: float | list = 0.0,
    fields: tuple[str, ...] | None = None,
) -> NoiseSpec:
    """Noise spec with smooth low-mode shapes.

    Shape j uses the j-th lowest basis mode on every forced field (all fields
    unless a mask is given), as a cosine for the canonical member of each
    (k, -k) pair and a sine otherwise, Leray-projected on divergence-free
    fields and normalized to unit energy norm per shape.
    """
    if K > basis.n_modes:
        raise ValueError(f"K={K} exceeds the {basis.n_modes} available modes")
    forced = spec.roster if fields is None else tuple(fields)
    unknown = [f for f in forced if f not in spec.roster]
    if unknown:
        raise ValueError(f"noise fields {unknown} not in model roster {spec.roster}")
    sigmas = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (K,)).copy()
    gains = np.broadcast_to(np.asarray(gain, dtype=np.float64), (K,)).copy()
    shapes = []
    for j in range(K):
        psi = state_template(spec, basis)
        i = j
        conj_i = basis.conj_index[i]
        coeff = 0.5 if basis.canonical_mask[i] else -0.5j
        k_vec = basis.modes[i]
        axis = int(np.argmin(np.abs(k_vec)))
        for name in forced:
            f = psi.fields[name]
            weights = np.zeros(f.components)
            weights[min(axis, f.components - 1)] = 1.0
            f.coeffs[:, i] = coeff * weights
            f.coeffs[:, conj_i] = np.conj(coeff) * weights
            if f.divergence_free:
                f.coeffs[:] = leray_project(f).coeffs
        norm = np.sqrt(inner_product(psi, psi))
        if norm <= 0:
            raise ValueError(f"shape {j} vanished after projection")
        shapes.append(psi * (1.0 / norm))
    return NoiseSpec(sigmas=sigmas, gains=gains, shapes=shapes)


def noise_terms(nspec: NoiseSpec, phi: StateVector) -> list[StateVector]:
    """The K forcing fields sigma_k * (psi_k + gain_k * phi)."""
    out = []
    for k in range(nspec.K):
        psi = nspec.shapes[k]
        psi.check_roster(phi)
        if nspec.gains[k] == 0.0:
            out.append(psi * float(nspec.sigmas[k]))
        else:
            out.append((psi + phi * float(nspec.gains[k])) * float(nspec.sigmas[k]))
    return out


@dataclass(frozen=True)
class LipschitzReport:
    """Exact affine constants of the noise map, per norm scale."""

    L_H: float
    L_V: float
    L_DA: float
    growth_H: float
    growth_V: float
    growth_DA: float


def lipschitz_report(nspec: NoiseSpec, diffusivities: dict[str, float] | None = None) -> LipschitzReport:
    """Closed-form Lipschitz and growth constants on the three norm scales.

    For the affine family the Lipschitz constant is (sum sigma^2 gain^2)^(1/2)
    in every scale; growth adds the shape energies of that scale.
    """
    lip = float(np.sqrt(np.sum(nspec.sigmas**2 * nspec.gains**2)))
    growth = []
    for alpha in (0.0, 0.5, 1.0):
        shape2 = sum(
            float(s**2) * inner_product(psi, psi, alpha, diffusivities)
            for s, psi in zip(nspec.sigmas, nspec.shapes)
        )
        growth.append(lip + float(np.sqrt(max(shape2, 0.0))))
    return LipschitzReport(lip, lip, lip, *growth)
