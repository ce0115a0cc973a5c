"""Fourier mode bookkeeping on the torus [0, 2*pi)^d.

The basis is the family of nonzero integer wave vectors k with |k_i| <= cutoff,
ordered by (|k|^2, lexicographic k).  The zero mode is excluded throughout
(mean-zero fields), so the base Laplacian is strictly positive on the span.
Eigenvalues are stored diffusivity-free (mu_k = |k|^2); models scale them by
their own diffusivities.
"""

from dataclasses import dataclass
from functools import cached_property
import itertools

import numpy as np

from .errors import ConfigurationError, ShapeMismatchError


def enumerate_modes(d: int, cutoff: int) -> np.ndarray:
    """All nonzero integer vectors k with |k_i| <= cutoff, sorted by (|k|^2, lex).

    Returns an (n_modes, d) int array.  The ordering is deterministic across
    runs and platforms; it fixes the nesting of the Galerkin spaces.
    """
    if d not in (2, 3):
        raise ConfigurationError(f"dimension must be 2 or 3, got {d}")
    if cutoff < 1:
        raise ConfigurationError(f"cutoff must be >= 1, got {cutoff}")
    rng = range(-cutoff, cutoff + 1)
    modes = [k for k in itertools.product(rng, repeat=d) if any(k)]
    modes.sort(key=lambda k: (sum(c * c for c in k), k))
    return np.array(modes, dtype=np.int64)


@dataclass(frozen=True)
class GalerkinLevel:
    """Number of retained modes per scalar field."""

    n: int


class SpectralBasis:
    """Ordered mode lattice with eigenvalues and nested truncation projections.

    Immutable after construction; safe to share read-only across workers.
    """

    def __init__(self, d: int, cutoff: int):
        self.d = int(d)
        self.cutoff = int(cutoff)
        self.modes = enumerate_modes(d, cutoff)
        self.modes.setflags(write=False)
        self.n_modes = len(self.modes)
        self.mu = (self.modes.astype(np.float64) ** 2).sum(axis=1)
        self.mu.setflags(write=False)
        self._index = {tuple(k): i for i, k in enumerate(self.modes.tolist())}

    def __repr__(self):
        return f"SpectralBasis(d={self.d}, cutoff={self.cutoff}, n_modes={self.n_modes})"

    def __eq__(self, other):
        return (
            isinstance(other, SpectralBasis)
            and self.d == other.d
            and self.cutoff == other.cutoff
        )

    def __hash__(self):
        return hash((self.d, self.cutoff))

    def index_of(self, k) -> int:
        """Position of wave vector k in the ordering; KeyError if absent."""
        return self._index[tuple(int(c) for c in k)]

    @cached_property
    def conj_index(self) -> np.ndarray:
        """conj_index[i] = position of -k_i (Hermitian partner of mode i)."""
        idx = np.array([self._index[tuple((-k).tolist())] for k in self.modes])
        idx.setflags(write=False)
        return idx

    @cached_property
    def canonical_mask(self) -> np.ndarray:
        """True for the lexicographically greater member of each (k, -k) pair."""
        mask = np.array(
            [tuple(k) > tuple(-c for c in k) for k in self.modes.tolist()], dtype=bool
        )
        mask.setflags(write=False)
        return mask

    def full_level(self) -> GalerkinLevel:
        return GalerkinLevel(self.n_modes)

    def level_for_radius(self, radius: float) -> GalerkinLevel:
        """Level retaining every mode with |k| <= radius (complete eigenvalue shells).

        Shell levels are conjugate-closed and nested, so they realize the
        textbook Galerkin ladder while keeping projected fields real.
        """
        n = int(np.searchsorted(self.mu, radius * radius, side="right"))
        if n < 1:
            raise ConfigurationError(f"radius {radius} retains no modes")
        return GalerkinLevel(n)

    def check_level(self, level: GalerkinLevel) -> int:
        if not 1 <= level.n <= self.n_modes:
            raise ConfigurationError(
                f"level n={level.n} out of range [1, {self.n_modes}]"
            )
        return level.n

    def is_conjugate_closed(self, level: GalerkinLevel) -> bool:
        n = self.check_level(level)
        return bool((self.conj_index[:n] < n).all())

    def check_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs)
        if coeffs.shape[-1] != self.n_modes:
            raise ShapeMismatchError(
                f"coefficient array has {coeffs.shape[-1]} modes, basis has {self.n_modes}"
            )
        return coeffs


def sobolev_seminorm(
    basis: SpectralBasis, coeffs: np.ndarray, alpha: float, diffusivity: float = 1.0
) -> float:
    """Fractional-power norm (sum_k (nu*mu_k)^(2*alpha) |c_k|^2)^(1/2).

    alpha=0 is the energy (L2) norm, alpha=1/2 the gradient norm, alpha=1 the
    norm of the dissipative operator applied to the field.  Leading axes of
    ``coeffs`` (components, fields) are summed over.
    """
    coeffs = basis.check_coeffs(coeffs)
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    weights = (diffusivity * basis.mu) ** (2.0 * alpha)
    return float(np.sqrt(np.sum(weights * np.abs(coeffs) ** 2)))


def galerkin_project(coeffs: np.ndarray, basis: SpectralBasis, level: GalerkinLevel) -> np.ndarray:
    """Retain the first level.n modes in basis order, zero the rest."""
    coeffs = basis.check_coeffs(coeffs)
    n = basis.check_level(level)
    out = coeffs.copy()
    out[..., n:] = 0.0
    return out


def galerkin_tail(coeffs: np.ndarray, basis: SpectralBasis, level: GalerkinLevel) -> np.ndarray:
    """Complement of galerkin_project: zero the first level.n modes."""
    coeffs = basis.check_coeffs(coeffs)
    n = basis.check_level(level)
    out = coeffs.copy()
    out[..., :n] = 0.0
    return out


def poincare_gap(
    basis: SpectralBasis,
    coeffs: np.ndarray,
    level: GalerkinLevel,
    a1: float,
    a2: float,
    diffusivity: float = 1.0,
) -> tuple[float, float]:
    """Tail norm at exponent a1 and its spectral-gap bound from exponent a2.

    Returns (|Q_n v|_{a1}, lambda_n^(a1-a2) |Q_n v|_{a2}) with
    lambda_n = diffusivity * mu of the n-th retained mode.  The first value
    never exceeds the second (exact in spectral coordinates, up to rounding).
    """
    if not a1 < a2:
        raise ValueError(f"need a1 < a2, got a1={a1}, a2={a2}")
    n = basis.check_level(level)
    tail = galerkin_tail(coeffs, basis, level)
    lam_n = diffusivity * basis.mu[n - 1]
    lhs = sobolev_seminorm(basis, tail, a1, diffusivity)
    bound = lam_n ** (a1 - a2) * sobolev_seminorm(basis, tail, a2, diffusivity)
    return lhs, bound
