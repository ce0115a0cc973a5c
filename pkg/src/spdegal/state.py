"""Physical state vectors as truncated Fourier coefficient collections.

A Field stores one named physical quantity (scalar or d-vector) as complex
coefficients on the full mode lattice of a SpectralBasis, both +k and -k,
with Hermitian symmetry coeff(-k) = conj(coeff(k)) so the physical field is
real.  Products of fields are formed pseudo-spectrally on zero-padded
collocation grids; truncation back to the basis is the dealiasing step.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeMismatchError, StateIntegrityError
from .spectral import GalerkinLevel, SpectralBasis, galerkin_project

_PADS = (1.0, 1.5, 2.0)

HERMITIAN_TOL = 1e-12
DIVFREE_TOL = 1e-12


def grid_shape(basis: SpectralBasis, pad: float) -> tuple[int, ...]:
    """Collocation grid: per axis the smallest even integer >= pad*(2*cutoff+1)."""
    if pad not in _PADS:
        raise ConfigurationError(f"pad must be one of {_PADS}, got {pad}")
    g = int(np.ceil(pad * (2 * basis.cutoff + 1)))
    if g % 2:
        g += 1
    return (g,) * basis.d


_PLANS: dict[tuple, tuple] = {}


def _plan(basis: SpectralBasis, pad: float) -> tuple:
    """(grid shape, flat mode positions, grid size, fft axes) for a padding."""
    key = (basis.d, basis.cutoff, pad)
    plan = _PLANS.get(key)
    if plan is None:
        shape = grid_shape(basis, pad)
        wrapped = np.mod(basis.modes, shape[0])
        idx = np.ravel_multi_index(wrapped.T, shape)
        idx.setflags(write=False)
        plan = (shape, idx, int(np.prod(shape)), tuple(range(1, basis.d + 1)))
        _PLANS[key] = plan
    return plan


def _scatter_index(basis: SpectralBasis, pad: float) -> np.ndarray:
    """Flat positions of each basis mode inside the padded FFT grid."""
    return _plan(basis, pad)[1]


@dataclass
class Field:
    """One physical field: complex coefficients of shape (components, n_modes)."""

    basis: SpectralBasis
    coeffs: np.ndarray
    divergence_free: bool = False

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.ndim != 2 or self.coeffs.shape[1] != self.basis.n_modes:
            raise ShapeMismatchError(
                f"expected (components, {self.basis.n_modes}) coefficients, "
                f"got {self.coeffs.shape}"
            )
        if self.coeffs.shape[0] not in (1, self.basis.d):
            raise ShapeMismatchError(
                f"field must have 1 or {self.basis.d} components, "
                f"got {self.coeffs.shape[0]}"
            )

    @classmethod
    def _wrap(cls, basis, coeffs, divergence_free=False):
        # internal fast constructor; callers guarantee the invariants
        obj = object.__new__(cls)
        obj.basis = basis
        obj.coeffs = coeffs
        obj.divergence_free = divergence_free
        return obj

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.components == self.basis.d

    def copy(self) -> "Field":
        return Field(self.basis, self.coeffs.copy(), self.divergence_free)

    def zeros_like(self) -> "Field":
        return Field(self.basis, np.zeros_like(self.coeffs), self.divergence_free)

    def hermitian_residual(self) -> float:
        mirror = np.conj(self.coeffs[:, self.basis.conj_index])
        return float(np.max(np.abs(self.coeffs - mirror)))

    def divergence_residual(self) -> float:
        if not self.is_vector:
            return 0.0
        k = self.basis.modes.T.astype(np.float64)
        div = np.sum(k * self.coeffs, axis=0)
        return float(np.max(np.abs(div)))

    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def check_integrity(self):
        s = max(self.scale(), 1e-300)
        if self.hermitian_residual() > HERMITIAN_TOL * s:
            raise StateIntegrityError("Hermitian symmetry violated")
        if self.divergence_free and self.divergence_residual() > DIVFREE_TOL * s:
            raise StateIntegrityError("divergence-free constraint violated")


def hermitian_symmetrize(field: Field) -> Field:
    """Average with the conjugate mirror so the physical field is real."""
    mirror = np.conj(field.coeffs[:, field.basis.conj_index])
    return Field(field.basis, 0.5 * (field.coeffs + mirror), field.divergence_free)


def unit_mode_field(
    basis: SpectralBasis, k, component_weights=None, coeff: complex = 0.5
) -> Field:
    """Real field supported on the +-k pair: coeff at k, conj(coeff) at -k.

    coeff=0.5 gives cos(k.x); coeff=-0.5j gives sin(k.x).
    """
    i = basis.index_of(k)
    j = basis.conj_index[i]
    if component_weights is None:
        ncomp = 1
        weights = np.ones(1)
    else:
        weights = np.asarray(component_weights, dtype=np.float64)
        ncomp = len(weights)
    c = np.zeros((ncomp, basis.n_modes), dtype=np.complex128)
    c[:, i] = coeff * weights
    c[:, j] = np.conj(coeff) * weights
    return Field(basis, c)


def leray_project(f: Field) -> Field:
    """Divergence-free part of a vector field: per mode I - k k^T / |k|^2."""
    if not f.is_vector:
        raise TypeError("Leray projection needs a vector field")
    k = f.basis.modes.T.astype(np.float64)
    kdotc = np.sum(k * f.coeffs, axis=0)
    out = f.coeffs - k * (kdotc / f.basis.mu)
    return Field(f.basis, out, divergence_free=True)


def transform_to_grid(
    basis: SpectralBasis, coeffs: np.ndarray, pad: float, check: bool = True
) -> np.ndarray:
    """Inverse transform of an (m, n_modes) coefficient stack to (m, G, ..., G).

    Raw kernel shared by Field-level transforms and the nonlinear terms; the
    imaginary residue is checked against Hermitian symmetry (skippable on hot
    paths whose inputs are symmetric by construction) and discarded.
    """
    shape, idx, total, axes = _plan(basis, pad)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    buf = np.zeros((coeffs.shape[0], total), dtype=np.complex128)
    buf[:, idx] = coeffs * total
    grid = np.fft.ifftn(buf.reshape((coeffs.shape[0],) + shape), axes=axes)
    if check:
        scale = max(float(np.max(np.abs(grid), initial=0.0)), 1e-300)
        if float(np.max(np.abs(grid.imag), initial=0.0)) > 1e-12 * scale:
            raise StateIntegrityError("non-real physical field (Hermitian symmetry broken)")
    return np.ascontiguousarray(grid.real)


def transform_to_coeffs(basis: SpectralBasis, values: np.ndarray, pad: float) -> np.ndarray:
    """Forward transform of (m, G, ..., G) values, truncated to the basis modes."""
    shape, idx, total, axes = _plan(basis, pad)
    values = np.asarray(values, dtype=np.float64)
    if values.shape[1:] != shape:
        raise ShapeMismatchError(
            f"grid shape {values.shape[1:]} does not match padded grid {shape}"
        )
    spec = np.fft.fftn(values, axes=axes)
    return spec.reshape(values.shape[0], total)[:, idx] / total


def to_physical(f: Field, pad: float = 1.5) -> np.ndarray:
    """Collocation values on the padded grid, shape (components, G, ..., G)."""
    return transform_to_grid(f.basis, f.coeffs, pad)


def to_spectral(
    values: np.ndarray, basis: SpectralBasis, pad: float = 1.5, divergence_free: bool = False
) -> Field:
    """Adjoint of to_physical; truncation to the basis modes dealiases products."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == basis.d:
        values = values[None]
    coeffs = transform_to_coeffs(basis, values, pad)
    return Field(basis, coeffs, divergence_free=divergence_free)


def differentiate(f: Field, kind: str) -> Field:
    """Exact spectral differentiation (multiplication by ik patterns).

    kinds: gradient (scalar -> vector), divergence (vector -> scalar),
    laplacian (any), curl (d=3 vector -> vector; d=2 vector -> scalar and
    scalar -> vector).
    """
    basis = f.basis
    ik = 1j * basis.modes.T.astype(np.float64)
    c = f.coeffs
    if kind == "gradient":
        if f.is_vector:
            raise TypeError("gradient needs a scalar field")
        return Field(basis, ik * c)
    if kind == "divergence":
        if not f.is_vector:
            raise TypeError("divergence needs a vector field")
        return Field(basis, np.sum(ik * c, axis=0, keepdims=True))
    if kind == "laplacian":
        return Field(basis, -basis.mu * c, f.divergence_free)
    if kind == "curl":
        if basis.d == 3:
            if not f.is_vector:
                raise TypeError("3d curl needs a vector field")
            out = np.empty_like(c)
            out[0] = ik[1] * c[2] - ik[2] * c[1]
            out[1] = ik[2] * c[0] - ik[0] * c[2]
            out[2] = ik[0] * c[1] - ik[1] * c[0]
            return Field(basis, out, divergence_free=True)
        if f.is_vector:
            return Field(basis, (ik[0] * c[1] - ik[1] * c[0])[None])
        return Field(basis, np.stack([ik[1] * c[0], -ik[0] * c[0]]))
    raise TypeError(f"unknown differential kind {kind!r}")


class StateVector:
    """Named collection of fields sharing one basis.  Value semantics."""

    def __init__(self, basis: SpectralBasis, fields: dict[str, Field]):
        self.basis = basis
        self.fields = dict(fields)
        for name, f in self.fields.items():
            if f.basis != basis:
                raise ShapeMismatchError(f"field {name!r} lives on a different basis")

    @property
    def roster(self) -> tuple[str, ...]:
        return tuple(self.fields)

    def __getitem__(self, name: str) -> Field:
        return self.fields[name]

    def copy(self) -> "StateVector":
        return StateVector(self.basis, {n: f.copy() for n, f in self.fields.items()})

    def zeros_like(self) -> "StateVector":
        return StateVector(self.basis, {n: f.zeros_like() for n, f in self.fields.items()})

    @classmethod
    def _wrap(cls, basis, fields):
        obj = object.__new__(cls)
        obj.basis = basis
        obj.fields = fields
        return obj

    def map(self, fn) -> "StateVector":
        """New state with fn applied to each coefficient array."""
        return StateVector._wrap(
            self.basis,
            {
                n: Field._wrap(self.basis, fn(n, f.coeffs), f.divergence_free)
                for n, f in self.fields.items()
            },
        )

    def check_roster(self, other: "StateVector"):
        if self.roster != other.roster:
            raise TypeError(f"roster mismatch: {self.roster} vs {other.roster}")

    def __add__(self, other: "StateVector") -> "StateVector":
        self.check_roster(other)
        return self.map(lambda n, c: c + other.fields[n].coeffs)

    def __sub__(self, other: "StateVector") -> "StateVector":
        self.check_roster(other)
        return self.map(lambda n, c: c - other.fields[n].coeffs)

    def __mul__(self, scalar: float) -> "StateVector":
        return self.map(lambda n, c: c * scalar)

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(f.coeffs)) for f in self.fields.values())

    def project(self, level: GalerkinLevel) -> "StateVector":
        if level.n == self.basis.n_modes:
            return self
        return self.map(lambda n, c: galerkin_project(c, self.basis, level))

    def check_integrity(self):
        for f in self.fields.values():
            f.check_integrity()


def inner_product(
    a: StateVector,
    b: StateVector,
    alpha: float = 0.0,
    diffusivities: dict[str, float] | None = None,
) -> float:
    """Real bilinear pairing sum_fields sum_modes (nu*mu)^(2*alpha) Re(conj(a).b).

    With diffusivities=None every field is weighted by mu^(2*alpha) alone
    (the unweighted diagnostic variant); models pass their own per-field
    diffusivities so that <v, v>_alpha matches the operator norms.
    """
    a.check_roster(b)
    total = 0.0
    for name, fa in a.fields.items():
        fb = b.fields[name]
        prod = np.sum(np.real(np.conj(fa.coeffs) * fb.coeffs), axis=0)
        if alpha != 0.0:
            nu = 1.0 if diffusivities is None else diffusivities[name]
            prod = prod * (nu * a.basis.mu) ** (2.0 * alpha)
        total += float(np.sum(prod))
    return total


def h_norm(a: StateVector) -> float:
    return float(np.sqrt(max(inner_product(a, a, 0.0), 0.0)))
