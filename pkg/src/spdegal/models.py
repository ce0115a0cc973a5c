"""The six torus-fluid systems behind one evolution-equation interface.

Every model is an instance of

    d(Phi) + [ dissipation(Phi) + advection(Phi, Phi) + reaction(Phi) ] dt
        = sum_k noise_k(Phi) d(beta_k)

with state rosters

    cbf        {u}            damped Navier-Stokes (Brinkman-Forchheimer)
    mhd        {u, B}         magnetohydrodynamics
    boussinesq {u, theta}     Benard convection with background temperature
    dynamo     {u, B, theta}  rotating convective dynamo
    micropolar {u, w, B}      magneto-micropolar fluid
    tropical   {u, v, theta}  diffusive tropical climate model

u and B are divergence-free; w is the micro-rotation (scalar in 2d, vector
in 3d); v is the baroclinic velocity mode (not divergence-free); theta is a
scalar.  The dissipation operator is diagonal per mode and field, except the
micro-rotation block in 3d which adds an elastic grad-div part.  Quadratic
terms are evaluated pseudo-spectrally with 3/2 zero padding (exact for
quadratics); the cubic damping term uses padding 2 (exact for r=3, residual
aliasing accepted for non-integer r in [2,3)).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ResourceGuardError, StateIntegrityError
from .spectral import GalerkinLevel, SpectralBasis
from .state import (
    Field,
    StateVector,
    differentiate,
    hermitian_symmetrize,
    inner_product,
    leray_project,
    transform_to_coeffs,
    transform_to_grid,
)

KINDS = ("cbf", "mhd", "boussinesq", "dynamo", "micropolar", "tropical")
KIND_CODES = {k: i for i, k in enumerate(KINDS)}

ROSTERS = {
    "cbf": ("u",),
    "mhd": ("u", "B"),
    "boussinesq": ("u", "theta"),
    "dynamo": ("u", "B", "theta"),
    "micropolar": ("u", "w", "B"),
    "tropical": ("u", "v", "theta"),
}

_DIVFREE = frozenset({"u", "B"})
_SCALAR = frozenset({"theta"})

# per-kind mapping from coefficient names in configs to the field they diffuse
_DIFFUSIVITY_KEYS = {
    "cbf": {"nu": "u"},
    "mhd": {"nu": "u", "kappa": "B"},
    "boussinesq": {"nu": "u", "kappa": "theta"},
    "dynamo": {"nu1": "u", "nu2": "B", "nu3": "theta"},
    "micropolar": {"gamma": "w", "nu": "B"},
    "tropical": {"nu1": "u", "nu2": "v", "nu3": "theta"},
}


def field_components(kind: str, name: str, d: int) -> int:
    if name in _SCALAR:
        return 1
    if kind == "micropolar" and name == "w":
        return d if d == 3 else 1
    return d


@dataclass
class ModelSpec:
    """Which system plus all physical coefficients.

    diffusivities maps each field in the roster to its (strictly positive)
    viscosity/diffusivity.  For the micropolar model the u entry is the total
    shear coefficient mu+chi and the w entry is gamma.
    """

    kind: str
    d: int
    diffusivities: dict[str, float]
    alpha: float = 0.0  # Darcy damping
    beta: float = 0.0  # Forchheimer damping
    r: float = 3.0  # Forchheimer exponent
    sigma: float = 0.0  # Coriolis parameter (dynamo, 3d only)
    chi: float = 0.0  # micro-rotation coupling
    elastic: float = 0.0  # micro-rotation grad-div coefficient (alpha+beta)
    buoyancy: tuple | None = None  # unit direction e; default last axis
    phi_modes: tuple | None = None  # boussinesq background, ((k, coeff), ...)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.d not in (2, 3):
            raise ConfigurationError(f"dimension must be 2 or 3, got {self.d}")
        missing = [f for f in self.roster if f not in self.diffusivities]
        if missing:
            raise ConfigurationError(f"missing diffusivities for fields {missing}")
        for name, nu in self.diffusivities.items():
            if not nu > 0:
                raise ConfigurationError(f"diffusivity for {name!r} must be > 0, got {nu}")
        if not 2.0 <= self.r <= 3.0:
            raise ConfigurationError(f"exponent r must lie in [2, 3], got {self.r}")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigurationError("damping coefficients must be nonnegative")
        if self.kind == "dynamo" and self.d == 2 and self.sigma != 0.0:
            raise ConfigurationError("Coriolis parameter is zero when d=2")
        if self.kind == "micropolar":
            mu_shear = self.diffusivities["u"] - self.chi
            smallest = min(
                mu_shear,
                self.chi,
                self.diffusivities["w"],
                self.diffusivities["B"],
                self.elastic + self.diffusivities["w"],
            )
            if not smallest > 0:
                raise ConfigurationError(
                    "micropolar coefficients must satisfy "
                    "min(mu, chi, gamma, nu, elastic+gamma) > 0"
                )
        if self.buoyancy is not None:
            e = np.asarray(self.buoyancy, dtype=np.float64)
            if e.shape != (self.d,) or not np.isclose(np.linalg.norm(e), 1.0):
                raise ConfigurationError("buoyancy direction must be a unit d-vector")
            self.buoyancy = tuple(float(c) for c in e)

    @property
    def roster(self) -> tuple[str, ...]:
        return ROSTERS[self.kind]

    @property
    def buoyancy_vector(self) -> np.ndarray:
        if self.buoyancy is not None:
            return np.asarray(self.buoyancy, dtype=np.float64)
        e = np.zeros(self.d)
        e[self.d - 1] = 1.0
        return e

    @classmethod
    def build(cls, kind: str, d: int, **params) -> "ModelSpec":
        """Construct from per-kind coefficient names (nu, kappa, nu1, mu, ...)."""
        if kind not in KINDS:
            raise ConfigurationError(f"unknown model kind {kind!r}")
        keys = dict(_DIFFUSIVITY_KEYS[kind])
        diff = {}
        for key, fname in keys.items():
            if key in params:
                diff[fname] = float(params.pop(key))
        if kind == "micropolar":
            mu_shear = float(params.pop("mu", 0.0))
            chi = float(params.get("chi", 0.0))
            diff["u"] = mu_shear + chi
        if "e" in params:
            params["buoyancy"] = tuple(float(x) for x in params.pop("e"))
        return cls(kind=kind, d=d, diffusivities=diff, **params)


def state_template(spec: ModelSpec, basis: SpectralBasis) -> StateVector:
    """Zero state with the model's roster, component counts and flags."""
    fields = {}
    for name in spec.roster:
        ncomp = field_components(spec.kind, name, spec.d)
        coeffs = np.zeros((ncomp, basis.n_modes), dtype=np.complex128)
        fields[name] = Field(basis, coeffs, divergence_free=name in _DIVFREE)
    return StateVector(basis, fields)


def random_state(
    spec: ModelSpec,
    basis: SpectralBasis,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    decay: float = 1.0,
) -> StateVector:
    """Random smooth state: Gaussian coefficients shaped by (1+mu)^(-decay),
    Hermitian-symmetrized, Leray-projected where required, scaled to the
    requested energy norm."""
    out = state_template(spec, basis)
    envelope = (1.0 + basis.mu) ** (-decay)
    for name, f in out.fields.items():
        shape = f.coeffs.shape
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        f.coeffs[:] = c * envelope
        sym = hermitian_symmetrize(f)
        if f.divergence_free:
            sym = leray_project(sym)
        f.coeffs[:] = sym.coeffs
    norm = np.sqrt(max(inner_product(out, out), 1e-300))
    return out * (amplitude / norm)


def _check_roster(spec: ModelSpec, phi: StateVector, what: str):
    if phi.roster != spec.roster:
        raise TypeError(f"{what}: roster {phi.roster} does not match model {spec.roster}")


class EvolutionOperators:
    """Dissipation, advection and reaction of one model bound to one basis.

    Immutable and shareable; every apply is a pure function of its inputs.
    """

    def __init__(self, spec: ModelSpec, basis: SpectralBasis):
        self.spec = spec
        self.basis = basis
        self.diag = {
            name: spec.diffusivities[name] * basis.mu for name in spec.roster
        }
        self._ik = 1j * basis.modes.T.astype(np.float64)
        self._k = basis.modes.T.astype(np.float64)
        # elastic grad-div block applies only to a 3d micro-rotation field
        self._w_elastic = (
            spec.elastic if spec.kind == "micropolar" and spec.d == 3 else 0.0
        )
        self._phi_grad_grids = None
        if spec.kind == "boussinesq":
            self._phi_grad_grids = self._background_gradient_grids()
        # reactive operator is identically zero for some configurations
        self.has_reaction = not (
            spec.kind == "mhd"
            or (spec.kind == "cbf" and spec.alpha == 0.0 and spec.beta == 0.0)
        )
        self._factor_cache: dict = {}

    # -- background temperature profile (boussinesq) -----------------------

    def background_field(self) -> Field:
        """The fixed background scalar; default cos along the buoyancy axis."""
        basis = self.basis
        coeffs = np.zeros((1, basis.n_modes), dtype=np.complex128)
        entries = self.spec.phi_modes
        if entries is None:
            e_d = tuple(0 if i < self.spec.d - 1 else 1 for i in range(self.spec.d))
            entries = ((e_d, 0.5),)
        for k, c in entries:
            i = basis.index_of(k)
            coeffs[0, i] += c
            coeffs[0, basis.conj_index[i]] += np.conj(c)
        return Field(basis, coeffs)

    def _background_gradient_grids(self) -> np.ndarray:
        phi = self.background_field()
        grad = self._ik * phi.coeffs  # (d, n_modes)
        return transform_to_grid(self.basis, grad, 1.5)

    # -- dissipation --------------------------------------------------------

    def dissipation(self, phi: StateVector) -> StateVector:
        """Diagonal dissipative operator; self-adjoint and positive."""
        _check_roster(self.spec, phi, "dissipation")
        return phi.map(self.field_dissipation)

    def _w_split(self, w: np.ndarray):
        kdotw = np.sum(self._k * w, axis=0)
        parallel = self._k * (kdotw / self.basis.mu)
        return parallel, w - parallel

    def _factors(self, which: str, name: str, dt: float) -> np.ndarray:
        """Cached diagonal multipliers for the semigroup / resolvent."""
        key = (which, name, dt)
        out = self._factor_cache.get(key)
        if out is None:
            diag = self.diag[name]
            if which == "exp":
                out = np.exp(-dt * diag)
            elif which == "exp_elastic":
                out = np.exp(-dt * (diag + self._w_elastic * self.basis.mu))
            elif which == "res":
                out = 1.0 / (1.0 + dt * diag)
            else:
                out = 1.0 / (1.0 + dt * (diag + self._w_elastic * self.basis.mu))
            self._factor_cache[key] = out
        return out

    def field_dissipation(self, name: str, c: np.ndarray) -> np.ndarray:
        out = self.diag[name] * c
        if name == "w" and self._w_elastic:
            out = out + self._w_elastic * self._k * np.sum(self._k * c, axis=0)
        return out

    def field_semigroup(self, name: str, c: np.ndarray, dt: float) -> np.ndarray:
        if name == "w" and self._w_elastic:
            par, perp = self._w_split(c)
            return self._factors("exp_elastic", name, dt) * par + self._factors(
                "exp", name, dt
            ) * perp
        return self._factors("exp", name, dt) * c

    def field_resolvent(self, name: str, c: np.ndarray, dt: float) -> np.ndarray:
        if name == "w" and self._w_elastic:
            par, perp = self._w_split(c)
            return self._factors("res_elastic", name, dt) * par + self._factors(
                "res", name, dt
            ) * perp
        return self._factors("res", name, dt) * c

    def semigroup(self, phi: StateVector, dt: float) -> StateVector:
        """Exact action of exp(-dt * dissipation); diagonal per mode."""
        _check_roster(self.spec, phi, "semigroup")
        return phi.map(lambda name, c: self.field_semigroup(name, c, dt))

    def resolve(self, phi: StateVector, dt: float) -> StateVector:
        """Exact action of (I + dt * dissipation)^(-1)."""
        _check_roster(self.spec, phi, "resolve")
        return phi.map(lambda name, c: self.field_resolvent(name, c, dt))

    def dissipation_scale_max(self, level: GalerkinLevel) -> float:
        """Largest dissipation rate within the level (stability guard)."""
        n = self.basis.check_level(level)
        mu_max = float(self.basis.mu[n - 1])
        rate = max(self.spec.diffusivities[f] for f in self.spec.roster)
        if self._w_elastic:
            rate = max(rate, self.spec.diffusivities["w"] + self._w_elastic)
        return rate * mu_max

    # -- norms tied to this model's coefficients ---------------------------

    def h_norm2(self, phi: StateVector) -> float:
        return inner_product(phi, phi)

    def v_norm2(self, phi: StateVector) -> float:
        """Energy of the half-power of the dissipation operator, <A phi, phi>."""
        return max(inner_product(self.dissipation(phi), phi), 0.0)

    def a_norm2(self, phi: StateVector) -> float:
        a = self.dissipation(phi)
        return inner_product(a, a)

    def graded_norm(self, phi: StateVector, alpha: float) -> float:
        """Diagnostic fractional norm with per-field diffusivity weights."""
        return np.sqrt(
            max(inner_product(phi, phi, alpha, self.spec.diffusivities), 0.0)
        )

    # -- pseudo-spectral quadratic kernels ----------------------------------

    def _advect(self, a: Field, b_coeffs: np.ndarray) -> np.ndarray:
        """(a . grad) b for any component stack b, dealiased quadratically."""
        basis = self.basis
        d = basis.d
        nb = b_coeffs.shape[0]
        db = (self._ik[None, :, :] * b_coeffs[:, None, :]).reshape(nb * d, -1)
        stacked = transform_to_grid(
            basis, np.concatenate([a.coeffs, db]), 1.5, check=False
        )
        A = stacked[:d]
        DB = stacked[d:].reshape((nb, d) + A.shape[1:])
        prod = np.einsum("j...,cj...->c...", A, DB)
        return transform_to_coeffs(basis, prod, 1.5)

    def _advect_background(self, a: Field) -> np.ndarray:
        """(a . grad) of the fixed background scalar, using cached gradients."""
        A = transform_to_grid(self.basis, a.coeffs, 1.5, check=False)
        prod = np.einsum("j...,j...->...", A, self._phi_grad_grids)[None]
        return transform_to_coeffs(self.basis, prod, 1.5)

    def _div_outer(self, v1: Field, v2: Field) -> np.ndarray:
        """Row i of div(v1 (x) v2): d_j (v1_j v2_i), differentiated after product."""
        basis = self.basis
        d = basis.d
        stacked = transform_to_grid(
            basis, np.concatenate([v1.coeffs, v2.coeffs]), 1.5, check=False
        )
        P1, P2 = stacked[:d], stacked[d:]
        prod = (P2[:, None] * P1[None, :]).reshape((d * d,) + P1.shape[1:])
        C = transform_to_coeffs(basis, prod, 1.5).reshape(d, d, -1)
        return np.einsum("j...,ij...->i...", self._ik, C)

    def _forchheimer(self, u: Field) -> np.ndarray:
        """|u|^(r-1) u on the padding-2 grid (exact for r=3)."""
        U = transform_to_grid(self.basis, u.coeffs, 2.0, check=False)
        mag2 = np.sum(U * U, axis=0)
        if self.spec.r == 3.0:
            weight = mag2
        else:
            weight = mag2 ** ((self.spec.r - 1.0) / 2.0)
        return transform_to_coeffs(self.basis, weight[None] * U, 2.0)

    # -- advection ----------------------------------------------------------

    def advection(
        self, phi1: StateVector, phi2: StateVector, check_inputs: bool = True
    ) -> StateVector:
        """Bilinear convective block of the model, dealiased, u-row projected.

        check_inputs=False skips the divergence-free validation; the
        integrator uses it on states it maintains divergence-free itself.
        """
        _check_roster(self.spec, phi1, "advection")
        _check_roster(self.spec, phi2, "advection")
        if check_inputs:
            for phi in (phi1, phi2):
                for name, f in phi.fields.items():
                    if f.divergence_free:
                        s = max(f.scale(), 1e-300)
                        if f.divergence_residual() > 1e-10 * s:
                            raise StateIntegrityError(
                                f"advection input field {name!r} is not divergence-free"
                            )
        kind = self.spec.kind
        basis = self.basis
        out = state_template(self.spec, basis)
        u1 = phi1.fields["u"]
        u_row = self._advect(u1, phi2.fields["u"].coeffs)
        if kind in ("mhd", "dynamo", "micropolar"):
            B1, B2 = phi1.fields["B"], phi2.fields["B"]
            u_row = u_row - self._advect(B1, B2.coeffs)
            b_row = self._advect(u1, B2.coeffs) - self._advect(B1, phi2.fields["u"].coeffs)
            out.fields["B"].coeffs[:] = b_row
        if kind == "tropical":
            u_row = u_row + self._div_outer(phi1.fields["v"], phi2.fields["v"])
            out.fields["v"].coeffs[:] = self._advect(
                u1, phi2.fields["v"].coeffs
            ) + self._advect(phi1.fields["v"], phi2.fields["u"].coeffs)
        if kind in ("boussinesq", "dynamo", "tropical"):
            out.fields["theta"].coeffs[:] = self._advect(u1, phi2.fields["theta"].coeffs)
        if kind == "micropolar":
            out.fields["w"].coeffs[:] = self._advect(u1, phi2.fields["w"].coeffs)
        out.fields["u"].coeffs[:] = leray_project(Field(basis, u_row)).coeffs
        return out

    # -- reaction ------------------------------------------------------------

    def reaction_split(self, phi: StateVector) -> tuple[StateVector, StateVector]:
        """(damping, coupling) parts of the reactive operator.

        The damping part pairs nonnegatively with the state; the coupling
        part is bounded by a constant times (1 + gradient norm).
        """
        _check_roster(self.spec, phi, "reaction")
        kind = self.spec.kind
        basis = self.basis
        damping = state_template(self.spec, basis)
        coupling = state_template(self.spec, basis)
        u = phi.fields["u"]

        if kind in ("cbf", "boussinesq"):
            row = self.spec.alpha * u.coeffs
            if self.spec.beta:
                forch = leray_project(Field(basis, self._forchheimer(u)))
                row = row + self.spec.beta * forch.coeffs
            damping.fields["u"].coeffs[:] = row
        if kind == "boussinesq":
            theta = phi.fields["theta"].coeffs[0]
            e = self.spec.buoyancy_vector
            buoy = leray_project(Field(basis, e[:, None] * theta[None, :]))
            coupling.fields["u"].coeffs[:] = buoy.coeffs
            coupling.fields["theta"].coeffs[:] = self._advect_background(u)
        if kind == "dynamo":
            theta = phi.fields["theta"].coeffs[0]
            d = self.spec.d
            if self.spec.sigma:
                uc = u.coeffs
                rot = np.zeros_like(uc)
                rot[0] = -uc[1]
                rot[1] = uc[0]
                damping.fields["u"].coeffs[:] = (
                    self.spec.sigma * leray_project(Field(basis, rot)).coeffs
                )
            ed = np.zeros(d)
            ed[d - 1] = 1.0
            buoy = leray_project(Field(basis, ed[:, None] * theta[None, :]))
            coupling.fields["u"].coeffs[:] = buoy.coeffs
            coupling.fields["theta"].coeffs[0] = u.coeffs[d - 1]
        if kind == "micropolar":
            chi = self.spec.chi
            w = phi.fields["w"]
            damping.fields["w"].coeffs[:] = 2.0 * chi * w.coeffs
            curl_w = differentiate(w, "curl")
            curl_u = differentiate(u, "curl")
            coupling.fields["u"].coeffs[:] = (
                -chi * leray_project(Field(basis, curl_w.coeffs)).coeffs
            )
            coupling.fields["w"].coeffs[:] = -chi * curl_u.coeffs
        if kind == "tropical":
            v = phi.fields["v"]
            theta = phi.fields["theta"]
            coupling.fields["v"].coeffs[:] = differentiate(theta, "gradient").coeffs
            coupling.fields["theta"].coeffs[:] = differentiate(v, "divergence").coeffs
        return damping, coupling

    def reaction(self, phi: StateVector) -> StateVector:
        damping, coupling = self.reaction_split(phi)
        return damping + coupling

    # -- brute-force convolution oracle --------------------------------------

    def _conv_table(self):
        basis = self.basis
        c = basis.cutoff
        side = 2 * c + 1
        table = -np.ones((side,) * basis.d, dtype=np.int64)
        for i, k in enumerate(basis.modes):
            table[tuple(k + c)] = i
        return table

    def _conv_pairs(self, weight_of_pair, b_coeffs: np.ndarray) -> np.ndarray:
        """Direct convolution: out[:, p+q] += weight(p, q) * b[:, q].

        weight_of_pair(p_index, q_slice) returns the scalar multiplier for
        every pair (p, q) sharing the first index.  No transforms anywhere.
        """
        basis = self.basis
        c = basis.cutoff
        table = self._conv_table()
        out = np.zeros_like(b_coeffs)
        modes = basis.modes
        for p in range(basis.n_modes):
            ksum = modes[p] + modes
            valid = np.all(np.abs(ksum) <= c, axis=1)
            valid &= np.any(ksum != 0, axis=1)
            targets = table[tuple((ksum[valid] + c).T)]
            w = weight_of_pair(p, valid)
            out[:, targets] += w * b_coeffs[:, valid]
        return out

    def _conv_advect(self, a: Field, b_coeffs: np.ndarray) -> np.ndarray:
        modes = self.basis.modes.astype(np.float64)
        a_coeffs = a.coeffs

        def weight(p, valid):
            # sum_j a_j(p) * i q_j, for every valid q
            return np.sum(a_coeffs[:, p][:, None] * (1j * modes[valid].T), axis=0)

        return self._conv_pairs(weight, b_coeffs)

    def _conv_div_outer(self, v1: Field, v2: Field) -> np.ndarray:
        modes = self.basis.modes.astype(np.float64)
        v1_coeffs = v1.coeffs

        def weight(p, valid):
            ksum = modes[p] + modes[valid]
            return np.sum(v1_coeffs[:, p][:, None] * (1j * ksum.T), axis=0)

        return self._conv_pairs(weight, v2.coeffs)

    def advection_direct(self, phi1: StateVector, phi2: StateVector) -> StateVector:
        """Triple-loop convolution oracle for the advection block.

        Bit-independent of the padded-transform path; guarded to small bases.
        """
        if self.basis.n_modes > 200:
            raise ResourceGuardError(
                f"convolution oracle limited to 200 modes, basis has {self.basis.n_modes}"
            )
        _check_roster(self.spec, phi1, "advection_direct")
        _check_roster(self.spec, phi2, "advection_direct")
        kind = self.spec.kind
        basis = self.basis
        out = state_template(self.spec, basis)
        u1 = phi1.fields["u"]
        u_row = self._conv_advect(u1, phi2.fields["u"].coeffs)
        if kind in ("mhd", "dynamo", "micropolar"):
            B1, B2 = phi1.fields["B"], phi2.fields["B"]
            u_row = u_row - self._conv_advect(B1, B2.coeffs)
            out.fields["B"].coeffs[:] = self._conv_advect(
                u1, B2.coeffs
            ) - self._conv_advect(B1, phi2.fields["u"].coeffs)
        if kind == "tropical":
            u_row = u_row + self._conv_div_outer(phi1.fields["v"], phi2.fields["v"])
            out.fields["v"].coeffs[:] = self._conv_advect(
                u1, phi2.fields["v"].coeffs
            ) + self._conv_advect(phi1.fields["v"], phi2.fields["u"].coeffs)
        if kind in ("boussinesq", "dynamo", "tropical"):
            out.fields["theta"].coeffs[:] = self._conv_advect(
                u1, phi2.fields["theta"].coeffs
            )
        if kind == "micropolar":
            out.fields["w"].coeffs[:] = self._conv_advect(u1, phi2.fields["w"].coeffs)
        out.fields["u"].coeffs[:] = leray_project(Field(basis, u_row)).coeffs
        return out
