"""Time integration of the truncated system, with first-passage tracking.

One trajectory is strictly sequential; ensembles integrate independent
trajectories concurrently (no shared mutable state).  Nonlinear and noise
terms are projected onto the retained modes after evaluation, the dissipative
part acts exactly (diagonally) inside the span.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .models import EvolutionOperators
from .noise import NoiseSpec, WienerPath
from .spectral import GalerkinLevel
from .state import Field, StateVector

SCHEMES = ("euler_maruyama", "exp_euler_maruyama", "semi_implicit")

#: convention recorded in output metadata: trajectories crossing a threshold
#: are frozen at their stopping value for ensemble statistics
STOPPED_PROCESS_CONVENTION = "stopped-process"


@dataclass
class IntegratorConfig:
    scheme: str
    dt: float
    T: float
    level: GalerkinLevel | None = None
    store_stride: int = 0  # 0: keep only the final state

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; use one of {SCHEMES}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.T < self.dt:
            raise ConfigurationError(f"horizon T={self.T} shorter than dt={self.dt}")
        if self.store_stride < 0:
            raise ConfigurationError("store_stride must be >= 0")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class Trajectory:
    """Energy channels per step plus (optionally strided) stored states."""

    times: np.ndarray
    channels: dict[str, np.ndarray]
    states: list[tuple[float, StateVector]]
    final_state: StateVector | None
    diverged_at: float | None = None

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channels:
            raise ValueError(f"trajectory has no channel {name!r}")
        return self.channels[name]

    def running_functional(self) -> np.ndarray:
        """sup_s<=t of the gradient energy plus the trapezoid integral of the
        dissipation energy: the blow-up functional on the time grid."""
        v2 = self.channel("V2")
        a2 = self.channel("A2")
        out = np.maximum.accumulate(v2).astype(np.float64)
        if len(self.times) > 1:
            dts = np.diff(self.times)
            quad = np.concatenate(([0.0], np.cumsum(0.5 * dts * (a2[1:] + a2[:-1]))))
            out = out + quad
        return out


class _NoisePrep:
    """Per-run precomputation of the affine noise family.

    The forcing sum_k sigma_k (psi_k + gain_k phi) dW_k equals the
    dW-weighted sum of the fixed fields sigma_k psi_k plus the scalar
    (sum_k sigma_k gain_k dW_k) times phi; both pieces are evaluated here
    from stacked arrays, with the shape stacks pre-projected to the level.
    """

    def __init__(self, nspec: NoiseSpec, roster, n: int):
        self.K = nspec.K
        self.sig_gain = nspec.sigmas * nspec.gains
        self.stacks = {}
        for name in roster:
            stack = np.stack(
                [nspec.shapes[k].fields[name].coeffs * nspec.sigmas[k] for k in range(nspec.K)]
            )
            stack[..., n:] = 0.0
            self.stacks[name] = stack


def _advance(scheme, ops, prep, phi, dt, dW, n):
    """Shared step kernel; returns (next state, energy of the noise term)."""
    drift = ops.advection(phi, phi, check_inputs=False)
    if ops.has_reaction:
        drift = drift + ops.reaction(phi)
    mult = float(np.dot(prep.sig_gain, dW)) if prep is not None else 0.0
    euler = scheme == "euler_maruyama"
    exponential = scheme == "exp_euler_maruyama"
    noise_sq = 0.0
    out_fields = {}
    basis = ops.basis
    for name, f in phi.fields.items():
        c = f.coeffs
        dcoef = drift.fields[name].coeffs
        ncoef = None
        if prep is not None and prep.K:
            ncoef = np.einsum("k,kcm->cm", dW, prep.stacks[name])
            if mult != 0.0:
                ncoef += mult * c
            noise_sq += float(np.sum(ncoef.real**2 + ncoef.imag**2))
        if euler:
            new = c - dt * (ops.field_dissipation(name, c) + dcoef)
            if ncoef is not None:
                new += ncoef
        else:
            inner = c - dt * dcoef
            if ncoef is not None:
                inner += ncoef
            if exponential:
                new = ops.field_semigroup(name, inner, dt)
            else:
                new = ops.field_resolvent(name, inner, dt)
        if n < basis.n_modes:
            new[..., n:] = 0.0
        out_fields[name] = Field._wrap(basis, new, f.divergence_free)
    return StateVector._wrap(basis, out_fields), noise_sq


def step(
    scheme: str,
    ops: EvolutionOperators,
    nspec: NoiseSpec | None,
    phi: StateVector,
    dt: float,
    dW: np.ndarray,
    level: GalerkinLevel | None = None,
) -> StateVector:
    """One step of the chosen scheme.

    euler_maruyama      phi - dt*(A phi + drift) + noise
    exp_euler_maruyama  exp(-A dt) (phi - dt*drift + noise)
    semi_implicit       (I + dt A)^(-1) (phi - dt*drift + noise)

    where drift is the projected advection+reaction and noise the projected
    increment sum; the exponential and the resolvent act exactly.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    n = ops.basis.n_modes if level is None else ops.basis.check_level(level)
    prep = None
    if nspec is not None and nspec.K > 0:
        prep = _NoisePrep(nspec, phi.roster, n)
    out, _ = _advance(scheme, ops, prep, phi, dt, np.asarray(dW, dtype=np.float64), n)
    return out


def _record(ops, phi, channels, idx, noise_sq):
    h2 = v2 = a2 = 0.0
    elastic_w = getattr(ops, "_w_elastic", 0.0)
    for name, f in phi.fields.items():
        c = f.coeffs
        abs2 = (c.real**2 + c.imag**2).sum(axis=0)
        energy = float(abs2.sum())
        h2 += energy
        if name == "w" and elastic_w:
            a = ops.field_dissipation(name, c)
            v2 += float(np.sum((np.conj(a) * c).real))
            a2 += float(np.sum(a.real**2 + a.imag**2))
        else:
            diag = ops.diag[name]
            v2 += float((diag * abs2).sum())
            a2 += float((diag * diag * abs2).sum())
        channels[f"E_{name}"][idx] = energy
    channels["H2"][idx] = h2
    channels["V2"][idx] = v2
    channels["A2"][idx] = a2
    channels["noise2"][idx] = noise_sq


def integrate(
    ops: EvolutionOperators,
    nspec: NoiseSpec | None,
    phi0: StateVector,
    cfg: IntegratorConfig,
    path: WienerPath | None,
) -> Trajectory:
    """March the truncated system from the projected initial state.

    Deterministic given all inputs.  Raises DivergenceError (carrying the
    truncated trajectory and last finite time) if the state leaves the
    finite range.
    """
    level = cfg.level if cfg.level is not None else ops.basis.full_level()
    if not ops.basis.is_conjugate_closed(level):
        raise ConfigurationError(
            f"level n={level.n} splits a +-k pair; projected states would not stay real"
        )
    steps = cfg.steps
    K = 0 if nspec is None else nspec.K
    if K > 0:
        if path is None:
            raise ConfigurationError("noise directions configured but no path given")
        if path.K != K:
            raise ConfigurationError(f"path has K={path.K}, noise spec has K={K}")
        if path.steps < steps:
            raise ConfigurationError(f"path covers {path.steps} steps, need {steps}")
        if abs(path.dt - cfg.dt) > 1e-12 * cfg.dt:
            raise ConfigurationError(f"path dt={path.dt} does not match config dt={cfg.dt}")
    if cfg.scheme == "euler_maruyama":
        lam = ops.dissipation_scale_max(level)
        if cfg.dt >= 2.0 / lam:
            raise ConfigurationError(
                f"Euler-Maruyama unstable: dt={cfg.dt} >= 2/lambda_max={2.0 / lam:.6g}"
            )

    n = level.n
    phi = phi0.project(level)
    phi.check_integrity()  # in-run states stay consistent by construction
    prep = _NoisePrep(nspec, phi.roster, n) if K > 0 else None
    times = np.arange(steps + 1) * cfg.dt
    names = ["H2", "V2", "A2"] + [f"E_{f}" for f in phi.fields] + ["noise2"]
    channels = {c: np.zeros(steps + 1) for c in names}
    states: list[tuple[float, StateVector]] = []
    _record(ops, phi, channels, 0, 0.0)
    if cfg.store_stride:
        states.append((0.0, phi.copy()))

    zero_dW = np.zeros(0)
    for m in range(steps):
        dW = path.increments[:, m] if K > 0 else zero_dW
        with np.errstate(over="ignore", invalid="ignore"):
            # escaping states overflow before the finiteness check catches them
            nxt, noise_sq = _advance(cfg.scheme, ops, prep, phi, cfg.dt, dW, n)
        if not nxt.is_finite():
            partial = Trajectory(
                times=times[: m + 1],
                channels={k: v[: m + 1] for k, v in channels.items()},
                states=states,
                final_state=phi,
                diverged_at=float(times[m]),
            )
            raise DivergenceError(float(times[m]), partial)
        phi = nxt
        _record(ops, phi, channels, m + 1, noise_sq)
        if cfg.store_stride and (m + 1) % cfg.store_stride == 0:
            states.append((float(times[m + 1]), phi.copy()))

    return Trajectory(times=times, channels=channels, states=states, final_state=phi)


@dataclass
class StoppingTracker:
    """First-passage bookkeeping of the running blow-up functional.

    tau[n] is the first grid time the functional exceeds threshold n
    (inf when not reached before the horizon); the membership flag records
    whether the whole horizon stayed below (M + initial gradient norm)^2.
    """

    thresholds: tuple
    tau: dict
    functional: np.ndarray
    M: float
    T: float
    horizon_in_set: bool

    @property
    def announced(self) -> float:
        """Largest finite first-passage time (estimate of the blow-up time
        announced by the crossed thresholds); inf when none was crossed."""
        hit = [t for t in self.tau.values() if np.isfinite(t)]
        return max(hit) if hit else float("inf")


def track_stopping(traj: Trajectory, thresholds, M: float, T: float) -> StoppingTracker:
    """Scan the trajectory's functional against a ladder of thresholds."""
    for required in ("V2", "A2"):
        if required not in traj.channels:
            raise ValueError(f"trajectory lacks the {required} channel")
    func = traj.running_functional()
    thresholds = tuple(sorted(float(x) for x in thresholds))
    tau = {}
    for n in thresholds:
        above = np.nonzero(func > n)[0]
        tau[n] = float(traj.times[above[0]]) if len(above) else float("inf")
    v0 = float(np.sqrt(max(traj.channels["V2"][0], 0.0)))
    in_horizon = traj.times <= T + 1e-12
    bound = (M + v0) ** 2
    horizon_ok = bool(np.all(func[in_horizon] <= bound)) and traj.diverged_at is None
    return StoppingTracker(
        thresholds=thresholds,
        tau=tau,
        functional=func,
        M=M,
        T=T,
        horizon_in_set=horizon_ok,
    )


def blowup_flag(traj: Trajectory, cap: float):
    """First time the running functional exceeds cap, or the divergence time.

    Returns None when neither happens.
    """
    if not cap > 0:
        raise ValueError("cap must be positive")
    func = traj.running_functional()
    above = np.nonzero(func > cap)[0]
    crossing = float(traj.times[above[0]]) if len(above) else None
    if traj.diverged_at is not None:
        if crossing is None:
            return traj.diverged_at
        return min(crossing, traj.diverged_at)
    return crossing
