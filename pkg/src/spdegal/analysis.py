"""Experiments exercising the model structure and the Galerkin machinery.

Every experiment is bit-reproducible from (configuration, base seed):
replicate seeds derive injectively from the base seed, all randomness flows
through the counter-based generator in noise.py, and ensemble merging is
order-independent.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .models import EvolutionOperators, random_state
from .noise import NoiseSpec, WienerPath, coarsen_path, lipschitz_report, noise_terms, refine_path, sample_path
from .sde import IntegratorConfig, Trajectory, blowup_flag, integrate
from .spectral import GalerkinLevel
from .state import StateVector, h_norm, inner_product

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def replicate_seed(base_seed: int, replicate: int) -> int:
    """Injective (base seed, replicate id) -> 64-bit stream seed."""
    return (base_seed + _GOLDEN * (replicate + 1)) & _MASK64


@dataclass
class EnsembleSpec:
    """A batch of independent trajectories of one configured system."""

    ops: EvolutionOperators
    nspec: NoiseSpec | None
    cfg: IntegratorConfig
    phi0: StateVector
    replicates: int
    base_seed: int
    cap: float = 1e6
    thresholds: tuple = ()

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")

    def path_for(self, replicate: int) -> WienerPath | None:
        K = 0 if self.nspec is None else self.nspec.K
        if K == 0:
            return None
        return sample_path(
            replicate_seed(self.base_seed, replicate), self.cfg.dt, self.cfg.steps, K
        )

    def run_replicate(self, replicate: int) -> Trajectory:
        """Integrate one member; divergence is recorded, not propagated."""
        try:
            return integrate(self.ops, self.nspec, self.phi0, self.cfg, self.path_for(replicate))
        except DivergenceError as err:
            return err.trajectory

    def run_all(self, threads: int = 1) -> list[Trajectory]:
        ids = range(self.replicates)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(self.run_replicate, ids))
        return [self.run_replicate(i) for i in ids]


# ---------------------------------------------------------------------------
# structural property suite
# ---------------------------------------------------------------------------

@dataclass
class PropertyCheck:
    name: str
    passed: bool
    worst: float
    tol: float
    note: str = ""


@dataclass
class PropertyReport:
    kind: str
    d: int
    cutoff: int
    samples: int
    checks: list[PropertyCheck]
    ratios: dict[str, float]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[PropertyCheck]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            out.append(f"[{status}] {c.name}: worst={c.worst:.3e} tol={c.tol:.1e} {c.note}")
        for name, value in sorted(self.ratios.items()):
            out.append(f"[info] ratio {name}: max={value:.6g}")
        return out


def check_properties(
    ops: EvolutionOperators,
    nspec: NoiseSpec | None,
    samples: int = 1000,
    seed: int = 0,
    oracle_samples: int | None = None,
) -> PropertyReport:
    """Randomized verification of the structural hypotheses of the model.

    Hard checks (pass/fail): energy neutrality and three-slot antisymmetry of
    the advection block, nonnegative pairing of the damping part, exactness
    of the damping+coupling split, Hermitian symmetry of all outputs, noise
    Lipschitz constants against their closed form, Wiener-path
    reproducibility and bridge consistency, and (on small bases) agreement of
    the padded-transform advection with the direct convolution oracle.
    Inequality ratios with unspecified constants are reported, not asserted.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    spec, basis = ops.spec, ops.basis
    checks: list[PropertyCheck] = []
    ratios: dict[str, float] = {}

    worst_neutral = 0.0
    worst_anti = 0.0
    worst_damp = 0.0
    worst_split = 0.0
    worst_herm = 0.0
    growth_max = 0.0
    ratio_names = (
        "advection_three_slot",
        "advection_sq_over_v3a",
        "advection_sq_eighth",
        "reaction_pairing",
        "reaction_sq_over_v4v2",
        "reaction_sq_eighth",
        "reaction_difference",
    )
    for name in ratio_names:
        ratios[name] = 0.0

    for _ in range(samples):
        p1 = random_state(spec, basis, rng, amplitude=rng.uniform(0.5, 2.0))
        p2 = random_state(spec, basis, rng, amplitude=rng.uniform(0.5, 2.0))
        p3 = random_state(spec, basis, rng, amplitude=rng.uniform(0.5, 2.0))
        b12 = ops.advection(p1, p2)
        b13 = ops.advection(p1, p3)
        v1 = np.sqrt(ops.v_norm2(p1))
        v2 = np.sqrt(ops.v_norm2(p2))
        v3 = np.sqrt(ops.v_norm2(p3))

        neutral = abs(inner_product(b12, p2)) / max(v1 * v2 * v2, 1e-300)
        worst_neutral = max(worst_neutral, neutral)

        anti = abs(inner_product(b12, p3) + inner_product(b13, p2))
        worst_anti = max(worst_anti, anti / max(v1 * v2 * v3, 1e-300))

        damping, coupling = ops.reaction_split(p1)
        r1 = damping + coupling
        pairing = inner_product(damping, p1)
        scale = max(h_norm(damping) * h_norm(p1), 1e-300)
        worst_damp = max(worst_damp, -pairing / scale)

        recombined = ops.reaction(p1)
        split_err = max(
            float(np.max(np.abs(r1.fields[n].coeffs - recombined.fields[n].coeffs)))
            for n in r1.fields
        )
        worst_split = max(worst_split, split_err)

        for out in (b12, r1):
            for f in out.fields.values():
                s = max(f.scale(), 1e-300)
                worst_herm = max(worst_herm, f.hermitian_residual() / s)

        growth_max = max(growth_max, h_norm(coupling) / (1.0 + v1))

        h3 = h_norm(p3)
        ratios["advection_three_slot"] = max(
            ratios["advection_three_slot"],
            abs(inner_product(b12, p3)) / max(v1 * v2 * np.sqrt(h3) * np.sqrt(v3), 1e-300),
        )
        b11 = ops.advection(p1, p1)
        a1 = np.sqrt(ops.a_norm2(p1))
        h_b = inner_product(b11, b11)
        ratios["advection_sq_over_v3a"] = max(
            ratios["advection_sq_over_v3a"], h_b / max(v1**3 * a1, 1e-300)
        )
        ratios["advection_sq_eighth"] = max(
            ratios["advection_sq_eighth"],
            ops.graded_norm(b11, 0.125) ** 2 / max(v1**2 * a1**2, 1e-300),
        )
        h2_ = h_norm(p2)
        ratios["reaction_pairing"] = max(
            ratios["reaction_pairing"],
            abs(inner_product(r1, p2))
            / max((1.0 + np.sqrt(h_norm(p1)) * v1 * np.sqrt(a1)) * v1 * h2_, 1e-300),
        )
        ratios["reaction_sq_over_v4v2"] = max(
            ratios["reaction_sq_over_v4v2"],
            inner_product(r1, r1) / max((1.0 + v1**4) * v1**2, 1e-300),
        )
        ratios["reaction_sq_eighth"] = max(
            ratios["reaction_sq_eighth"],
            ops.graded_norm(r1, 0.125) ** 2 / max((1.0 + v1**4) * v1 * a1, 1e-300),
        )
        r2 = ops.reaction(p2)
        diff_v = np.sqrt(ops.v_norm2(p1 - p2))
        ratios["reaction_difference"] = max(
            ratios["reaction_difference"],
            abs(inner_product(r1 - r2, p3))
            / max((1.0 + v1**2 + v2**2) * diff_v * h3, 1e-300),
        )

    checks.append(PropertyCheck("advection_energy_neutral", worst_neutral <= 1e-10, worst_neutral, 1e-10))
    checks.append(PropertyCheck("advection_antisymmetric", worst_anti <= 1e-10, worst_anti, 1e-10))
    checks.append(PropertyCheck("damping_nonnegative_pairing", worst_damp <= 1e-12, worst_damp, 1e-12))
    checks.append(PropertyCheck("reaction_split_exact", worst_split == 0.0, worst_split, 0.0))
    checks.append(PropertyCheck("hermitian_symmetry_preserved", worst_herm <= 1e-12, worst_herm, 1e-12))
    checks.append(
        PropertyCheck(
            "coupling_growth_finite",
            bool(np.isfinite(growth_max)),
            growth_max,
            float("inf"),
            note="max |coupling|/(1+|grad state|)",
        )
    )

    if nspec is not None and nspec.K > 0:
        report = lipschitz_report(nspec, spec.diffusivities)
        worst_lip = 0.0
        pairs = min(max(samples // 10, 10), 200)
        for _ in range(pairs):
            q1 = random_state(spec, basis, rng, amplitude=1.0)
            q2 = random_state(spec, basis, rng, amplitude=1.5)
            g1 = noise_terms(nspec, q1)
            g2 = noise_terms(nspec, q2)
            for alpha, closed in ((0.0, report.L_H), (0.5, report.L_V), (1.0, report.L_DA)):
                diff2 = sum(
                    inner_product(a - b, a - b, alpha, spec.diffusivities)
                    for a, b in zip(g1, g2)
                )
                dphi2 = inner_product(q1 - q2, q1 - q2, alpha, spec.diffusivities)
                sampled = np.sqrt(diff2 / max(dphi2, 1e-300))
                denom = max(closed, 1e-300)
                worst_lip = max(worst_lip, abs(sampled - closed) / denom)
        if nspec.additive:
            # zero Lipschitz constant: sampled differences must vanish exactly
            worst_lip = 0.0 if report.L_H == 0.0 else worst_lip
        checks.append(PropertyCheck("noise_lipschitz_closed_form", worst_lip <= 1e-10, worst_lip, 1e-10))

        probe = sample_path(seed=913, dt=0.25, steps=8, K=nspec.K)
        again = sample_path(seed=913, dt=0.25, steps=8, K=nspec.K)
        repro = float(np.max(np.abs(probe.increments - again.increments), initial=0.0))
        checks.append(PropertyCheck("path_reproducible", repro == 0.0, repro, 0.0))
        fine = probe
        for _ in range(3):
            fine = refine_path(fine)
        back = fine.increments.reshape(nspec.K, probe.steps, -1).sum(axis=2)
        bridge = float(np.max(np.abs(back - probe.increments), initial=0.0))
        checks.append(PropertyCheck("bridge_consistent", bridge <= 1e-13, bridge, 1e-13))

    if basis.n_modes <= 200:
        n_oracle = oracle_samples if oracle_samples is not None else min(10, samples)
        worst_oracle = 0.0
        for _ in range(n_oracle):
            q1 = random_state(spec, basis, rng, amplitude=1.0)
            q2 = random_state(spec, basis, rng, amplitude=1.0)
            fast = ops.advection(q1, q2)
            slow = ops.advection_direct(q1, q2)
            num = np.sqrt(inner_product(fast - slow, fast - slow))
            den = max(np.sqrt(inner_product(slow, slow)), 1e-300)
            worst_oracle = max(worst_oracle, num / den)
        checks.append(PropertyCheck("advection_matches_convolution", worst_oracle <= 1e-11, worst_oracle, 1e-11))

    return PropertyReport(
        kind=spec.kind,
        d=spec.d,
        cutoff=basis.cutoff,
        samples=samples,
        checks=checks,
        ratios=ratios,
    )


# ---------------------------------------------------------------------------
# Galerkin ladder
# ---------------------------------------------------------------------------

@dataclass
class DifferenceReport:
    """Error functional between two truncation levels driven by one path."""

    level_coarse: int
    level_fine: int
    error_sup: float
    error_int: float
    times: np.ndarray
    series_v2: np.ndarray
    series_a2: np.ndarray
    truncated: bool = False


def galerkin_cauchy_study(
    ops: EvolutionOperators,
    nspec: NoiseSpec | None,
    phi0: StateVector,
    levels: list[GalerkinLevel],
    cfg: IntegratorConfig,
    path: WienerPath | None,
) -> list[DifferenceReport]:
    """Integrate the same data and path at nested truncation levels and
    report, for each consecutive pair, the sup of the squared gradient-norm
    difference plus the integrated squared dissipation-norm difference."""
    ns = [ops.basis.check_level(lv) for lv in levels]
    if any(b < a for a, b in zip(ns, ns[1:])):
        raise ValueError(f"levels must be ascending, got {ns}")
    runs = []
    min_steps = None
    for lv in levels:
        run_cfg = IntegratorConfig(cfg.scheme, cfg.dt, cfg.T, level=lv, store_stride=1)
        try:
            traj = integrate(ops, nspec, phi0, run_cfg, path)
        except DivergenceError as err:
            traj = err.trajectory
        runs.append(traj)
        steps_done = len(traj.times) - 1
        min_steps = steps_done if min_steps is None else min(min_steps, steps_done)
    truncated = any(len(t.times) - 1 != min_steps for t in runs)

    reports = []
    for (na, ta), (nb, tb) in zip(zip(ns, runs), zip(ns[1:], runs[1:])):
        v2 = np.zeros(min_steps + 1)
        a2 = np.zeros(min_steps + 1)
        for i in range(min_steps + 1):
            diff = tb.states[i][1] - ta.states[i][1]
            v2[i] = ops.v_norm2(diff)
            a2[i] = ops.a_norm2(diff)
        times = ta.times[: min_steps + 1]
        err_int = float(np.trapezoid(a2, times))
        reports.append(
            DifferenceReport(
                level_coarse=na,
                level_fine=nb,
                error_sup=float(np.max(v2)),
                error_int=err_int,
                times=times,
                series_v2=v2,
                series_a2=a2,
                truncated=truncated,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# moment bounds
# ---------------------------------------------------------------------------

@dataclass
class MomentReport:
    p: int
    estimate: float
    stderr: float
    c_hat: float
    phi0_norm: float
    replicates: int
    stopped_fraction: float
    values: np.ndarray | None = None


def moment_estimate(ens: EnsembleSpec, p: int, threads: int = 1) -> MomentReport:
    """Monte Carlo estimate of E[sup |Phi|^p + integral of |grad Phi|^2 |Phi|^(p-2)]
    up to the capped first-passage time, normalized by (1 + |Phi_0|^p)."""
    if p not in (4, 6, 8):
        raise ValueError(f"p must be one of 4, 6, 8; got {p}")
    trajs = ens.run_all(threads=threads)
    values = np.zeros(len(trajs))
    stopped = 0
    phi0_norm = None
    degenerate = 0
    for i, traj in enumerate(trajs):
        func = traj.running_functional()
        h2 = traj.channel("H2")
        v2 = traj.channel("V2")
        if phi0_norm is None:
            phi0_norm = float(np.sqrt(h2[0]))
        over = np.nonzero(func > ens.cap)[0]
        last = int(over[0]) if len(over) else len(traj.times) - 1
        if len(over) or traj.diverged_at is not None:
            stopped += 1
        if last == 0:
            degenerate += 1
            continue
        t = traj.times[: last + 1]
        sup_part = float(np.max(h2[: last + 1] ** (p / 2.0)))
        weight = v2[: last + 1] * h2[: last + 1] ** ((p - 2) / 2.0)
        values[i] = sup_part + float(np.trapezoid(weight, t))
    if degenerate == len(trajs):
        raise ValueError("degenerate ensemble: every replicate stopped at t=0")
    estimate = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    c_hat = estimate / (1.0 + phi0_norm**p)
    return MomentReport(
        p=p,
        estimate=estimate,
        stderr=stderr,
        c_hat=c_hat,
        phi0_norm=phi0_norm,
        replicates=len(trajs),
        stopped_fraction=stopped / len(trajs),
        values=values,
    )


# ---------------------------------------------------------------------------
# pathwise stability
# ---------------------------------------------------------------------------

@dataclass
class StabilityReport:
    delta: float
    sup_diff_h2: float
    gronwall_budget: float
    times: np.ndarray
    series_diff_h2: np.ndarray
    truncated: bool


def stability_study(
    ops: EvolutionOperators,
    nspec: NoiseSpec | None,
    phi0: StateVector,
    delta: float,
    cfg: IntegratorConfig,
    path: WienerPath | None,
    direction: StateVector | None = None,
) -> StabilityReport:
    """Drive the same path from phi0 and from phi0 + delta*direction and
    report the squared-energy gap plus the quartic Gronwall budget that
    controls it."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if direction is None:
        from .noise import default_noise

        direction = default_noise(ops.spec, ops.basis, K=1, sigma=1.0).shapes[0]
    run_cfg = IntegratorConfig(cfg.scheme, cfg.dt, cfg.T, level=cfg.level, store_stride=1)

    def run(start):
        try:
            return integrate(ops, nspec, start, run_cfg, path)
        except DivergenceError as err:
            return err.trajectory

    t1 = run(phi0)
    t2 = run(phi0 + delta * direction) if delta != 0.0 else run(phi0)
    m = min(len(t1.times), len(t2.times)) - 1
    truncated = (len(t1.times) - 1 != m) or (len(t2.times) - 1 != m)
    diff_h2 = np.zeros(m + 1)
    for i in range(m + 1):
        psi = t1.states[i][1] - t2.states[i][1]
        diff_h2[i] = inner_product(psi, psi)
    v21 = t1.channel("V2")[: m + 1]
    v22 = t2.channel("V2")[: m + 1]
    times = t1.times[: m + 1]
    budget = float(np.trapezoid(1.0 + v21**2 + v22**2, times))
    return StabilityReport(
        delta=delta,
        sup_diff_h2=float(np.max(diff_h2)),
        gronwall_budget=budget,
        times=times,
        series_diff_h2=diff_h2,
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# strong order
# ---------------------------------------------------------------------------

@dataclass
class OrderReport:
    dts: np.ndarray
    errors: np.ndarray
    order: float
    monotone: bool
    paths: int


def strong_order_study(
    ops: EvolutionOperators,
    nspec: NoiseSpec | None,
    phi0: StateVector,
    cfg: IntegratorConfig,
    refinements: int = 6,
    n_paths: int = 32,
    base_seed: int = 0,
) -> OrderReport:
    """Endpoint error against a refined reference path across a dt ladder.

    The reference is the finest refinement (depth = refinements) of each
    path integrated with the same scheme; ladder runs use exact block sums
    of the fine increments, so all runs share one Brownian path.  The ladder
    stops well above the reference step (max(3, refinements-2) rungs) to
    keep the self-convergence bias small.
    """
    if refinements < 3:
        raise ValueError("need at least 3 refinements for a slope")
    K = 0 if nspec is None else nspec.K
    rungs = min(max(3, refinements - 2), refinements)
    ladder = [cfg.dt / 2**j for j in range(rungs)]
    errors = np.zeros(rungs)
    n_used = max(n_paths, 1) if K > 0 else 1
    for rep in range(n_used):
        if K > 0:
            path = sample_path(replicate_seed(base_seed, rep), cfg.dt, cfg.steps, K)
            fine = path
            for _ in range(refinements):
                fine = refine_path(fine)
        else:
            fine = None
        ref_cfg = IntegratorConfig(cfg.scheme, cfg.dt / 2**refinements, cfg.T, level=cfg.level)
        ref = integrate(ops, nspec, phi0, ref_cfg, fine).final_state
        for j, dt_j in enumerate(ladder):
            run_path = coarsen_path(fine, 2 ** (refinements - j)) if fine is not None else None
            run_cfg = IntegratorConfig(cfg.scheme, dt_j, cfg.T, level=cfg.level)
            end = integrate(ops, nspec, phi0, run_cfg, run_path).final_state
            errors[j] += h_norm(end - ref)
    errors /= n_used
    dts = np.array(ladder)
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    monotone = bool(np.all(np.diff(errors) < 0))
    return OrderReport(dts=dts, errors=errors, order=slope, monotone=monotone, paths=n_used)


# ---------------------------------------------------------------------------
# blow-up census
# ---------------------------------------------------------------------------

@dataclass
class GlobalityReport:
    blowup_fraction: float
    quantile_levels: tuple
    functional_quantiles: np.ndarray
    terminal_functionals: np.ndarray
    replicates: int
    cap: float


def globality_experiment(
    ens: EnsembleSpec, d: int | None = None, threads: int = 1
) -> GlobalityReport:
    """Fraction of replicates whose blow-up functional crosses the cap within
    the horizon, plus quantiles of the terminal functional."""
    if d is not None and ens.ops.spec.d != d:
        raise ValueError(f"ensemble is configured for d={ens.ops.spec.d}, not d={d}")
    trajs = ens.run_all(threads=threads)
    terminals = np.zeros(len(trajs))
    blown = 0
    for i, traj in enumerate(trajs):
        flag = blowup_flag(traj, ens.cap)
        if flag is not None:
            blown += 1
        terminals[i] = traj.running_functional()[-1]
    levels = (0.25, 0.5, 0.75, 0.9, 1.0)
    quantiles = np.quantile(terminals, levels)
    return GlobalityReport(
        blowup_fraction=blown / len(trajs),
        quantile_levels=levels,
        functional_quantiles=quantiles,
        terminal_functionals=terminals,
        replicates=len(trajs),
        cap=ens.cap,
    )


def exceedance_probability_study(
    ens: EnsembleSpec, S_values, M: float, threads: int = 1
) -> list[tuple[float, float]]:
    """Estimated probability that the functional climbs by (M-1)^2 above its
    start within small times S; roughly linear through the origin in S."""
    trajs = ens.run_all(threads=threads)
    out = []
    for S in sorted(float(s) for s in S_values):
        hits = 0
        for traj in trajs:
            func = traj.running_functional()
            idx = np.searchsorted(traj.times, S, side="right") - 1
            idx = max(min(idx, len(func) - 1), 0)
            if func[idx] > func[0] + (M - 1.0) ** 2:
                hits += 1
        out.append((S, hits / len(trajs)))
    return out
