"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (straight to the terminal, bypassing capture).

Experiment benchmarks are frozen in configs/*.toml; the tests parse those
files so the command-line tool and the suite exercise identical parameters.
"""

import os
import sys

import numpy as np
import pytest

from spdegal import analysis, cli
from spdegal.config import parse_config
from spdegal.models import EvolutionOperators, ModelSpec, random_state, state_template
from spdegal.noise import default_noise, lipschitz_report, noise_terms, sample_path
from spdegal.sde import IntegratorConfig, integrate
from spdegal.spectral import GalerkinLevel, SpectralBasis, poincare_gap
from spdegal.state import Field, h_norm, inner_product, to_physical

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

MODEL_PARAMS = {
    "cbf": dict(nu=1.0, alpha=0.5, beta=0.2),
    "mhd": dict(nu=1.0, kappa=0.8),
    "boussinesq": dict(nu=1.0, kappa=0.7, alpha=0.3, beta=0.1),
    "dynamo": dict(nu1=1.0, nu2=0.9, nu3=0.8),
    "micropolar": dict(mu=0.8, chi=0.3, gamma=0.6, nu=0.9, elastic=0.4),
    "tropical": dict(nu1=1.0, nu2=0.9, nu3=0.8),
}


_REPORT_LINES: list[str] = []


def _report(number: int, name: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    line = f"ACCEPTANCE {number} [{name}]: {status} {detail}"
    _REPORT_LINES.append(line)
    print(line, file=sys.__stdout__, flush=True)  # live echo under -s
    assert passed, f"criterion {number} ({name}): {detail}"


def load_config(filename: str):
    with open(os.path.join(CONFIG_DIR, filename), "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def all_model_combos():
    for kind, params in MODEL_PARAMS.items():
        for d, cutoff in ((2, 4), (3, 2)):
            p = dict(params)
            if kind == "dynamo" and d == 3:
                p["sigma"] = 0.5
            yield kind, d, cutoff, p


def test_criterion_1_condition_suite():
    worst_neutral = worst_anti = worst_damp = worst_lip = 0.0
    for kind, d, cutoff, params in all_model_combos():
        basis = SpectralBasis(d, cutoff)
        spec = ModelSpec.build(kind, d, **params)
        ops = EvolutionOperators(spec, basis)
        nspec = default_noise(spec, basis, K=2, sigma=0.1, gain=0.7)
        closed = lipschitz_report(nspec, spec.diffusivities)
        rng = np.random.Generator(np.random.Philox(key=1))
        for _ in range(1000):
            p1 = random_state(spec, basis, rng, amplitude=rng.uniform(0.5, 2.0))
            p2 = random_state(spec, basis, rng, amplitude=rng.uniform(0.5, 2.0))
            p3 = random_state(spec, basis, rng, amplitude=rng.uniform(0.5, 2.0))
            b12 = ops.advection(p1, p2)
            b13 = ops.advection(p1, p3)
            v1, v2, v3 = (np.sqrt(ops.v_norm2(x)) for x in (p1, p2, p3))
            worst_neutral = max(
                worst_neutral, abs(inner_product(b12, p2)) / (v1 * v2 * v2)
            )
            worst_anti = max(
                worst_anti,
                abs(inner_product(b12, p3) + inner_product(b13, p2)) / (v1 * v2 * v3),
            )
            damping, _ = ops.reaction_split(p1)
            scale = max(h_norm(damping) * h_norm(p1), 1e-300)
            worst_damp = max(worst_damp, -inner_product(damping, p1) / scale)
            g1 = noise_terms(nspec, p1)
            g2 = noise_terms(nspec, p2)
            diff2 = sum(inner_product(a - b, a - b) for a, b in zip(g1, g2))
            sampled = np.sqrt(diff2) / h_norm(p1 - p2)
            worst_lip = max(worst_lip, abs(sampled - closed.L_H) / closed.L_H)
    ok = worst_neutral <= 1e-10 and worst_anti <= 1e-10 and worst_damp <= 1e-12 and worst_lip <= 1e-10
    _report(
        1,
        "condition suite",
        ok,
        f"neutrality={worst_neutral:.2e} antisym={worst_anti:.2e} "
        f"damping={worst_damp:.2e} lipschitz={worst_lip:.2e}",
    )


def test_criterion_2_oracle_equivalence():
    worst = 0.0
    for kind, params in MODEL_PARAMS.items():
        basis = SpectralBasis(2, 4)
        spec = ModelSpec.build(kind, 2, **params)
        ops = EvolutionOperators(spec, basis)
        rng = np.random.Generator(np.random.Philox(key=2))
        for _ in range(100):
            p1 = random_state(spec, basis, rng)
            p2 = random_state(spec, basis, rng)
            fast = ops.advection(p1, p2)
            slow = ops.advection_direct(p1, p2)
            rel = h_norm(fast - slow) / max(h_norm(slow), 1e-300)
            worst = max(worst, rel)
    _report(2, "oracle equivalence", worst <= 1e-11, f"max rel diff={worst:.2e}")


def test_criterion_3_exactness_anchors():
    # (a) single-mode heat decay under the exponential scheme, any dt
    basis = SpectralBasis(2, 4)
    spec = ModelSpec.build("cbf", 2, nu=1.3)
    ops = EvolutionOperators(spec, basis)
    phi0 = state_template(spec, basis)
    i = basis.index_of((0, 1))
    phi0.fields["u"].coeffs[0, i] = -0.5j
    phi0.fields["u"].coeffs[0, basis.conj_index[i]] = 0.5j
    h0 = inner_product(phi0, phi0)
    worst_heat = 0.0
    for dt in (0.2, 0.05, 0.004):
        traj = integrate(ops, None, phi0, IntegratorConfig("exp_euler_maruyama", dt, 0.4), None)
        expected = h0 * np.exp(-2 * 1.3 * traj.times)
        worst_heat = max(worst_heat, float(np.max(np.abs(traj.channels["H2"] - expected) / expected)))
    # (b) spectral-gap inequality on 10^4 random samples
    rng = np.random.default_rng(3)
    gap_ok = True
    worst_slack = 0.0
    for _ in range(10_000):
        v = rng.standard_normal((1, basis.n_modes)) + 1j * rng.standard_normal((1, basis.n_modes))
        n = int(rng.integers(1, basis.n_modes))
        a1, a2 = np.sort(rng.uniform(-1.0, 1.5, size=2))
        if a1 == a2:
            continue
        lhs, bound = poincare_gap(basis, v, GalerkinLevel(n), a1, a2)
        if bound > 0:
            worst_slack = max(worst_slack, (lhs - bound) / bound)
        gap_ok = gap_ok and lhs <= bound * (1 + 1e-12) + 1e-300
    # (c) Taylor-Green and equal-fields cancellations
    tg = state_template(spec, basis)
    for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        j = basis.index_of((sx, sy))
        tg.fields["u"].coeffs[0, j] = -0.25j * sx
        tg.fields["u"].coeffs[1, j] = 0.25j * sy
    tg_residual = h_norm(ops.advection(tg, tg))
    mspec = ModelSpec.build("mhd", 2, nu=1.0, kappa=0.8)
    mops = EvolutionOperators(mspec, basis)
    mstate = random_state(mspec, basis, np.random.default_rng(4))
    mstate.fields["B"].coeffs[:] = mstate.fields["u"].coeffs
    mhd_residual = h_norm(mops.advection(mstate, mstate)) / h_norm(mstate)
    ok = worst_heat < 1e-13 and gap_ok and tg_residual < 1e-11 and mhd_residual < 1e-11
    _report(
        3,
        "exactness anchors",
        ok,
        f"heat={worst_heat:.2e} gap_slack={worst_slack:.2e} "
        f"taylor_green={tg_residual:.2e} equal_fields={mhd_residual:.2e}",
    )


def _run_order(filename):
    cfg = load_config(filename)
    return analysis.strong_order_study(
        cfg.ops,
        cfg.nspec,
        cfg.phi0,
        cfg.integrator,
        refinements=int(cfg.study["refinements"]),
        n_paths=int(cfg.study["paths"]),
        base_seed=cfg.seed,
    )


def test_criterion_4_strong_order():
    add = _run_order("order_additive.toml")
    mult = _run_order("order_multiplicative.toml")
    ok = 0.8 <= add.order <= 1.1 and 0.4 <= mult.order <= 0.6
    _report(4, "strong order", ok, f"additive={add.order:.3f} multiplicative={mult.order:.3f}")


def test_criterion_5_galerkin_cauchy():
    cfg = load_config("cauchy_2d.toml")
    levels = [cfg.basis.level_for_radius(float(r)) for r in cfg.study["levels"]]
    path = sample_path(
        analysis.replicate_seed(cfg.seed, 0), cfg.integrator.dt, cfg.integrator.steps, cfg.nspec.K
    )
    reports = analysis.galerkin_cauchy_study(
        cfg.ops, cfg.nspec, cfg.phi0, levels, cfg.integrator, path
    )
    totals = [r.error_sup + r.error_int for r in reports]
    factors = [
        totals[i] / totals[i + 1] if totals[i + 1] > 0 else float("inf")
        for i in range(len(totals) - 1)
    ]
    ok = all(t > 0 for t in totals[:1]) and all(f >= 2.0 for f in factors)
    _report(
        5,
        "galerkin cauchy",
        ok,
        "totals=" + " ".join(f"{t:.3e}" for t in totals)
        + " factors=" + " ".join(f"{f:.1f}" for f in factors),
    )


def _moment_from_config(cfg, replicates=None):
    ens = analysis.EnsembleSpec(
        ops=cfg.ops,
        nspec=cfg.nspec,
        cfg=cfg.integrator,
        phi0=cfg.phi0,
        replicates=replicates if replicates is not None else int(cfg.ensemble["replicates"]),
        base_seed=cfg.seed,
        cap=float(cfg.ensemble["cap"]),
    )
    return analysis.moment_estimate(ens, p=int(cfg.study["p"]))


def test_criterion_6_moment_bound():
    cfg = load_config("moments_2d.toml")
    rep1 = _moment_from_config(cfg)
    rep2 = _moment_from_config(cfg, replicates=2 * int(cfg.ensemble["replicates"]))
    drift = abs(rep2.estimate - rep1.estimate) / rep1.estimate
    base = _moment_from_config(load_config("moments_scaling_base.toml"))
    double = _moment_from_config(load_config("moments_scaling_double.toml"))
    c_drift = abs(double.c_hat - base.c_hat) / base.c_hat
    ok = (
        np.isfinite(rep1.estimate)
        and rep1.estimate > 0
        and drift < 0.10
        and c_drift < 0.20
    )
    _report(
        6,
        "moment bound",
        ok,
        f"estimate={rep1.estimate:.5f}±{rep1.stderr:.5f} doubling_drift={100*drift:.2f}% "
        f"c_hat {base.c_hat:.4f}->{double.c_hat:.4f} ({100*c_drift:.2f}%)",
    )


def test_criterion_7_globality():
    cfg2 = load_config("globality_2d.toml")
    ens2 = analysis.EnsembleSpec(
        ops=cfg2.ops,
        nspec=cfg2.nspec,
        cfg=cfg2.integrator,
        phi0=cfg2.phi0,
        replicates=int(cfg2.ensemble["replicates"]),
        base_seed=cfg2.seed,
        cap=float(cfg2.ensemble["cap"]),
    )
    rep2 = analysis.globality_experiment(ens2, d=2)
    cfg3 = load_config("globality_3d.toml")
    ens3 = analysis.EnsembleSpec(
        ops=cfg3.ops,
        nspec=cfg3.nspec,
        cfg=cfg3.integrator,
        phi0=cfg3.phi0,
        replicates=int(cfg3.ensemble["replicates"]),
        base_seed=cfg3.seed,
        cap=float(cfg3.ensemble["cap"]),
    )
    rep3 = analysis.globality_experiment(ens3, d=3)  # reported, not asserted
    ok = rep2.blowup_fraction == 0.0 and rep2.replicates == 200
    _report(
        7,
        "2d globality",
        ok,
        f"2d fraction={rep2.blowup_fraction} (max functional={rep2.terminal_functionals.max():.3f}); "
        f"3d fraction={rep3.blowup_fraction} (unasserted)",
    )


def test_criterion_8_stability():
    cfg = load_config("stability_2d.toml")
    path = sample_path(
        analysis.replicate_seed(cfg.seed, 0), cfg.integrator.dt, cfg.integrator.steps, cfg.nspec.K
    )
    zero = analysis.stability_study(cfg.ops, cfg.nspec, cfg.phi0, 0.0, cfg.integrator, path)
    delta = float(cfg.study["delta"])
    sups = []
    for dlt in (delta, delta / 2.0):
        rep = analysis.stability_study(cfg.ops, cfg.nspec, cfg.phi0, dlt, cfg.integrator, path)
        sups.append(np.sqrt(rep.sup_diff_h2))
    ratio = sups[0] / sups[1]
    ok = zero.sup_diff_h2 == 0.0 and np.all(zero.series_diff_h2 == 0.0) and 1.5 <= ratio <= 2.5
    _report(
        8,
        "stability/uniqueness",
        ok,
        f"delta=0 sup={zero.sup_diff_h2} halving_ratio={ratio:.3f}",
    )


def test_criterion_9_determinism(tmp_path):
    heat = """
command = "simulate"
seed = 5

[model]
kind = "cbf"
d = 2
cutoff = 2
nu = 1.0

[initial]
kind = "modes"
[[initial.modes]]
field = "u"
k = [0, 1]
component = 0
im = -0.5

[noise]
K = 2
sigma = 0.1

[integrator]
dt = 0.015625
T = 0.25
"""
    verify_small = """
command = "verify"
seed = 9

[model]
kind = "mhd"
d = 2
cutoff = 3
nu = 1.0
kappa = 0.8

[noise]
K = 2
sigma = 0.1
gain = 0.5

[study]
samples = 50
"""
    jobs = [("simulate", heat, None), ("verify", verify_small, None)]
    for name in (
        "cauchy_2d.toml",
        "moments_2d.toml",
        "stability_2d.toml",
        "globality_2d.toml",
    ):
        jobs.append((name, None, os.path.join(CONFIG_DIR, name)))
    # the order benchmark at reduced path count (same config surface)
    order_small = open(os.path.join(CONFIG_DIR, "order_additive.toml")).read().replace(
        "paths = 64", "paths = 8"
    )
    jobs.append(("order", order_small, None))

    all_ok = True
    details = []
    for label, text, src in jobs:
        cfg_file = tmp_path / f"{label.replace('.toml','')}.toml"
        cfg_file.write_text(text if text is not None else open(src).read())
        outs = []
        for run_id in ("a", "b"):
            out = tmp_path / f"{label}_{run_id}"
            code = cli.main(["--config", str(cfg_file), "--out", str(out)])
            assert code == 0, f"{label} exited {code}"
            outs.append(out)
        for fname in sorted(os.listdir(outs[0])):
            if not (fname.endswith(".csv") or fname.endswith(".txt")):
                continue
            same = (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
            all_ok = all_ok and same
            if not same:
                details.append(f"{label}/{fname} differs")
    _report(9, "determinism", all_ok, "; ".join(details) if details else "all reruns byte-identical")
