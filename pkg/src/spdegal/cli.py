"""Command-line entry point: config in, CSV/snapshot/summary artifacts out.

Exit codes: 0 success, 2 validation failure, 3 divergence, 4 property-suite
failure, 5 I/O failure.  Output bytes are a pure function of (config, seed):
no timestamps, no environment lookups, floats printed with shortest
round-trip representation.
"""

import argparse
import os
import sys

from . import __version__, analysis
from .config import RunConfig, parse_config
from .errors import ConfigurationError, DivergenceError, ValidationError
from .noise import GENERATOR_NAME, sample_path
from .sde import STOPPED_PROCESS_CONVENTION, integrate
from .snapshot import write_snapshot

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_PROPERTY = 4
EXIT_IO = 5


def _fmt(x) -> str:
    return repr(float(x))


def _header_lines(cfg: RunConfig, schema: str) -> list[str]:
    return [
        f"# engine=spdegal {__version__}",
        f"# generator={GENERATOR_NAME}",
        f"# convention={STOPPED_PROCESS_CONVENTION}",
        f"# schema={schema}",
        f"# command={cfg.command}",
        f"# model={cfg.model.kind} d={cfg.model.d} cutoff={cfg.basis.cutoff}",
        f"# seed={cfg.seed}",
    ]


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return _fmt(v)


def _write_csv(path, cfg, schema, columns, rows):
    lines = _header_lines(cfg, schema)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_summary(path, cfg, entries):
    lines = _header_lines(cfg, "summary-v1")
    for key, value in entries:
        lines.append(f"{key} = {value}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _trajectory_rows(traj):
    energies = [c for c in traj.channels if c.startswith("E_")]
    ordered = ["H2", "V2", "A2"] + energies
    columns = ["t"] + ordered + ["func", "noise2"]
    func = traj.running_functional()
    rows = []
    for i, t in enumerate(traj.times):
        row = [t] + [traj.channels[c][i] for c in ordered]
        row += [func[i], traj.channels["noise2"][i]]
        rows.append(row)
    return columns, rows


def _ensemble(cfg: RunConfig) -> analysis.EnsembleSpec:
    return analysis.EnsembleSpec(
        ops=cfg.ops,
        nspec=cfg.nspec,
        cfg=cfg.integrator,
        phi0=cfg.phi0,
        replicates=int(cfg.ensemble["replicates"]),
        base_seed=cfg.seed,
        cap=float(cfg.ensemble["cap"]),
        thresholds=tuple(cfg.ensemble["thresholds"]),
    )


def _cmd_simulate(cfg: RunConfig, out: str, threads: int) -> int:
    K = 0 if cfg.nspec is None else cfg.nspec.K
    path = None
    if K:
        path = sample_path(
            analysis.replicate_seed(cfg.seed, 0), cfg.integrator.dt, cfg.integrator.steps, K
        )
    code = EXIT_OK
    try:
        traj = integrate(cfg.ops, cfg.nspec, cfg.phi0, cfg.integrator, path)
    except DivergenceError as err:
        traj = err.trajectory
        code = EXIT_DIVERGENCE
    columns, rows = _trajectory_rows(traj)
    _write_csv(os.path.join(out, "trajectory.csv"), cfg, "traj-v1", columns, rows)
    if cfg.output.get("snapshot") and traj.final_state is not None:
        write_snapshot(
            os.path.join(out, "final_state.snap"),
            traj.final_state,
            cfg.model.kind,
            float(traj.times[-1]),
        )
    _write_summary(
        os.path.join(out, "summary.txt"),
        cfg,
        [
            ("steps", len(traj.times) - 1),
            ("diverged_at", traj.diverged_at if traj.diverged_at is not None else "none"),
            ("H2_final", _fmt(traj.channels["H2"][-1])),
            ("functional_final", _fmt(traj.running_functional()[-1])),
        ],
    )
    return code


def _cmd_verify(cfg: RunConfig, out: str, threads: int) -> int:
    report = analysis.check_properties(
        cfg.ops, cfg.nspec, samples=int(cfg.study["samples"]), seed=cfg.seed
    )
    lines = _header_lines(cfg, "verify-v1") + report.lines()
    with open(os.path.join(out, "verify.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_summary(
        os.path.join(out, "summary.txt"),
        cfg,
        [
            ("all_passed", report.all_passed),
            ("checks", len(report.checks)),
            ("failures", len(report.failures())),
            ("samples", report.samples),
        ],
    )
    return EXIT_OK if report.all_passed else EXIT_PROPERTY


def _cmd_converge(cfg: RunConfig, out: str, threads: int) -> int:
    levels = [cfg.basis.level_for_radius(float(r)) for r in cfg.study["levels"]]
    K = 0 if cfg.nspec is None else cfg.nspec.K
    path = None
    if K:
        path = sample_path(
            analysis.replicate_seed(cfg.seed, 0), cfg.integrator.dt, cfg.integrator.steps, K
        )
    reports = analysis.galerkin_cauchy_study(
        cfg.ops, cfg.nspec, cfg.phi0, levels, cfg.integrator, path
    )
    rows = [
        (r.level_coarse, r.level_fine, r.error_sup, r.error_int, r.error_sup + r.error_int)
        for r in reports
    ]
    _write_csv(
        os.path.join(out, "cauchy.csv"),
        cfg,
        "cauchy-v1",
        ["level_coarse", "level_fine", "error_sup", "error_int", "error_total"],
        rows,
    )
    for r in reports:
        _write_csv(
            os.path.join(out, f"pair_{r.level_coarse}_{r.level_fine}.csv"),
            cfg,
            "cauchy-series-v1",
            ["t", "diff_V2", "diff_A2"],
            list(zip(r.times, r.series_v2, r.series_a2)),
        )
    totals = [r.error_sup + r.error_int for r in reports]
    factors = [totals[i] / totals[i + 1] if totals[i + 1] > 0 else float("inf") for i in range(len(totals) - 1)]
    _write_summary(
        os.path.join(out, "summary.txt"),
        cfg,
        [("pairs", len(reports)), ("totals", " ".join(_fmt(t) for t in totals))]
        + [(f"factor_{i}", _fmt(f)) for i, f in enumerate(factors)]
        + [("truncated", any(r.truncated for r in reports))],
    )
    return EXIT_OK


def _cmd_moments(cfg: RunConfig, out: str, threads: int) -> int:
    report = analysis.moment_estimate(_ensemble(cfg), p=int(cfg.study["p"]), threads=threads)
    _write_csv(
        os.path.join(out, "moments.csv"),
        cfg,
        "moments-v1",
        ["replicate", "value"],
        [(i, v) for i, v in enumerate(report.values)],
    )
    _write_summary(
        os.path.join(out, "summary.txt"),
        cfg,
        [
            ("p", report.p),
            ("estimate", _fmt(report.estimate)),
            ("stderr", _fmt(report.stderr)),
            ("c_hat", _fmt(report.c_hat)),
            ("phi0_norm", _fmt(report.phi0_norm)),
            ("replicates", report.replicates),
            ("stopped_fraction", _fmt(report.stopped_fraction)),
        ],
    )
    return EXIT_OK


def _cmd_stability(cfg: RunConfig, out: str, threads: int) -> int:
    K = 0 if cfg.nspec is None else cfg.nspec.K
    path = None
    if K:
        path = sample_path(
            analysis.replicate_seed(cfg.seed, 0), cfg.integrator.dt, cfg.integrator.steps, K
        )
    report = analysis.stability_study(
        cfg.ops, cfg.nspec, cfg.phi0, float(cfg.study["delta"]), cfg.integrator, path
    )
    _write_csv(
        os.path.join(out, "stability.csv"),
        cfg,
        "stability-v1",
        ["t", "diff_H2"],
        list(zip(report.times, report.series_diff_h2)),
    )
    _write_summary(
        os.path.join(out, "summary.txt"),
        cfg,
        [
            ("delta", _fmt(report.delta)),
            ("sup_diff_H2", _fmt(report.sup_diff_h2)),
            ("gronwall_budget", _fmt(report.gronwall_budget)),
            ("truncated", report.truncated),
        ],
    )
    return EXIT_OK


def _cmd_order(cfg: RunConfig, out: str, threads: int) -> int:
    report = analysis.strong_order_study(
        cfg.ops,
        cfg.nspec,
        cfg.phi0,
        cfg.integrator,
        refinements=int(cfg.study["refinements"]),
        n_paths=int(cfg.study["paths"]),
        base_seed=cfg.seed,
    )
    _write_csv(
        os.path.join(out, "order.csv"),
        cfg,
        "order-v1",
        ["dt", "error"],
        list(zip(report.dts, report.errors)),
    )
    _write_summary(
        os.path.join(out, "summary.txt"),
        cfg,
        [
            ("order", _fmt(report.order)),
            ("monotone", report.monotone),
            ("paths", report.paths),
        ],
    )
    return EXIT_OK


def _cmd_globality(cfg: RunConfig, out: str, threads: int) -> int:
    report = analysis.globality_experiment(_ensemble(cfg), threads=threads)
    _write_csv(
        os.path.join(out, "globality.csv"),
        cfg,
        "globality-v1",
        ["replicate", "terminal_functional"],
        [(i, v) for i, v in enumerate(report.terminal_functionals)],
    )
    quant = " ".join(_fmt(q) for q in report.functional_quantiles)
    _write_summary(
        os.path.join(out, "summary.txt"),
        cfg,
        [
            ("blowup_fraction", _fmt(report.blowup_fraction)),
            ("cap", _fmt(report.cap)),
            ("replicates", report.replicates),
            ("quantile_levels", " ".join(_fmt(q) for q in report.quantile_levels)),
            ("functional_quantiles", quant),
        ],
    )
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "converge": _cmd_converge,
    "moments": _cmd_moments,
    "stability": _cmd_stability,
    "order": _cmd_order,
    "globality": _cmd_globality,
}


def run(cfg: RunConfig, out_dir: str | None = None, threads: int = 1) -> int:
    """Dispatch a validated config; writes artifacts, returns the exit code."""
    out = out_dir if out_dir is not None else cfg.output["dir"]
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return _COMMANDS[cfg.command](cfg, out, threads)
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spdegal",
        description="Spectral Galerkin engine for stochastic fluid-type systems",
    )
    parser.add_argument("--config", required=True, help="path to a TOML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory (default from config)")
    parser.add_argument("--threads", type=int, default=1, help="ensemble worker threads")
    strictness = parser.add_mutually_exclusive_group()
    strictness.add_argument("--strict", dest="strict", action="store_true", default=True)
    strictness.add_argument("--lenient", dest="strict", action="store_false")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text, strict=args.strict)
    except ValidationError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed is not None:
        if not 0 <= args.seed <= 0xFFFFFFFFFFFFFFFF:
            print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return EXIT_VALIDATION
        cfg.seed = args.seed
    return run(cfg, out_dir=args.out, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
