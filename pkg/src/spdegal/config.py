"""Run configuration: TOML surface, strict validation, object builders.

The config document is TOML with these sections (all keys validated, unknown
keys rejected in strict mode; every violation is collected, not only the
first):

    command = "simulate" | "verify" | "converge" | "moments" | "stability"
              | "order" | "globality"
    seed    = <nonnegative integer>            (default 0)

    [model]      kind, d, cutoff + per-kind coefficients
    [initial]    kind = "random" | "zero" | "modes" (+ parameters)
    [noise]      K, sigma, gain, fields        (section absent -> no noise)
    [integrator] scheme, dt, T, level_radius | level, stride
    [ensemble]   replicates, cap, thresholds, M
    [study]      per-command knobs (samples, levels, p, delta, refinements, paths)
    [output]     dir, csv, snapshot

Model coefficient keys per kind:
    cbf         nu, alpha, beta, r
    mhd         nu, kappa
    boussinesq  nu, kappa, alpha, beta, r, e, phi
    dynamo      nu1, nu2, nu3, sigma
    micropolar  mu, chi, gamma, nu, elastic
    tropical    nu1, nu2, nu3
"""

from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigurationError, ValidationError
from .models import EvolutionOperators, ModelSpec, random_state, state_template
from .noise import NoiseSpec, default_noise
from .sde import IntegratorConfig
from .spectral import GalerkinLevel, SpectralBasis

COMMANDS = ("simulate", "verify", "converge", "moments", "stability", "order", "globality")

_MODEL_KEYS = {
    "cbf": {"kind", "d", "cutoff", "nu", "alpha", "beta", "r"},
    "mhd": {"kind", "d", "cutoff", "nu", "kappa"},
    "boussinesq": {"kind", "d", "cutoff", "nu", "kappa", "alpha", "beta", "r", "e", "phi"},
    "dynamo": {"kind", "d", "cutoff", "nu1", "nu2", "nu3", "sigma"},
    "micropolar": {"kind", "d", "cutoff", "mu", "chi", "gamma", "nu", "elastic"},
    "tropical": {"kind", "d", "cutoff", "nu1", "nu2", "nu3"},
}
_INITIAL_KEYS = {"kind", "amplitude", "decay", "seed", "modes", "radius"}
_NOISE_KEYS = {"K", "sigma", "gain", "fields"}
_INTEGRATOR_KEYS = {"scheme", "dt", "T", "level", "level_radius", "stride"}
_ENSEMBLE_KEYS = {"replicates", "cap", "thresholds", "M"}
_STUDY_KEYS = {"samples", "levels", "p", "delta", "refinements", "paths", "amplitude_scale"}
_OUTPUT_KEYS = {"dir", "csv", "snapshot"}
_TOP_KEYS = {"command", "seed", "model", "initial", "noise", "integrator", "ensemble", "study", "output"}


@dataclass
class RunConfig:
    """Validated run description with all live objects already constructed."""

    command: str
    seed: int
    basis: SpectralBasis
    model: ModelSpec
    ops: EvolutionOperators
    nspec: NoiseSpec | None
    integrator: IntegratorConfig
    phi0: "object"
    ensemble: dict
    study: dict
    output: dict
    raw: dict


def _check_keys(errors, table, allowed, path, strict=True):
    if not strict:
        return
    for key in table:
        if key not in allowed:
            errors.append(f"{path}.{key}: unknown key (strict mode)")


def _build_model(errors, table, strict=True):
    kind = table.get("kind")
    if kind not in _MODEL_KEYS:
        errors.append(f"model.kind: expected one of {sorted(_MODEL_KEYS)}, got {kind!r}")
        return None, None
    _check_keys(errors, table, _MODEL_KEYS[kind], "model", strict)
    d = table.get("d")
    cutoff = table.get("cutoff")
    if not isinstance(d, int) or not isinstance(cutoff, int):
        errors.append("model.d and model.cutoff must be integers")
        return None, None
    params = {
        k: v
        for k, v in table.items()
        if k not in ("kind", "d", "cutoff", "e", "phi") and k in _MODEL_KEYS[kind]
    }
    if "e" in table:
        params["buoyancy"] = tuple(float(x) for x in table["e"])
    if "phi" in table:
        try:
            params["phi_modes"] = tuple(
                (tuple(int(c) for c in row[:-2]), complex(row[-2], row[-1]))
                for row in table["phi"]
            )
        except (TypeError, ValueError, IndexError):
            errors.append("model.phi: expected rows of [k..., re, im]")
    try:
        basis = SpectralBasis(d, cutoff)
        spec = ModelSpec.build(kind, d, **params)
    except (ConfigurationError, TypeError) as exc:
        errors.append(f"model: {exc}")
        return None, None
    if spec.phi_modes is not None:
        for k, _ in spec.phi_modes:
            if len(k) != d or max(abs(c) for c in k) > cutoff or not any(k):
                errors.append(f"model.phi: mode {k} outside the basis")
    return spec, basis


def _build_initial(errors, table, spec, basis, strict=True):
    _check_keys(errors, table, _INITIAL_KEYS, "initial", strict)
    kind = table.get("kind", "random")
    if kind == "zero":
        return state_template(spec, basis)
    if kind == "random":
        seed = table.get("seed", 2025)
        amplitude = float(table.get("amplitude", 1.0))
        decay = float(table.get("decay", 1.0))
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
        phi = random_state(spec, basis, rng, amplitude=amplitude, decay=decay)
        if "radius" in table:
            # band-limit the data to |k| <= radius (after normalization)
            try:
                phi = phi.project(basis.level_for_radius(float(table["radius"])))
            except ConfigurationError as exc:
                errors.append(f"initial.radius: {exc}")
        return phi
    if kind == "modes":
        phi = state_template(spec, basis)
        for row in table.get("modes", []):
            try:
                name = row["field"]
                k = tuple(int(c) for c in row["k"])
                comp = int(row.get("component", 0))
                coeff = complex(float(row.get("re", 0.0)), float(row.get("im", 0.0)))
            except (KeyError, TypeError, ValueError):
                errors.append(f"initial.modes: bad entry {row!r}")
                continue
            if name not in phi.fields:
                errors.append(f"initial.modes: field {name!r} not in roster {phi.roster}")
                continue
            f = phi.fields[name]
            if not 0 <= comp < f.components:
                errors.append(f"initial.modes: component {comp} out of range for {name!r}")
                continue
            try:
                i = basis.index_of(k)
            except KeyError:
                errors.append(f"initial.modes: mode {k} outside the basis")
                continue
            # each entry is Hermitian-completed; list only one of k, -k
            f.coeffs[comp, i] += coeff
            f.coeffs[comp, basis.conj_index[i]] += np.conj(coeff)
        for name, f in phi.fields.items():
            if f.divergence_free and f.divergence_residual() > 1e-12 * max(f.scale(), 1e-300):
                errors.append(f"initial.modes: field {name!r} is not divergence-free")
        return phi
    errors.append(f"initial.kind: expected random|zero|modes, got {kind!r}")
    return None


def _build_noise(errors, table, spec, basis, strict=True):
    if table is None:
        return None
    _check_keys(errors, table, _NOISE_KEYS, "noise", strict)
    K = table.get("K", 4)
    if not isinstance(K, int) or K < 0:
        errors.append(f"noise.K: expected nonnegative integer, got {K!r}")
        return None
    if K == 0:
        return None
    fields = table.get("fields")
    if fields is not None:
        fields = tuple(fields)
    try:
        return default_noise(
            spec,
            basis,
            K=K,
            sigma=table.get("sigma", 0.1),
            gain=table.get("gain", 0.0),
            fields=fields,
        )
    except ValueError as exc:
        errors.append(f"noise: {exc}")
        return None


def _build_integrator(errors, table, basis, strict=True):
    _check_keys(errors, table, _INTEGRATOR_KEYS, "integrator", strict)
    level = None
    if "level" in table and "level_radius" in table:
        errors.append("integrator: give level or level_radius, not both")
    if basis is None:
        if "level" in table or "level_radius" in table:
            errors.append("integrator: level given but the model failed to validate")
    elif "level" in table:
        try:
            level = GalerkinLevel(int(table["level"]))
            basis.check_level(level)
        except (ConfigurationError, ValueError) as exc:
            errors.append(f"integrator.level: {exc}")
            level = None
    elif "level_radius" in table:
        try:
            level = basis.level_for_radius(float(table["level_radius"]))
        except (ConfigurationError, ValueError) as exc:
            errors.append(f"integrator.level_radius: {exc}")
            level = None
    try:
        return IntegratorConfig(
            scheme=table.get("scheme", "exp_euler_maruyama"),
            dt=float(table.get("dt", 1.0 / 256.0)),
            T=float(table.get("T", 1.0)),
            level=level,
            store_stride=int(table.get("stride", 0)),
        )
    except (ConfigurationError, ValueError) as exc:
        errors.append(f"integrator: {exc}")
        return None


def parse_config(text: str, strict: bool = True) -> RunConfig:
    """Parse and fully validate a TOML run configuration.

    Raises ValidationError carrying every violation found.  Syntax errors
    surface immediately with tomli's line/column message.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError([f"syntax: {exc}"]) from exc

    errors: list[str] = []
    if strict:
        _check_keys(errors, raw, _TOP_KEYS, "top-level")

    command = raw.get("command")
    if command not in COMMANDS:
        errors.append(f"command: expected one of {COMMANDS}, got {command!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed > 0xFFFFFFFFFFFFFFFF:
        errors.append(f"seed: expected unsigned 64-bit integer, got {seed!r}")
        seed = 0

    model_table = raw.get("model")
    if not isinstance(model_table, dict):
        errors.append("model: section is required")
        spec = basis = None
    else:
        spec, basis = _build_model(errors, model_table, strict)

    phi0 = nspec = ops = None
    if spec is not None and basis is not None:
        ops = EvolutionOperators(spec, basis)
        phi0 = _build_initial(errors, raw.get("initial", {}), spec, basis, strict)
        noise_table = raw.get("noise")
        if noise_table is not None and not isinstance(noise_table, dict):
            errors.append("noise: expected a section")
        else:
            nspec = _build_noise(errors, noise_table, spec, basis, strict)
    integrator = _build_integrator(errors, raw.get("integrator", {}), basis, strict)

    ensemble = dict(raw.get("ensemble", {}))
    _check_keys(errors, ensemble, _ENSEMBLE_KEYS, "ensemble", strict)
    ensemble.setdefault("replicates", 1)
    ensemble.setdefault("cap", 1e6)
    ensemble.setdefault("thresholds", [])
    ensemble.setdefault("M", 10.0)
    if not (isinstance(ensemble["replicates"], int) and ensemble["replicates"] >= 1):
        errors.append(f"ensemble.replicates: expected integer >= 1, got {ensemble['replicates']!r}")

    study = dict(raw.get("study", {}))
    _check_keys(errors, study, _STUDY_KEYS, "study", strict)
    study.setdefault("samples", 1000)
    study.setdefault("levels", [2, 4, 8, 16])
    study.setdefault("p", 4)
    study.setdefault("delta", 0.01)
    study.setdefault("refinements", 4)
    study.setdefault("paths", 32)
    if study["p"] not in (4, 6, 8):
        errors.append(f"study.p: expected 4, 6 or 8, got {study['p']!r}")
    if basis is not None and command == "converge":
        for radius in study["levels"]:
            if radius > basis.cutoff:
                errors.append(
                    f"study.levels: radius {radius} exceeds basis cutoff {basis.cutoff}"
                )

    output = dict(raw.get("output", {}))
    _check_keys(errors, output, _OUTPUT_KEYS, "output", strict)
    output.setdefault("dir", "out")
    output.setdefault("csv", True)
    output.setdefault("snapshot", False)

    if errors:
        raise ValidationError(errors)
    return RunConfig(
        command=command,
        seed=seed,
        basis=basis,
        model=spec,
        ops=ops,
        nspec=nspec,
        integrator=integrator,
        phi0=phi0,
        ensemble=ensemble,
        study=study,
        output=output,
        raw=raw,
    )
