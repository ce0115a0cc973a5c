import numpy as np
import pytest

from spdegal.errors import ConfigurationError, ResourceGuardError
from spdegal.models import EvolutionOperators, ModelSpec, random_state, state_template
from spdegal.spectral import SpectralBasis
from spdegal.state import StateVector, h_norm, inner_product, unit_mode_field

ALL_MODELS = [
    ("cbf", dict(nu=1.0, alpha=0.5, beta=0.2, r=3.0)),
    ("mhd", dict(nu=1.0, kappa=0.8)),
    ("boussinesq", dict(nu=1.0, kappa=0.7, alpha=0.3, beta=0.1, r=3.0)),
    ("dynamo", dict(nu1=1.0, nu2=0.9, nu3=0.8)),
    ("micropolar", dict(mu=0.8, chi=0.3, gamma=0.6, nu=0.9, elastic=0.4)),
    ("tropical", dict(nu1=1.0, nu2=0.9, nu3=0.8)),
]


def make_ops(kind, d=2, cutoff=4, **overrides):
    params = dict(dict(ALL_MODELS)[kind])
    params.update(overrides)
    if kind == "dynamo" and d == 3:
        params.setdefault("sigma", 0.5)
    basis = SpectralBasis(d, cutoff)
    spec = ModelSpec.build(kind, d, **params)
    return EvolutionOperators(spec, basis), spec, basis


def shear_state(spec, basis, amplitude=1.0):
    """u = amplitude * sin(x_2) e_1 (plus zero companions), an advection fixed point."""
    phi = state_template(spec, basis)
    k = (0, 1) if spec.d == 2 else (0, 1, 0)
    i = basis.index_of(k)
    j = basis.conj_index[i]
    phi.fields["u"].coeffs[0, i] = -0.5j * amplitude
    phi.fields["u"].coeffs[0, j] = 0.5j * amplitude
    return phi


# -- dissipation -------------------------------------------------------------


def test_dissipation_single_mode_scaling():
    ops, spec, basis = make_ops("cbf", nu=2.0)
    phi = state_template(spec, basis)
    i = basis.index_of((1, 0))
    phi.fields["u"].coeffs[1, i] = 1.0
    out = ops.dissipation(phi)
    assert out.fields["u"].coeffs[1, i] == pytest.approx(2.0, rel=1e-15)


def test_dissipation_mhd_hand_values():
    ops, spec, basis = make_ops("mhd", nu=1.0, kappa=3.0)
    phi = state_template(spec, basis)
    i = basis.index_of((1, 1))
    phi.fields["u"].coeffs[0, i] = 1.0
    phi.fields["B"].coeffs[0, i] = 1.0
    out = ops.dissipation(phi)
    assert out.fields["u"].coeffs[0, i] == pytest.approx(2.0, rel=1e-15)
    assert out.fields["B"].coeffs[0, i] == pytest.approx(6.0, rel=1e-15)


def test_dissipation_micropolar_divfree_w():
    # divergence-free micro-rotation: the grad-div part vanishes
    ops, spec, basis = make_ops("micropolar", d=3, cutoff=2)
    rng = np.random.default_rng(0)
    phi = random_state(spec, basis, rng)
    from spdegal.state import leray_project

    phi.fields["w"].coeffs[:] = leray_project(phi.fields["w"]).coeffs
    out = ops.dissipation(phi)
    gamma = spec.diffusivities["w"]
    expected = gamma * basis.mu * phi.fields["w"].coeffs
    assert np.max(np.abs(out.fields["w"].coeffs - expected)) < 1e-13


def test_dissipation_self_adjoint_positive():
    for kind, _ in ALL_MODELS:
        ops, spec, basis = make_ops(kind, d=2, cutoff=3)
        rng = np.random.default_rng(1)
        a = random_state(spec, basis, rng)
        b = random_state(spec, basis, rng)
        assert inner_product(ops.dissipation(a), b) == pytest.approx(
            inner_product(a, ops.dissipation(b)), rel=1e-12
        )
        assert inner_product(ops.dissipation(a), a) > 0


def test_semigroup_and_resolvent_invert_dissipation():
    for kind in ("cbf", "micropolar"):
        d = 3 if kind == "micropolar" else 2
        ops, spec, basis = make_ops(kind, d=d, cutoff=2)
        rng = np.random.default_rng(2)
        phi = random_state(spec, basis, rng)
        dt = 0.01
        # exp(-A dt) phi ~ phi - dt A phi + O(dt^2), resolvent likewise
        sg = ops.semigroup(phi, dt)
        rs = ops.resolve(phi, dt)
        lin = phi - dt * ops.dissipation(phi)
        for approx in (sg, rs):
            err = h_norm(approx - lin)
            assert err < 2.0 * dt**2 * h_norm(ops.dissipation(ops.dissipation(phi)))


# -- advection ---------------------------------------------------------------


def test_advection_shear_is_fixed_point():
    ops, spec, basis = make_ops("cbf")
    phi = shear_state(spec, basis)
    out = ops.advection(phi, phi)
    assert h_norm(out) < 1e-14


def test_advection_mhd_equal_fields_cancel():
    ops, spec, basis = make_ops("mhd")
    rng = np.random.default_rng(3)
    phi = random_state(spec, basis, rng)
    phi.fields["B"].coeffs[:] = phi.fields["u"].coeffs
    out = ops.advection(phi, phi)
    scale = h_norm(phi)
    assert h_norm(out) < 1e-11 * max(scale, 1e-300)


def test_advection_taylor_green_annihilated_by_projection():
    # u = (sin x cos y, -cos x sin y): the quadratic term is a pure gradient
    ops, spec, basis = make_ops("cbf")
    phi = state_template(spec, basis)
    u = phi.fields["u"].coeffs
    for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        i = basis.index_of((sx, sy))
        # sin x cos y = sum_{+-} -+ i/4 e^{i(+-x)} ... expanded coefficients
        u[0, i] = -0.25j * sx
        u[1, i] = -0.25j * sy * (-1)
    from spdegal.state import Field, to_physical

    x = 2 * np.pi * np.arange(14) / 14
    X, Y = np.meshgrid(x, x, indexing="ij")
    vals = to_physical(Field(basis, u), 1.5)
    assert np.max(np.abs(vals[0] - np.sin(X) * np.cos(Y))) < 1e-12
    assert np.max(np.abs(vals[1] + np.cos(X) * np.sin(Y))) < 1e-12
    phi.fields["u"].check_integrity()
    out = ops.advection(phi, phi)
    assert h_norm(out) < 1e-11


@pytest.mark.parametrize("kind,params", ALL_MODELS)
def test_advection_oracle_agreement(kind, params):
    d = 2
    ops, spec, basis = make_ops(kind, d=d, cutoff=4)
    rng = np.random.default_rng(4)
    for _ in range(5):
        p1 = random_state(spec, basis, rng)
        p2 = random_state(spec, basis, rng)
        fast = ops.advection(p1, p2)
        slow = ops.advection_direct(p1, p2)
        num = h_norm(fast - slow)
        den = max(h_norm(slow), 1e-300)
        assert num / den < 1e-11


def test_advection_direct_bilinear_and_guarded():
    ops, spec, basis = make_ops("cbf")
    rng = np.random.default_rng(5)
    p1 = random_state(spec, basis, rng)
    p2 = random_state(spec, basis, rng)
    doubled = ops.advection_direct(2.0 * p1, p2)
    base = ops.advection_direct(p1, p2)
    assert h_norm(doubled - 2.0 * base) < 1e-12 * h_norm(base)
    big_ops, _, _ = make_ops("cbf", cutoff=8)
    q = random_state(big_ops.spec, big_ops.basis, rng)
    with pytest.raises(ResourceGuardError):
        big_ops.advection_direct(q, q)


def test_advection_three_slot_antisymmetry_battery():
    for kind, _ in ALL_MODELS:
        for d in (2, 3):
            cutoff = 4 if d == 2 else 2
            ops, spec, basis = make_ops(kind, d=d, cutoff=cutoff)
            rng = np.random.default_rng(6)
            for _ in range(20):
                p1 = random_state(spec, basis, rng)
                p2 = random_state(spec, basis, rng)
                p3 = random_state(spec, basis, rng)
                s12 = inner_product(ops.advection(p1, p2), p3)
                s13 = inner_product(ops.advection(p1, p3), p2)
                scale = max(
                    np.sqrt(ops.v_norm2(p1) * ops.v_norm2(p2) * ops.v_norm2(p3)), 1e-300
                )
                assert abs(s12 + s13) <= 1e-10 * scale


# -- reaction ----------------------------------------------------------------


def test_reaction_cbf_pure_darcy():
    ops, spec, basis = make_ops("cbf", alpha=1.0, beta=0.0)
    rng = np.random.default_rng(7)
    phi = random_state(spec, basis, rng)
    damping, coupling = ops.reaction_split(phi)
    assert h_norm(coupling) == 0.0
    assert h_norm(damping - phi) < 1e-14
    assert h_norm(ops.reaction(phi) - phi) < 1e-14


def test_reaction_tropical_vanishes_on_kernel():
    ops, spec, basis = make_ops("tropical")
    rng = np.random.default_rng(8)
    phi = random_state(spec, basis, rng)
    phi.fields["theta"].coeffs[:] = 0.0
    from spdegal.state import leray_project

    phi.fields["v"].coeffs[:] = leray_project(phi.fields["v"]).coeffs
    assert h_norm(ops.reaction(phi)) < 1e-13


def test_reaction_cubic_trig_identity():
    # |u|^2 u for u = sin(x) e_2: sin^3 = (3/4) sin x - (1/4) sin 3x
    ops, spec, basis = make_ops("cbf", cutoff=4, alpha=0.0, beta=1.0, r=3.0)
    phi = state_template(spec, basis)
    i1 = basis.index_of((1, 0))
    j1 = basis.conj_index[i1]
    phi.fields["u"].coeffs[1, i1] = -0.5j
    phi.fields["u"].coeffs[1, j1] = 0.5j
    out = ops.reaction(phi)
    c = out.fields["u"].coeffs
    i3 = basis.index_of((3, 0))
    assert c[1, i1] == pytest.approx(0.75 * -0.5j, rel=1e-12)
    assert c[1, i3] == pytest.approx(-0.25 * -0.5j, rel=1e-12)
    others = np.abs(c).sum() - abs(c[1, i1]) - abs(c[1, basis.conj_index[i1]]) - abs(
        c[1, i3]
    ) - abs(c[1, basis.conj_index[i3]])
    assert others < 1e-13
    # with cutoff < 3 the third harmonic is truncated away
    ops2, spec2, basis2 = make_ops("cbf", cutoff=2, alpha=0.0, beta=1.0, r=3.0)
    phi2 = state_template(spec2, basis2)
    k1 = basis2.index_of((1, 0))
    phi2.fields["u"].coeffs[1, k1] = -0.5j
    phi2.fields["u"].coeffs[1, basis2.conj_index[k1]] = 0.5j
    out2 = ops2.reaction(phi2)
    nonzero = np.nonzero(np.abs(out2.fields["u"].coeffs) > 1e-13)
    assert set(nonzero[1].tolist()) == {k1, int(basis2.conj_index[k1])}


def test_reaction_damping_nonnegative_battery():
    for kind, _ in ALL_MODELS:
        ops, spec, basis = make_ops(kind, d=2, cutoff=3)
        rng = np.random.default_rng(9)
        for _ in range(50):
            phi = random_state(spec, basis, rng, amplitude=rng.uniform(0.1, 3.0))
            damping, coupling = ops.reaction_split(phi)
            pairing = inner_product(damping, phi)
            scale = max(h_norm(damping) * h_norm(phi), 1e-300)
            assert pairing >= -1e-12 * scale
            growth = h_norm(coupling) / (1.0 + np.sqrt(ops.v_norm2(phi)))
            assert np.isfinite(growth)


def test_reaction_micropolar_energy_balance():
    # the curl couplings transfer energy between u and w without creating it:
    # <coupling, Phi> = -2 chi <curl u, w>
    ops, spec, basis = make_ops("micropolar", d=3, cutoff=2)
    rng = np.random.default_rng(10)
    phi = random_state(spec, basis, rng)
    damping, coupling = ops.reaction_split(phi)
    from spdegal.state import StateVector, differentiate

    curl_u = differentiate(phi.fields["u"], "curl")
    w = phi.fields["w"]
    cross = float(np.sum(np.real(np.conj(curl_u.coeffs) * w.coeffs)))
    assert inner_product(coupling, phi) == pytest.approx(
        -2.0 * spec.chi * cross, rel=1e-10
    )
    assert inner_product(damping, phi) == pytest.approx(
        2.0 * spec.chi * float(np.sum(np.abs(w.coeffs) ** 2)), rel=1e-12
    )


def test_dynamo_coriolis_energy_neutral():
    ops, spec, basis = make_ops("dynamo", d=3, cutoff=2, sigma=0.7)
    rng = np.random.default_rng(11)
    phi = random_state(spec, basis, rng)
    damping, _ = ops.reaction_split(phi)
    pairing = inner_product(damping, phi)
    assert abs(pairing) < 1e-12 * max(h_norm(damping) * h_norm(phi), 1e-300)


def test_boussinesq_background_default():
    ops, spec, basis = make_ops("boussinesq")
    phi_field = ops.background_field()
    from spdegal.state import to_physical

    vals = to_physical(phi_field, 1.5)
    x = 2 * np.pi * np.arange(14) / 14
    expected = np.cos(x)[None, :] * np.ones_like(x)[:, None]  # cos(x_2)
    assert np.max(np.abs(vals[0] - expected)) < 1e-13


# -- model spec validation -----------------------------------------------------


def test_model_spec_validation():
    with pytest.raises(ConfigurationError):
        ModelSpec.build("cbf", 2, nu=0.0)
    with pytest.raises(ConfigurationError):
        ModelSpec.build("cbf", 2, nu=1.0, r=3.5)
    with pytest.raises(ConfigurationError):
        ModelSpec.build("cbf", 2, nu=1.0, r=1.5)
    with pytest.raises(ConfigurationError):
        ModelSpec.build("dynamo", 2, nu1=1, nu2=1, nu3=1, sigma=0.1)
    with pytest.raises(ConfigurationError):
        ModelSpec.build("micropolar", 2, mu=1.0, chi=0.0, gamma=1.0, nu=1.0)
    with pytest.raises(ConfigurationError):
        ModelSpec.build("nonsense", 2, nu=1.0)
    with pytest.raises(ConfigurationError):
        ModelSpec.build("boussinesq", 2, nu=1, kappa=1, e=(1.0, 1.0))
    spec = ModelSpec.build("cbf", 2, nu=1.0)
    assert spec.r == 3.0 and spec.alpha == 0.0


def test_roster_mismatch_rejected():
    ops, spec, basis = make_ops("cbf")
    mhd_ops, mhd_spec, _ = make_ops("mhd")
    rng = np.random.default_rng(12)
    wrong = random_state(mhd_spec, basis, rng)
    with pytest.raises(TypeError):
        ops.dissipation(wrong)
    with pytest.raises(TypeError):
        ops.reaction(wrong)
