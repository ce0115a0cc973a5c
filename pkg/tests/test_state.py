import numpy as np
import pytest

from spdegal.errors import ConfigurationError, ShapeMismatchError
from spdegal.spectral import SpectralBasis
from spdegal.state import (
    Field,
    StateVector,
    differentiate,
    grid_shape,
    hermitian_symmetrize,
    inner_product,
    leray_project,
    to_physical,
    to_spectral,
    unit_mode_field,
)


def random_hermitian_field(basis, rng, ncomp, divergence_free=False):
    c = rng.standard_normal((ncomp, basis.n_modes)) + 1j * rng.standard_normal(
        (ncomp, basis.n_modes)
    )
    f = hermitian_symmetrize(Field(basis, c))
    if divergence_free:
        f = leray_project(f)
    return f


def grid_points(basis, pad):
    g = grid_shape(basis, pad)[0]
    return 2 * np.pi * np.arange(g) / g


def test_leray_annihilates_gradients():
    basis = SpectralBasis(2, 3)
    # phi = cos(x+y): gradient has coefficients i*k*phi_hat
    phi = unit_mode_field(basis, (1, 1))
    grad = differentiate(phi, "gradient")
    out = leray_project(grad)
    assert np.max(np.abs(out.coeffs)) < 1e-15


def test_leray_fixes_divergence_free():
    basis = SpectralBasis(2, 3)
    shear = unit_mode_field(basis, (0, 1), component_weights=[1.0, 0.0], coeff=-0.5j)
    out = leray_project(shear)
    assert np.allclose(out.coeffs, shear.coeffs, atol=1e-15)


def test_leray_single_mode_hand_value():
    # mode k=(1,0) with coefficient vector (1, 1): projector I - kk^T/|k|^2
    # keeps only the second component
    basis = SpectralBasis(2, 2)
    c = np.zeros((2, basis.n_modes), dtype=complex)
    i = basis.index_of((1, 0))
    c[:, i] = 1.0
    out = leray_project(Field(basis, c))
    assert out.coeffs[0, i] == pytest.approx(0.0, abs=1e-15)
    assert out.coeffs[1, i] == pytest.approx(1.0, rel=1e-15)


def test_leray_idempotent_battery():
    basis = SpectralBasis(2, 4)
    rng = np.random.default_rng(11)
    for _ in range(1000):
        f = random_hermitian_field(basis, rng, 2)
        once = leray_project(f)
        twice = leray_project(once)
        scale = max(np.max(np.abs(once.coeffs)), 1e-300)
        assert np.max(np.abs(twice.coeffs - once.coeffs)) <= 1e-12 * scale


def test_leray_orthogonal_to_gradients():
    basis = SpectralBasis(2, 4)
    rng = np.random.default_rng(12)
    for _ in range(200):
        f = random_hermitian_field(basis, rng, 2)
        theta = random_hermitian_field(basis, rng, 1)
        proj = leray_project(f)
        grad = differentiate(theta, "gradient")
        a = StateVector(basis, {"v": proj})
        b = StateVector(basis, {"v": Field(basis, grad.coeffs)})
        ip = inner_product(a, b)
        scale = np.sqrt(inner_product(a, a) * inner_product(b, b))
        assert abs(ip) <= 1e-11 * max(scale, 1e-300)


def test_leray_rejects_scalar():
    basis = SpectralBasis(2, 1)
    scalar = unit_mode_field(basis, (1, 0))
    with pytest.raises(TypeError):
        leray_project(scalar)


def test_to_physical_zero():
    basis = SpectralBasis(2, 2)
    f = Field(basis, np.zeros((1, basis.n_modes), dtype=complex))
    assert np.all(to_physical(f, 1.5) == 0.0)


@pytest.mark.parametrize("pad", [1.0, 1.5, 2.0])
def test_to_physical_cosine(pad):
    basis = SpectralBasis(2, 2)
    f = unit_mode_field(basis, (1, 0))  # 1/2 at +-k -> cos(x)
    vals = to_physical(f, pad)
    x = grid_points(basis, pad)
    expected = np.cos(x)[:, None] * np.ones_like(x)[None, :]
    assert np.max(np.abs(vals[0] - expected)) < 1e-13


def test_grid_shape_values():
    basis = SpectralBasis(2, 4)
    assert grid_shape(basis, 1.0) == (10, 10)
    assert grid_shape(basis, 1.5) == (14, 14)
    assert grid_shape(basis, 2.0) == (18, 18)
    with pytest.raises(ConfigurationError):
        grid_shape(basis, 1.25)


def test_roundtrip_identity():
    basis = SpectralBasis(2, 4)
    rng = np.random.default_rng(13)
    f = random_hermitian_field(basis, rng, 2)
    back = to_spectral(to_physical(f, 1.5), basis, 1.5)
    assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12 * np.max(np.abs(f.coeffs))


def test_to_spectral_shape_mismatch():
    basis = SpectralBasis(2, 2)
    with pytest.raises(ShapeMismatchError):
        to_spectral(np.zeros((1, 7, 7)), basis, 1.5)


def test_divergence_of_gradient_is_laplacian():
    basis = SpectralBasis(2, 3)
    rng = np.random.default_rng(14)
    theta = random_hermitian_field(basis, rng, 1)
    lap1 = differentiate(differentiate(theta, "gradient"), "divergence")
    lap2 = differentiate(theta, "laplacian")
    assert np.max(np.abs(lap1.coeffs - lap2.coeffs)) < 1e-13 * np.max(np.abs(theta.coeffs))


def test_curl_of_gradient_vanishes():
    for d in (2, 3):
        basis = SpectralBasis(d, 2)
        rng = np.random.default_rng(15)
        theta = random_hermitian_field(basis, rng, 1)
        curl = differentiate(differentiate(theta, "gradient"), "curl")
        assert np.max(np.abs(curl.coeffs)) < 1e-13 * np.max(np.abs(theta.coeffs))


def test_divergence_of_curl_vanishes_3d():
    basis = SpectralBasis(3, 2)
    rng = np.random.default_rng(16)
    v = random_hermitian_field(basis, rng, 3)
    div = differentiate(differentiate(v, "curl"), "divergence")
    assert np.max(np.abs(div.coeffs)) < 1e-13 * np.max(np.abs(v.coeffs))


def test_gradient_of_cosx_is_minus_sinx():
    basis = SpectralBasis(2, 2)
    f = unit_mode_field(basis, (1, 0))  # cos(x)
    grad = differentiate(f, "gradient")
    vals = to_physical(grad, 1.5)
    x = grid_points(basis, 1.5)
    expected = -np.sin(x)[:, None] * np.ones_like(x)[None, :]
    assert np.max(np.abs(vals[0] - expected)) < 1e-13
    assert np.max(np.abs(vals[1])) < 1e-13


def test_2d_curl_adjointness():
    # <curl w, u> = <w, curl u> for scalar w and vector u on the torus
    basis = SpectralBasis(2, 3)
    rng = np.random.default_rng(17)
    w = random_hermitian_field(basis, rng, 1)
    u = random_hermitian_field(basis, rng, 2)
    lhs = inner_product(
        StateVector(basis, {"a": differentiate(w, "curl")}),
        StateVector(basis, {"a": u}),
    )
    rhs = inner_product(
        StateVector(basis, {"a": w}),
        StateVector(basis, {"a": differentiate(u, "curl")}),
    )
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_inner_product_definition_and_oracle():
    basis = SpectralBasis(2, 3)
    rng = np.random.default_rng(18)
    fa = random_hermitian_field(basis, rng, 2)
    fb = random_hermitian_field(basis, rng, 2)
    a = StateVector(basis, {"u": fa})
    b = StateVector(basis, {"u": fb})
    # <v, v>_0 = |v|^2
    assert inner_product(a, a) == pytest.approx(float(np.sum(np.abs(fa.coeffs) ** 2)), rel=1e-13)
    # orthogonal single-mode states
    m1 = StateVector(basis, {"u": unit_mode_field(basis, (1, 0), [1, 0])})
    m2 = StateVector(basis, {"u": unit_mode_field(basis, (0, 1), [1, 0])})
    assert inner_product(m1, m2) == 0.0
    # weighted brute-force sum at alpha = 1/2
    nu = {"u": 1.7}
    expected = 0.0
    for i in range(basis.n_modes):
        w = (nu["u"] * basis.mu[i]) ** 1.0
        expected += w * float(np.sum(np.real(np.conj(fa.coeffs[:, i]) * fb.coeffs[:, i])))
    assert inner_product(a, b, 0.5, nu) == pytest.approx(expected, rel=1e-12)


def test_inner_product_roster_mismatch():
    basis = SpectralBasis(2, 1)
    f = unit_mode_field(basis, (1, 0))
    a = StateVector(basis, {"u": f})
    b = StateVector(basis, {"theta": f.copy()})
    with pytest.raises(TypeError):
        inner_product(a, b)


def test_hermitian_preserved_by_operations():
    basis = SpectralBasis(2, 3)
    rng = np.random.default_rng(19)
    scalar = random_hermitian_field(basis, rng, 1)
    vector = random_hermitian_field(basis, rng, 2)
    outputs = [
        differentiate(scalar, "gradient"),
        differentiate(vector, "divergence"),
        differentiate(vector, "curl"),
        differentiate(scalar, "laplacian"),
        leray_project(vector),
        to_spectral(to_physical(vector, 1.5), basis, 1.5),
    ]
    for f in outputs:
        scale = max(np.max(np.abs(f.coeffs)), 1e-300)
        assert f.hermitian_residual() <= 1e-12 * scale


def test_dealias_pointwise_product_matches_convolution():
    # fields band-limited to cutoff/2: the padded product equals the exact
    # convolution on every retained mode
    basis = SpectralBasis(2, 4)
    rng = np.random.default_rng(20)
    a = random_hermitian_field(basis, rng, 1)
    b = random_hermitian_field(basis, rng, 1)
    half = basis.mu <= 4.0 + 1e-12  # |k| <= 2
    keep = np.zeros(basis.n_modes)
    keep[half] = 1.0
    a = Field(basis, a.coeffs * keep)
    b = Field(basis, b.coeffs * keep)
    prod = to_spectral(to_physical(a, 1.5) * to_physical(b, 1.5), basis, 1.5)
    # direct convolution oracle
    expected = np.zeros((1, basis.n_modes), dtype=complex)
    idx = {tuple(k): i for i, k in enumerate(basis.modes.tolist())}
    for i, p in enumerate(basis.modes.tolist()):
        for j, q in enumerate(basis.modes.tolist()):
            ksum = (p[0] + q[0], p[1] + q[1])
            if ksum in idx:
                expected[0, idx[ksum]] += a.coeffs[0, i] * b.coeffs[0, j]
    assert np.max(np.abs(prod.coeffs - expected)) < 1e-13 * max(np.max(np.abs(expected)), 1e-300)
