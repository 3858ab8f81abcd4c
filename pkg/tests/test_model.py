import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otto_ion import qla
from otto_ion.model import (
    EngineParams,
    ParameterError,
    h_joint,
    h_joint_assembled,
    h_system,
    joint_eigenvalues_closed_form,
    joint_spectrum,
    normalizations,
    two_level_spectrum,
    z_coefficients,
)

BASE = EngineParams()
ket_g = np.array([1, 0])
ket_e = np.array([0, 1])


def test_h_system_examples():
    np.testing.assert_array_equal(h_system(0, 1), np.diag([-1, 1]))
    np.testing.assert_array_equal(h_system(1, 0), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(h_system(0.2, 10), [[-10, 0.2], [0.2, 10]])
    with pytest.raises(ParameterError):
        h_system(0, 0)


def test_h_joint_decoupled_diagonal():
    p = EngineParams(g=0.0, k=0.0, omega=1.0, b_hot=1.0, b_cold=1.0)
    np.testing.assert_array_equal(h_joint(p, 1.0), np.diag([-1, 0, 1, 2]))


def test_h_joint_default_entries():
    h = h_joint(BASE, 10.0)
    assert h[1, 2] == 0.1 and h[2, 1] == 0.1
    assert h[0, 2] == h[1, 3] == 0.2
    np.testing.assert_array_equal(np.diag(h).real, [-10, -9, 10, 11])
    assert qla.is_hermitian(h, 0.0)


@settings(max_examples=200, deadline=None)
@given(
    g=st.floats(0, 2),
    k=st.floats(0, 2),
    w=st.floats(0.1, 5),
    b=st.floats(-20, 20),
)
def test_h_joint_equals_tensor_assembly(g, k, w, b):
    p = EngineParams(g=g, k=k, omega=w, b_hot=20, b_cold=1)
    np.testing.assert_allclose(h_joint(p, b), h_joint_assembled(p, b), atol=1e-14, rtol=0)


def test_two_level_default_matches_numeric():
    sp = two_level_spectrum(0.2, 10)
    num = qla.hermitian_eigen(h_system(0.2, 10)).values
    assert sp.e1 == pytest.approx(num[1], abs=1e-12)
    assert sp.e2 == pytest.approx(num[0], abs=1e-12)
    assert sp.e1 == pytest.approx(10.0020, abs=1e-4)
    assert sp.e1 == -sp.e2


def test_two_level_sigma_x():
    sp = two_level_spectrum(1, 0)
    assert sp.e1 == 1
    overlap = np.vdot(np.array([1, 1]) / math.sqrt(2), sp.ket1)
    assert abs(abs(overlap) - 1) < 1e-15


def test_two_level_g_zero_is_sigma_z():
    sp = two_level_spectrum(0, 1)
    assert sp.e1 == 1
    # ket1 = |e> and ket2 = |g> up to a global sign (the g -> 0+ limit gives -|e>)
    assert abs(abs(np.vdot(ket_e, sp.ket1)) - 1) == 0
    assert abs(abs(np.vdot(ket_g, sp.ket2)) - 1) == 0


def _paper_z(g, b):
    # direct evaluation of the closed-form z formulas (needs g != 0)
    eps = math.sqrt(g * g + b * b)
    n_minus = math.sqrt(2 * (g * g + b * b - b * eps))
    n_plus = math.sqrt(2 * (g * g + b * b + b * eps))
    zg1 = -n_minus / (2 * eps)
    zg2 = -n_plus / (2 * eps)
    return zg1, zg2, zg1 * (b + eps) / g, zg2 * (b - eps) / g


def test_z_coefficients_sigma_x():
    zg1, zg2, ze1, ze2 = z_coefficients(1, 0)
    assert zg1 == pytest.approx(-1 / math.sqrt(2), abs=1e-15)
    assert zg2 == pytest.approx(-1 / math.sqrt(2), abs=1e-15)
    np.testing.assert_allclose((zg1, zg2, ze1, ze2), _paper_z(1, 0), atol=1e-15)


@pytest.mark.parametrize("g,b", [(0.2, 10), (0.2, 1), (1.3, 0.4), (0.5, -2), (2, 0.01)])
def test_z_coefficients_match_closed_form(g, b):
    np.testing.assert_allclose(z_coefficients(g, b), _paper_z(g, b), atol=1e-10)


def test_z_coefficients_small_g_limit():
    # numeric projections <E_n|g> at tiny g versus the exact g = 0 limit
    dec = qla.hermitian_eigen(h_system(1e-8, 1.0))
    proj = [abs(np.vdot(dec.vector(1), ket_g)), abs(np.vdot(dec.vector(0), ket_g))]
    zg1, zg2, ze1, ze2 = z_coefficients(0.0, 1.0)
    assert (zg1, zg2) == (0.0, -1.0)
    assert (ze1, ze2) == (-1.0, 0.0)
    np.testing.assert_allclose([abs(zg1), abs(zg2)], proj, atol=1e-8)
    sp = two_level_spectrum(0.0, 1.0)
    np.testing.assert_allclose(sp.zg1 * sp.ket1 - sp.zg2 * sp.ket2, ket_g, atol=0)


finite_g = st.floats(-2, 2).filter(lambda g: abs(g) > 1e-6)


@settings(max_examples=300, deadline=None)
@given(g=st.floats(-2, 2), b=st.floats(-20, 20))
def test_two_level_invariants(g, b):
    if g * g + b * b < 1e-12:
        return
    sp = two_level_spectrum(g, b)
    h = h_system(g, b)
    np.testing.assert_allclose(h @ sp.ket1, sp.e1 * sp.ket1, atol=1e-10 * max(1, sp.e1))
    np.testing.assert_allclose(h @ sp.ket2, sp.e2 * sp.ket2, atol=1e-10 * max(1, sp.e1))
    assert abs(np.vdot(sp.ket1, sp.ket2)) < 1e-12
    assert sp.e1 * sp.e2 == pytest.approx(-(g * g + b * b), abs=1e-10 * max(1, g * g + b * b))
    assert sp.zg1**2 + sp.zg2**2 == pytest.approx(1, abs=1e-12)
    assert sp.ze1**2 + sp.ze2**2 == pytest.approx(1, abs=1e-12)
    np.testing.assert_allclose(sp.zg1 * sp.ket1 - sp.zg2 * sp.ket2, ket_g, atol=1e-10)
    np.testing.assert_allclose(sp.ze1 * sp.ket1 - sp.ze2 * sp.ket2, ket_e, atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(g=finite_g, b=st.floats(-20, 20))
def test_normalization_product_identity(g, b):
    n_minus, n_plus = normalizations(g, b)
    eps = math.hypot(g, b)
    assert n_minus * n_plus == pytest.approx(2 * abs(g) * eps, rel=1e-12)


def test_normalization_no_cancellation():
    # naive sqrt(2(eps^2 - B eps)) loses every digit here
    n_minus, _ = normalizations(1e-9, 1.0)
    assert n_minus == pytest.approx(1e-9, rel=1e-12)


def test_closed_form_decoupled_tensor_sum():
    p = EngineParams(g=0.2, k=0.0, omega=1.0, b_hot=1.0, b_cold=1.0)
    eps = math.sqrt(1.04)
    expected = sorted([-eps, eps, 1 - eps, 1 + eps])
    np.testing.assert_allclose(sorted(joint_eigenvalues_closed_form(p, 1.0)), expected, atol=1e-12)
    np.testing.assert_allclose(expected, [-1.0198, -0.0198, 1.0198, 2.0198], atol=1e-4)


def test_closed_form_diagonal_case():
    p = EngineParams(g=0.0, k=0.0, omega=1.0, b_hot=1.0, b_cold=1.0)
    np.testing.assert_allclose(sorted(joint_eigenvalues_closed_form(p, 1.0)), [-1, 0, 1, 2], atol=1e-15)


def test_closed_form_default_vs_numeric():
    u = sorted(joint_eigenvalues_closed_form(BASE, 10.0))
    np.testing.assert_allclose(u, qla.hermitian_eigen(h_joint(BASE, 10.0)).values, atol=1e-9)
    assert sum(u) == pytest.approx(2 * BASE.omega, abs=1e-12)


def test_closed_form_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        g, k = rng.uniform(0, 2, 2)
        p = EngineParams(g=g, k=k, omega=rng.uniform(0.1, 5), b_hot=20, b_cold=0.01)
        b = rng.uniform(0.01, 20)
        u = np.sort(joint_eigenvalues_closed_form(p, b))
        np.testing.assert_allclose(u, qla.hermitian_eigen(h_joint(p, b)).values, atol=1e-9)


def test_radicand_guard():
    from otto_ion import model

    with pytest.raises(ParameterError):
        model._root(-1e-6, "D")
    assert model._root(-1e-13, "D") == 0.0


def test_joint_spectrum_completeness_and_residual():
    spec = joint_spectrum(BASE, 10.0)
    vecs = spec.decomposition.vectors
    np.testing.assert_allclose(vecs @ vecs.conj().T, np.eye(4), atol=1e-9)
    a = spec.amplitudes()
    h = h_joint(BASE, 10.0).real
    np.testing.assert_allclose(h @ a, a * spec.decomposition.values, atol=1e-9)
    assert np.max(np.abs(vecs.imag)) == 0


def test_joint_spectrum_decoupled_product_vectors():
    p = EngineParams(g=0.3, k=0.0, omega=1.0, b_hot=2.0, b_cold=2.0)
    spec = joint_spectrum(p, 2.0)
    for i in range(4):
        v = spec.decomposition.vector(i).reshape(2, 2)
        # a product vector has a rank-one coefficient matrix
        s = np.linalg.svd(v, compute_uv=False)
        assert s[1] < 1e-9


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(omega=0.0),
        dict(k=-0.1),
        dict(kt_hot=0.0),
        dict(tau=0.0),
        dict(steps=0),
        dict(meas_cost=-1.0),
        dict(b_hot=0.01, b_cold=1.0),
        dict(g=0.0, b_hot=1.0, b_cold=-1.0),
    ],
)
def test_engine_params_validation(kwargs):
    with pytest.raises(ParameterError):
        EngineParams(**kwargs)


def test_engine_params_default_cost():
    assert EngineParams(kt_hot=2.0).meas_cost == pytest.approx(2 * math.log(2))
