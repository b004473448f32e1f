"""
Tests for the one-step transfer matrices.
"""

import numpy as np
import pytest
from scipy.linalg import expm

from spectrum_extractor.fastpoly import MatPoly, evaluate_horner
from spectrum_extractor.mat2 import dagger, det, metric
from spectrum_extractor.schemes import (
    STEP_DEGREE,
    StepPoly,
    StepWindow,
    a_exponential,
    bo_step,
    central_derivatives,
    edge_matrices,
    signal_windows,
    step_polynomial,
    tes4_step,
    tes4sb_step,
)


@pytest.fixture
def smooth_window():
    """Window sampled from a chirped secant around t = 0.4."""
    tau = 0.05
    t = 0.4 + tau * np.array([-1.0, 0.0, 1.0])
    q = 2.0 / np.cosh(t) * np.exp(1.5j * np.log(1.0 / np.cosh(t)))
    return StepWindow(q_prev=q[0], q_curr=q[1], q_next=q[2], tau=tau)


def zs_matrix(q, zeta, sigma):
    return np.array([[-1j * zeta, q], [-sigma * np.conj(q), 1j * zeta]])


def test_bo_step_matches_expm():
    q, zeta, tau = 1.0, 1.0, 0.1
    np.testing.assert_allclose(bo_step(q, 1, zeta, tau), expm(tau * zs_matrix(q, zeta, 1)),
                               rtol=1e-13, atol=1e-14)


def test_bo_step_zero_potential():
    zeta, tau = 2.0, 0.25
    expected = np.diag([np.exp(-1j * zeta * tau), np.exp(1j * zeta * tau)])
    np.testing.assert_allclose(bo_step(0.0, 1, zeta, tau), expected, rtol=1e-15)


def test_bo_step_rejects_bad_tau():
    with pytest.raises(ValueError, match="tau"):
        bo_step(1.0, 1, 0.0, 0.0)


def test_step_window_rejects_sigma():
    with pytest.raises(ValueError, match="sigma"):
        StepWindow(q_prev=0.0, q_curr=0.0, q_next=0.0, tau=0.1, sigma=0)


def test_central_derivatives_quadratic():
    """Central differences are exact for quadratics."""
    tau = 0.1
    t = np.array([-tau, 0.0, tau]) + 1.0
    q = 3.0 * t * t + (2.0 - 1.0j) * t
    d = central_derivatives(StepWindow(q_prev=q[0], q_curr=q[1], q_next=q[2], tau=tau))
    np.testing.assert_allclose(d.q1, 6.0 + 2.0 - 1.0j, rtol=1e-12)
    np.testing.assert_allclose(d.q2, 6.0, rtol=1e-10)


def test_edge_matrices_constant_window_is_identity():
    w = StepWindow(q_prev=1.0 + 1.0j, q_curr=1.0 + 1.0j, q_next=1.0 + 1.0j, tau=0.1)
    e_plus, e_minus = edge_matrices(central_derivatives(w), w.tau, w.sigma)
    np.testing.assert_allclose(e_plus, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(e_minus, np.eye(2), atol=1e-15)


def test_edge_matrices_unimodular(smooth_window):
    e_plus, e_minus = edge_matrices(central_derivatives(smooth_window), smooth_window.tau, 1)
    np.testing.assert_allclose(det(e_plus), 1.0, rtol=1e-14)
    np.testing.assert_allclose(det(e_minus), 1.0, rtol=1e-14)


def test_tes4_reduces_to_bo_for_constant_window():
    w = StepWindow(q_prev=0.7j, q_curr=0.7j, q_next=0.7j, tau=0.1)
    np.testing.assert_allclose(tes4_step(w, 1.3), bo_step(0.7j, 1, 1.3, 0.1), atol=1e-15)


def test_tes4sb_zero_potential_is_exact():
    w = StepWindow(q_prev=0.0, q_curr=0.0, q_next=0.0, tau=0.2)
    zeta = 3.0
    expected = np.diag([np.exp(-1j * zeta * 0.2), np.exp(1j * zeta * 0.2)])
    np.testing.assert_allclose(tes4sb_step(w, zeta), expected, rtol=1e-14)


def chirped_window(tau, t0=0.4):
    t = t0 + tau * np.array([-1.0, 0.0, 1.0])
    q = 2.0 / np.cosh(t) * np.exp(1.5j * np.log(1.0 / np.cosh(t)))
    return StepWindow(q_prev=q[0], q_curr=q[1], q_next=q[2], tau=tau)


def test_tes4sb_splitting_error_is_fifth_order():
    """Halving tau shrinks the gap between the split and the full exponential about 32 times."""
    gaps = []
    for tau in (0.05, 0.025):
        w = chirped_window(tau)
        gaps.append(np.max(np.abs(tes4sb_step(w, 1.0) - tes4_step(w, 1.0))))
    assert 26.0 <= gaps[0] / gaps[1] <= 38.0


@pytest.mark.parametrize("sigma", [1, -1])
def test_tes4sb_without_spectral_term_is_exp_of_potential(sigma):
    """At zeta = 0 with a constant window every factor commutes and the split is exact."""
    q, tau = 0.7 - 0.2j, 0.1
    w = StepWindow(q_prev=q, q_curr=q, q_next=q, tau=tau, sigma=sigma)
    expected = expm(tau * np.array([[0.0, q], [-sigma * np.conj(q), 0.0]]))
    np.testing.assert_allclose(tes4sb_step(w, 0.0), expected, atol=1e-13)


@pytest.mark.parametrize("sigma", [1, -1])
def test_bo_step_conserves_metric(sigma):
    zetas = np.array([-4.0, 0.5, 7.0])
    t = bo_step(1.2 - 0.4j, sigma, zetas, 0.05)
    j = metric(sigma)
    np.testing.assert_allclose(dagger(t) @ j @ t, np.broadcast_to(j, t.shape), atol=1e-13)
    np.testing.assert_allclose(det(t), 1.0, rtol=1e-13)


@pytest.mark.parametrize("sigma", [1, -1])
@pytest.mark.parametrize("builder", [tes4_step, tes4sb_step])
def test_steps_conserve_metric(smooth_window, builder, sigma):
    """T^H J T = J with J = diag(1, sigma) for real zeta."""
    w = StepWindow(q_prev=smooth_window.q_prev, q_curr=smooth_window.q_curr,
                   q_next=smooth_window.q_next, tau=smooth_window.tau, sigma=sigma)
    t = builder(w, np.array([-4.0, 0.5, 7.0]))
    j = metric(sigma)
    np.testing.assert_allclose(dagger(t) @ j @ t, np.broadcast_to(j, t.shape), atol=1e-13)
    np.testing.assert_allclose(det(t), 1.0, rtol=1e-13)


def test_tes4sb_vectorized_matches_loop(smooth_window):
    zetas = np.linspace(-5.0, 5.0, 7)
    batched = tes4sb_step(smooth_window, zetas)
    for zeta, matrix in zip(zetas, batched):
        np.testing.assert_allclose(matrix, tes4sb_step(smooth_window, zeta), rtol=1e-14, atol=1e-15)


def test_a_exponential():
    result = a_exponential(1.5, 0.3, 3)
    np.testing.assert_allclose(result, np.diag([np.exp(-0.45j), np.exp(0.45j)]), rtol=1e-15)


def test_step_polynomial_zero_potential():
    """For q = 0 the step is diag(W^5, W^2) / Z^7."""
    w = StepWindow(q_prev=0.0, q_curr=0.0, q_next=0.0, tau=0.1)
    poly = step_polynomial(w)
    assert isinstance(poly, StepPoly)
    assert poly.degree == STEP_DEGREE
    assert poly.denom_z_exp == 7
    expected = np.zeros((STEP_DEGREE + 1, 2, 2), dtype=np.complex128)
    expected[5, 0, 0] = 1.0
    expected[2, 1, 1] = 1.0
    np.testing.assert_allclose(poly.coeffs, expected, atol=1e-15)


def test_step_polynomial_evaluates_to_tes4sb(smooth_window):
    poly = step_polynomial(smooth_window)
    zetas = np.array([-9.0, -0.3, 0.0, 2.2, 0.4 + 0.3j])
    values = evaluate_horner(MatPoly(coeffs=poly.coeffs, denom_z_exp=poly.denom_z_exp),
                             zetas, smooth_window.tau)
    np.testing.assert_allclose(values, tes4sb_step(smooth_window, zetas), rtol=1e-13, atol=1e-13)


def test_step_poly_requires_eight_coefficients():
    with pytest.raises(ValueError, match="coefficients"):
        StepPoly(coeffs=np.zeros((3, 2, 2)), denom_z_exp=7)


def test_signal_windows_zero_padding():
    w = signal_windows(np.array([1.0, 2.0, 3.0]), tau=0.5, sigma=1)
    np.testing.assert_array_equal(w.q_prev, [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(w.q_curr, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(w.q_next, [2.0, 3.0, 0.0])


def test_step_polynomial_batched_over_nodes():
    rng = np.random.default_rng(3)
    q = rng.normal(size=5) + 1j * rng.normal(size=5)
    windows = signal_windows(q, tau=0.1, sigma=-1)
    batched = step_polynomial(windows)
    assert batched.coeffs.shape == (5, STEP_DEGREE + 1, 2, 2)
    single = step_polynomial(StepWindow(q_prev=windows.q_prev[2], q_curr=windows.q_curr[2],
                                        q_next=windows.q_next[2], tau=0.1, sigma=-1))
    np.testing.assert_allclose(batched.coeffs[2], single.coeffs, rtol=1e-14, atol=1e-15)
