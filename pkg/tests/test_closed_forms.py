import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from dialab import (
    DomainError,
    ModelParams,
    OUParams,
    ParameterError,
    WaveParams,
    appendix_f_approx,
    appendix_green_first,
    appendix_mu_sq,
    attenuation_report,
    dia_freq_factor,
    dia_rate,
    dia_third_green,
    dia_wave,
    first_order_system_coeffs,
    freq_sq_shift,
    freq_sq_shift_closed,
    perturbative_freq_factor,
    perturbative_green,
    perturbative_rate,
    perturbative_wave,
    phase_average_closed,
)

from oracles import c_integrals, eq45_difference_symbolic

params_st = st.builds(
    ModelParams.create,
    nu=st.floats(1e-3, 10.0),
    sigma=st.floats(0.0, 2.0),
    lam=st.floats(0.0, 10.0),
)


@settings(max_examples=100, deadline=None)
@given(params=params_st)
def test_oscillator_forms_normalized(params):
    assert perturbative_green(params, 0.0) == pytest.approx(1.0, abs=1e-14)
    nu, s = params.nu, params.ou.variance
    assert nu / (2 * nu + s) + (nu + s) / (2 * nu + s) == pytest.approx(1.0, abs=1e-14)
    assert (2 * nu + s) / (3 * nu + 2 * s) + (nu + s) / (3 * nu + 2 * s) == pytest.approx(1.0, abs=1e-14)
    assert dia_third_green(params, 0.0) == pytest.approx(1.0, abs=1e-14)
    if params.ou.lam > 0:
        assert appendix_green_first(params, 0.0) == 1.0


def test_perturbative_green_does_not_decay():
    params = ModelParams.create(0.04, 0.1, 0.1)
    t = np.linspace(500, 2000, 200_001)
    peak = np.max(np.abs(perturbative_green(params, t)))
    limsup = (0.04 + 0.01) / (0.08 + 0.01)
    assert peak == pytest.approx(limsup, rel=1e-4)


def test_dia_third_green_decays_inside_envelope():
    params = ModelParams.create(0.04, 0.1, 0.1)
    t = np.linspace(0, 200, 20001)
    w = math.sqrt(0.12 + 0.02)
    bound = (1 + 0.1 / w) * np.exp(-0.1 * t)
    g = dia_third_green(params, t)
    assert np.all(np.abs(g) <= bound + 1e-15)
    assert abs(g[-1]) < 1e-8


def test_wave_forms_unperturbed_limit():
    params = WaveParams.create(3.0, 0.0, 0.2)
    xi = np.linspace(0, 5, 101)
    for form in (perturbative_wave, dia_wave):
        assert np.allclose(form(params, xi, normalized=False), np.sin(3 * xi), atol=1e-15)
        assert np.allclose(form(params, xi), np.sin(3 * xi) / 3, atol=1e-15)
        assert form(params, 0.0) == 0.0


def test_rate_ratio_example():
    report = attenuation_report(0.1, 0.05)
    assert report.rate_ratio == pytest.approx(1.0302 / 0.9902, rel=1e-12)
    assert 1.04 < report.rate_ratio < 1.041
    assert report.perturbative_rate == perturbative_rate(0.1, 0.05)
    assert report.dia_rate == dia_rate(0.1, 0.05)


def test_rate_inequality_on_grid():
    for sigma in np.linspace(0.005, 0.5, 100):
        assert dia_rate(sigma, 1.0) > perturbative_rate(sigma, 1.0)
        attenuation_report(float(sigma), 1.0)


def test_frequency_shift_direct_value():
    assert freq_sq_shift(0.1) == pytest.approx(-3.9596e-4, rel=1e-4)
    report = attenuation_report(0.1, 0.05)
    assert report.freq_sq_shift == pytest.approx(freq_sq_shift(0.1), rel=1e-12)


def test_frequency_shift_closed_form_is_symbolically_exact():
    s, diff = eq45_difference_symbolic()
    closed = -4 * s**2 * (1 - s) / (1 + s**2 + 2 * s**3)
    assert sp.simplify(diff - closed) == 0


@settings(max_examples=200, deadline=None)
@given(sigma=st.floats(1e-3, 0.7))
def test_frequency_shift_identity(sigma):
    assert freq_sq_shift_closed(sigma) == pytest.approx(freq_sq_shift(sigma), rel=1e-12, abs=1e-15)


@pytest.mark.xfail(strict=True, reason="the denominator 1 - 2s(1-s) is not the difference of the squared factors")
def test_frequency_shift_alternative_form():
    for sigma in np.random.default_rng(1).uniform(0.01, 0.7, 50):
        assert abs(freq_sq_shift_closed(sigma, "leading_order") - freq_sq_shift(sigma)) <= 1e-12


def test_alternative_form_value_and_leading_order():
    assert freq_sq_shift_closed(0.1, "leading_order") == pytest.approx(-4.04e-4, rel=1e-3)
    # both forms agree at leading order -4 s**2
    s = 1e-4
    assert freq_sq_shift_closed(math.sqrt(s), "leading_order") / (-4 * s * s) == pytest.approx(1, rel=1e-3)


def test_domain_guards():
    with pytest.raises(DomainError):
        dia_freq_factor(math.sqrt(0.5))
    with pytest.raises(DomainError):
        dia_wave(WaveParams.create(1.0, 0.8, 0.1), 1.0)
    with pytest.raises(DomainError):
        perturbative_freq_factor(1.0)
    with pytest.raises(ParameterError):
        freq_sq_shift_closed(0.1, "other")
    assert dia_freq_factor(0.7) > 0


# -- appendix forms -----------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(params=params_st, t=st.floats(0.0, 100.0))
def test_first_and_second_approximations_agree(params, t):
    a = appendix_f_approx(params, t, order=1)
    b = appendix_f_approx(params, t, order=2)
    assert abs(a - b) <= 1e-14


def _zero(fn, guess, k):
    half = 0.25 * math.pi / k
    return brentq(fn, guess - half, guess + half, xtol=1e-14)


def test_third_approximation_frequency_ratio():
    params = ModelParams.create(0.04, 0.2, 0.1)
    k = 0.2
    n = 10
    guess = n * math.pi / k
    z1 = _zero(lambda t: appendix_f_approx(params, t, 1), guess, k)
    z3 = _zero(lambda t: appendix_f_approx(params, t, 3), guess, k)
    s, lam = 0.04, 0.1
    expected = (1 - 3 * s * lam**2 / (32 * k**4)) / (1 - s * lam**2 / (16 * k**4))
    assert z1 / z3 == pytest.approx(expected, rel=1e-10)


def test_appendix_zero_lambda():
    params = ModelParams.create(0.25, 0.3, 0.0)
    t = np.linspace(0, 30, 301)
    for order in (1, 2, 3):
        assert np.allclose(appendix_f_approx(params, t, order), np.sin(0.5 * t) / 0.5, atol=1e-15)
    expected = np.exp(-0.09 * t**2 / 8) * np.cos(0.5 * t)
    assert np.allclose(appendix_green_first(params, t), expected, atol=1e-15)


def test_appendix_mu_sq_and_large_k_envelope():
    params = ModelParams.create(1.0, 0.2, 0.1)
    assert appendix_mu_sq(params) == pytest.approx(0.01 - 1.0)
    t = np.linspace(0, 2, 21)
    grows = appendix_f_approx(params, t, 3, small_damping=False)
    envelope = np.exp(-0.01 * (0.01 - 1.0) * t**2 / 8)
    assert np.allclose(grows, envelope * np.sin((1 - 3 * 0.04 * 0.01 / 32) * t), atol=1e-15)


# -- phase average ------------------------------------------------------------------


@pytest.mark.parametrize("branch", ["exact", "small_lambda", "large_lambda"])
def test_phase_average_at_origin(branch):
    assert phase_average_closed(OUParams(0.3, 2.0), 0.0, branch) == 1.0


def test_exact_branch_taylor_limits():
    params = OUParams(0.2, 1e-3)
    t = np.linspace(0.1, 100, 50)  # lam t <= 0.1
    exact = phase_average_closed(params, t)
    small = phase_average_closed(params, t, "small_lambda")
    exponent_gap = np.log(exact) - np.log(small)
    cubic = 0.04 / (4 * 1e-6) * (1e-3 * t) ** 3 / 6
    assert np.allclose(exponent_gap, cubic, rtol=0.05)
    big = OUParams(0.2, 1e3)
    t = np.linspace(10e-3, 1, 50)  # lam t >= 10
    rel = phase_average_closed(big, t) / phase_average_closed(big, t, "large_lambda") - 1
    assert np.all(np.abs(rel) <= 0.02)


def test_phase_average_bad_branch():
    with pytest.raises(ParameterError):
        phase_average_closed(OUParams(0.2, 1.0), 1.0, "medium")


# -- first-order system -------------------------------------------------------------


def test_first_order_coefficients_stated_values():
    out = first_order_system_coeffs(ModelParams.create(1.0, 0.2, 0.1))
    assert out.c1 == pytest.approx(0.04 * 0.01 / (2 * 4.01), rel=1e-14)
    assert out.c1 == pytest.approx(4.9875e-5, rel=1e-4)
    assert out.c2 == pytest.approx(9.975e-4, rel=1e-4)
    q1, q2 = c_integrals(1.0, 0.2, 0.1)
    assert out.c1 == pytest.approx(q1, rel=1e-8)
    assert out.c2 == pytest.approx(q2, rel=1e-8)


@pytest.mark.parametrize("nu, sigma, lam", [(0.04, 0.1, 0.3), (2.0, 0.5, 5.0)])
def test_first_order_coefficients_match_quadrature(nu, sigma, lam):
    out = first_order_system_coeffs(ModelParams.create(nu, sigma, lam))
    q1, q2 = c_integrals(nu, sigma, lam)
    assert out.c1 == pytest.approx(q1, rel=1e-8)
    assert out.c2 == pytest.approx(q2, rel=1e-8)


def test_first_order_no_noise():
    out = first_order_system_coeffs(ModelParams.create(0.09, 0.0, 0.5))
    assert (out.c1, out.c2, out.alpha) == (0.0, 0.0, 0.0)
    assert out.beta == pytest.approx(0.3, rel=1e-15)
    assert not out.overdamped


@pytest.mark.parametrize("nu, sigma", [(0.04, 0.1), (1.0, 0.5)])
def test_first_order_limits(nu, sigma):
    big = first_order_system_coeffs(ModelParams.create(nu, sigma, 1e3 * math.sqrt(nu)))
    assert big.alpha == pytest.approx(big.large_lambda_alpha, rel=0.01)
    assert big.beta == pytest.approx(big.large_lambda_beta, rel=0.01)
    small = first_order_system_coeffs(ModelParams.create(nu, sigma, 1e-3 * math.sqrt(nu)))
    assert small.alpha == pytest.approx(small.small_lambda_alpha, rel=0.01)
    assert small.beta == pytest.approx(small.small_lambda_beta, rel=0.01)


def test_overdamped_flag():
    out = first_order_system_coeffs(ModelParams.create(0.01, 2.0, 100.0))
    assert out.overdamped
    assert math.isnan(out.beta)
