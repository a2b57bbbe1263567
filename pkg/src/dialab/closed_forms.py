"""
Closed-form small-parameter solutions and coefficient formulas.

Oscillator results take :class:`~dialab.solvers.ModelParams` and a time
array; wave results take :class:`~dialab.solvers.WaveParams` and a range
array. Wave forms are amplitude-normalized by default (multiplied by
``1/k`` so that the ``sigma = 0`` limit is the Green's function
``sin(k x)/k``); pass ``normalized=False`` for the unit-amplitude variant.

Symbol conventions: ``mu_kernel`` is the memory-kernel decay rate of the
oscillator, ``refractive_fluctuation`` is the random index in the wave
problem, and ``appendix_mu_sq`` is the auxiliary ``sigma**2/4 - k**2``
that appears in the third Liouville-transform approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .solvers import ModelParams, WaveParams
from .stochastic import OUParams

__all__ = [
    "perturbative_green",
    "dia_third_green",
    "perturbative_wave",
    "dia_wave",
    "perturbative_rate",
    "dia_rate",
    "perturbative_freq_factor",
    "dia_freq_factor",
    "freq_sq_shift",
    "freq_sq_shift_closed",
    "AttenuationReport",
    "attenuation_report",
    "appendix_mu_sq",
    "appendix_f_approx",
    "appendix_green_first",
    "phase_average_closed",
    "FirstOrderCoeffs",
    "first_order_system_coeffs",
]

# 1 - 3 s + 2 s^2 = (1 - s)(1 - 2 s) vanishes first at s = 1/2
DIA_SIGMA_SQ_LIMIT = 0.5


# -- oscillator -------------------------------------------------------------


def perturbative_green(params: ModelParams, t):
    """Small-parameter Green's function of the perturbative closure.

    ``nu/(2 nu + s) exp(-lam t) + (nu + s)/(2 nu + s) cos(sqrt(2 nu + s) t)``
    with ``s = sigma**2``. The cosine part never decays.
    """
    t = np.asarray(t, dtype=float)
    nu, s = params.nu, params.ou.variance
    total = 2.0 * nu + s
    return nu / total * np.exp(-params.lam * t) + (nu + s) / total * np.cos(
        math.sqrt(total) * t
    )


def dia_third_green(params: ModelParams, t):
    """Small-parameter Green's function from the third DIA approximant.

    ``exp(-lam t) [a + b cos(w t) + (lam/w) sin(w t)]`` with
    ``w = sqrt(3 nu + 2 s)``, ``a = (2 nu + s)/(3 nu + 2 s)`` and
    ``b = (nu + s)/(3 nu + 2 s)``. The sine term makes ``G'(0+) = lam``
    rather than 0; it is kept as is.
    """
    t = np.asarray(t, dtype=float)
    nu, s, lam = params.nu, params.ou.variance, params.lam
    total = 3.0 * nu + 2.0 * s
    w = math.sqrt(total)
    bracket = (2 * nu + s) / total + (nu + s) / total * np.cos(w * t) + lam / w * np.sin(w * t)
    return np.exp(-lam * t) * bracket


# -- wave attenuation and wavenumber shift ----------------------------------


def _sigma_sq(sigma: float) -> float:
    if not math.isfinite(sigma) or sigma < 0:
        raise ParameterError(f"sigma must be finite and >= 0, got {sigma}")
    return sigma * sigma


def perturbative_rate(sigma: float, lam: float) -> float:
    """Attenuation rate ``sigma**2 lam / (1 + sigma**2)`` of the perturbative closure."""
    s = _sigma_sq(sigma)
    return s * lam / (1.0 + s)


def dia_rate(sigma: float, lam: float) -> float:
    """Attenuation rate ``s (1 + 2 s) lam / (1 - s + 2 s**2)``, ``s = sigma**2``."""
    s = _sigma_sq(sigma)
    return s * (1.0 + 2.0 * s) * lam / (1.0 - s + 2.0 * s * s)


def perturbative_freq_factor(sigma: float) -> float:
    """Wavenumber factor ``sqrt((1 - s)/(1 + s))``."""
    s = _sigma_sq(sigma)
    if s >= 1.0:
        raise DomainError(f"perturbative frequency factor needs sigma**2 < 1, got {s}")
    return math.sqrt((1.0 - s) / (1.0 + s))


def dia_freq_factor(sigma: float) -> float:
    """Wavenumber factor ``sqrt((1 - 3 s + 2 s**2)/(1 - s + 2 s**2))``; needs ``s < 1/2``."""
    s = _sigma_sq(sigma)
    if s >= DIA_SIGMA_SQ_LIMIT:
        raise DomainError(f"DIA frequency factor needs sigma**2 < 1/2, got {s}")
    return math.sqrt((1.0 - 3.0 * s + 2.0 * s * s) / (1.0 - s + 2.0 * s * s))


def freq_sq_shift(sigma: float) -> float:
    """Difference of squared frequency factors, DIA minus perturbative, by direct evaluation."""
    return dia_freq_factor(sigma) ** 2 - perturbative_freq_factor(sigma) ** 2


def freq_sq_shift_closed(sigma: float, form: str = "exact") -> float:
    """Closed form of :func:`freq_sq_shift`.

    ``form="exact"`` gives ``-4 s**2 (1 - s) / (1 + s**2 + 2 s**3)``, which
    equals the direct difference identically. ``form="leading_order"`` gives the
    alternative ``-4 s**2 (1 - s) / (1 - 2 s (1 - s))``; it agrees
    only to leading order in ``s``.
    """
    s = _sigma_sq(sigma)
    num = -4.0 * s * s * (1.0 - s)
    if form == "exact":
        return num / (1.0 + s * s + 2.0 * s**3)
    if form == "leading_order":
        return num / (1.0 - 2.0 * s * (1.0 - s))
    raise ParameterError(f"form must be 'exact' or 'leading_order', got {form!r}")


def _wave(params: WaveParams, xi, rate: float, factor: float, normalized: bool):
    xi = np.asarray(xi, dtype=float)
    k = params.k
    out = np.exp(-rate * xi) * np.sin(factor * k * xi)
    return out / k if normalized else out


def perturbative_wave(params: WaveParams, xi, normalized: bool = True):
    """Mean wave field of the perturbative closure.

    ``exp(-r x) sin(f k x)`` with ``r`` from :func:`perturbative_rate` and
    ``f`` from :func:`perturbative_freq_factor`, divided by ``k`` when
    ``normalized``.
    """
    sigma, lam = params.sigma, params.lam
    return _wave(params, xi, perturbative_rate(sigma, lam), perturbative_freq_factor(sigma), normalized)


def dia_wave(params: WaveParams, xi, normalized: bool = True):
    """Mean wave field of the third DIA approximant (``sigma**2 < 1/2``)."""
    sigma, lam = params.sigma, params.lam
    return _wave(params, xi, dia_rate(sigma, lam), dia_freq_factor(sigma), normalized)


@dataclass(frozen=True)
class AttenuationReport:
    """Attenuation rates (1/length) and wavenumber factors of both closures."""

    sigma: float
    lam: float
    perturbative_rate: float
    dia_rate: float
    perturbative_freq_factor: float
    dia_freq_factor: float

    @property
    def rate_ratio(self) -> float:
        return self.dia_rate / self.perturbative_rate if self.perturbative_rate else math.nan

    @property
    def freq_sq_shift(self) -> float:
        return self.dia_freq_factor**2 - self.perturbative_freq_factor**2


def attenuation_report(sigma: float, lam: float) -> AttenuationReport:
    """Collect both closures' coefficients.

    For ``0 < sigma <= 0.5`` the DIA rate must exceed the perturbative rate
    (their ratio is ``(1 + 3 s + 2 s**2)/(1 - s + 2 s**2) > 1``); a
    violation raises ``AssertionError``.
    """
    report = AttenuationReport(
        sigma,
        lam,
        perturbative_rate(sigma, lam),
        dia_rate(sigma, lam),
        perturbative_freq_factor(sigma),
        dia_freq_factor(sigma),
    )
    if 0 < sigma <= 0.5 and lam > 0:
        assert report.dia_rate > report.perturbative_rate, report
    return report


# -- Liouville-transform approximations -------------------------------------


def _k(params: ModelParams) -> float:
    k = math.sqrt(params.nu)
    if k == 0.0:
        raise DomainError("k = sqrt(nu) must be nonzero")
    return k


def appendix_mu_sq(params: ModelParams) -> float:
    """Auxiliary ``sigma**2/4 - k**2`` with ``k**2 = nu``."""
    return params.ou.variance / 4.0 - params.nu


def appendix_f_approx(params: ModelParams, t, order: int = 1, small_damping: bool = True):
    """Mean Liouville-transformed amplitude from the three successive approximations.

    Orders 1 and 2 both give::

        (1/k) exp(-s lam**2 t**2 / (32 k**2)) sin((1 - s lam**2/(16 k**4)) k t)

    Order 3 changes the shift factor to ``1 - 3 s lam**2 / (32 k**4)``. Its
    envelope is the same Gaussian when ``small_damping`` is true; otherwise
    it is ``exp(-lam**2 m t**2 / (8 k**2))`` with ``m = appendix_mu_sq``,
    which grows when ``m < 0`` and is only meaningful for short times.

    Here ``s = sigma**2`` and ``k = sqrt(nu)``.
    """
    if order not in (1, 2, 3):
        raise ParameterError(f"order must be 1, 2 or 3, got {order}")
    t = np.asarray(t, dtype=float)
    k = _k(params)
    s, lam = params.ou.variance, params.lam
    exponent = -s * lam * lam / (32.0 * k * k)
    if order < 3:
        shift = 1.0 - s * lam * lam / (16.0 * k**4)
    else:
        shift = 1.0 - 3.0 * s * lam * lam / (32.0 * k**4)
        if not small_damping:
            exponent = -lam * lam * appendix_mu_sq(params) / (8.0 * k * k)
    return np.exp(exponent * t * t) * np.sin(shift * k * t) / k


def appendix_green_first(params: ModelParams, t):
    """Gaussian-envelope approximation of the mean oscillator Green's function.

    ``exp(-(1 + lam**2/(4 k**2)) s t**2 / 8) cos((1 - s lam**2/(16 k**4)) k t)``:
    the derivative of the first approximation's carrier times the small-lam
    phase average.
    """
    t = np.asarray(t, dtype=float)
    k = _k(params)
    s, lam = params.ou.variance, params.lam
    shift = 1.0 - s * lam * lam / (16.0 * k**4)
    carrier = np.exp(-s * lam * lam * t * t / (32.0 * k * k)) * np.cos(shift * k * t)
    return carrier * phase_average_closed(params.ou, t, "small_lambda")


def phase_average_closed(params: OUParams, t, branch: str = "exact"):
    """Closed form of ``<exp(-(i/2) int_0^t b)>`` for an OU coefficient b.

    ``exact``: ``exp(-(s/(4 lam**2)) (lam t - 1 + exp(-lam t)))``.
    ``small_lambda``: ``exp(-s t**2 / 8)``. ``large_lambda``: ``exp(-s t / (4 lam))``.
    """
    t = np.asarray(t, dtype=float)
    s, lam = params.variance, params.lam
    if branch == "exact":
        if lam == 0.0:
            return np.exp(-s * t * t / 8.0)
        x = lam * t
        # x - 1 + exp(-x) loses all digits for small x; expm1 keeps them
        bracket = x + np.expm1(-x)
        return np.exp(-s / (4.0 * lam * lam) * bracket)
    if branch == "small_lambda":
        return np.exp(-s * t * t / 8.0)
    if branch == "large_lambda":
        if lam == 0.0:
            raise DomainError("large-lambda branch needs lam > 0")
        return np.exp(-s * t / (4.0 * lam))
    raise ParameterError(f"unknown branch {branch!r}")


# -- first-order system ------------------------------------------------------


@dataclass(frozen=True)
class FirstOrderCoeffs:
    """Coefficients of the averaged first-order system and its damped modes.

    The mean amplitude behaves like ``exp(-alpha t)(d1 cos(beta t) + d2 sin(beta t))``.
    ``beta`` is NaN and ``overdamped`` is set when ``beta**2 < 0``.
    """

    c1: float
    c2: float
    alpha: float
    beta: float
    overdamped: bool
    large_lambda_alpha: float
    large_lambda_beta: float
    small_lambda_alpha: float
    small_lambda_beta: float


def first_order_system_coeffs(params: ModelParams) -> FirstOrderCoeffs:
    """Evaluate ``c1``, ``c2``, ``alpha``, ``beta`` and their limiting forms.

    ``c1 = s lam**2 / (2 nu (lam**2 + 4 nu))``,
    ``c2 = s lam / (sqrt(nu) (lam**2 + 4 nu))``,
    ``alpha = sqrt(nu) c2 / 4`` and
    ``beta = sqrt(nu (1 - c2**2/16 - c1/2))``.
    For large lam, ``alpha -> s/(4 lam)`` and ``beta -> sqrt(nu - s/4)``;
    for small lam, ``alpha -> s lam / (16 nu)`` and ``beta -> sqrt(nu)``.
    """
    nu, s, lam = params.nu, params.ou.variance, params.lam
    root = math.sqrt(nu)
    denom = lam * lam + 4.0 * nu
    c1 = s * lam * lam / (2.0 * nu * denom)
    c2 = s * lam / (root * denom)
    alpha = root * c2 / 4.0
    beta_sq = nu * (1.0 - c2 * c2 / 16.0 - c1 / 2.0)
    overdamped = beta_sq < 0
    beta = math.nan if overdamped else math.sqrt(beta_sq)
    large_beta_sq = nu - s / 4.0
    return FirstOrderCoeffs(
        c1=c1,
        c2=c2,
        alpha=alpha,
        beta=beta,
        overdamped=overdamped,
        large_lambda_alpha=s / (4.0 * lam) if lam > 0 else math.inf,
        large_lambda_beta=math.sqrt(large_beta_sq) if large_beta_sq >= 0 else math.nan,
        small_lambda_alpha=s * lam / (16.0 * nu),
        small_lambda_beta=root,
    )
