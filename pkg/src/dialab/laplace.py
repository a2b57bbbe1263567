"""
Laplace-domain representation of the DIA closures.

The closed oscillator equation transforms into the functional equation::

    G(p) [p + nu/(p + mu) + sigma**2 G(p + lam)] = 1

and the closed wave equation into::

    (p**2 + k**2) E(p) - sigma**2 k**4 E(p + lam) E(p) = 1

Both are solved by continued fractions whose levels are shifted by
``lam``. Truncating at level ``depth`` (tail set to zero) gives rational
approximants; depth 1 is the unperturbed response and depth 2 the
perturbative (Keller) closure.

Time-domain values are recovered from a Fourier-series discretization
of the Bromwich integral whose alternating tail is summed with Euler
(binomial) averaging.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy import linalg
from scipy.special import comb

from .errors import InversionError, ParameterError, PoleError
from .solvers import ModelParams, Series, WaveParams
from .stochastic import TimeGrid

__all__ = [
    "ApproximantSpec",
    "LaplaceFunction",
    "InversionConfig",
    "InversionWarning",
    "dia_approximant",
    "perturbative_transform",
    "functional_residual",
    "approximant_poles",
    "abscissa_bound",
    "approximant_function",
    "invert_laplace",
    "invert_approximant",
]

POLE_THRESHOLD = 1e-14
MODELS = ("oscillator", "wave")


class InversionWarning(UserWarning):
    """Reconstruction has a non-negligible imaginary part."""


@dataclass(frozen=True)
class ApproximantSpec:
    """Which continued fraction to truncate, and where.

    ``tail="zero"`` reproduces the classical approximants. ``tail="fixed_point"``
    closes the deepest level with the root of ``g = 1/(a + c g)`` instead.
    """

    model: str
    depth: int
    params: Union[ModelParams, WaveParams]
    tail: str = "zero"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}, got {self.model!r}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ParameterError(f"depth must be an integer >= 1, got {self.depth}")
        expected = ModelParams if self.model == "oscillator" else WaveParams
        if not isinstance(self.params, expected):
            raise ParameterError(f"{self.model} approximant needs {expected.__name__}")
        if self.tail not in ("zero", "fixed_point"):
            raise ParameterError(f"unknown tail {self.tail!r}")

    def with_depth(self, depth: int) -> "ApproximantSpec":
        return replace(self, depth=depth)


def _level_oscillator(params: ModelParams, q, tail):
    """One backward step: (q + mu) / (q (q + mu) + nu + sigma**2 (q + mu) tail)."""
    mu = params.mu_kernel
    qm = q + mu
    return qm, q * qm + params.nu + params.ou.variance * qm * tail


def _level_wave(params: WaveParams, q, tail):
    k2 = params.k * params.k
    return 1.0, q * q + k2 - params.ou.variance * k2 * k2 * tail


def _fixed_point_tail(spec: ApproximantSpec, q):
    p = spec.params
    s2 = p.ou.variance
    if s2 == 0.0:
        return np.zeros_like(q)
    if spec.model == "oscillator":
        a = q + p.nu / (q + p.mu_kernel)
        c = s2
    else:
        a = q * q + p.k**2
        c = -s2 * p.k**4
    # root of c g^2 + a g - 1 = 0 that behaves like 1/a for large |a|
    root = np.sqrt(a * a + 4.0 * c)
    root = np.where(np.real(root * np.conj(a)) < 0, -root, root)
    return 2.0 / (a + root)


def dia_approximant(spec: ApproximantSpec, p):
    """Evaluate the depth-``spec.depth`` approximant at complex ``p`` (array-friendly).

    Uses the backward recurrence from the truncation level down to level 0.
    Raises :class:`PoleError` (with the offending level) when a level
    denominator falls below 1e-14 in magnitude.
    """
    p = np.asarray(p, dtype=complex)
    lam = spec.params.ou.lam
    level = _level_oscillator if spec.model == "oscillator" else _level_wave
    if spec.tail == "zero":
        g = np.zeros_like(p)
    else:
        g = _fixed_point_tail(spec, p + spec.depth * lam)
    for j in range(spec.depth - 1, -1, -1):
        num, den = level(spec.params, p + j * lam, g)
        if np.any(np.abs(den) < POLE_THRESHOLD):
            raise PoleError(f"pole of the depth-{spec.depth} approximant at level {j}", level=j)
        g = num / den
    return g[()] if g.ndim == 0 else g


def perturbative_transform(model: str, params, p):
    """Closed-form transform of the perturbative (second-order) closure.

    Oscillator::

        1 / (p + nu/(p+mu) + sigma**2 (p+lam+mu) / ((p+lam)(p+lam+mu) + nu))

    Wave::

        1 / (p**2 + k**2 - sigma**2 k**4 / ((p+lam)**2 + k**2))
    """
    p = np.asarray(p, dtype=complex)
    s2 = params.ou.variance
    lam = params.ou.lam
    if model == "oscillator":
        mu = params.mu_kernel
        q = p + lam
        inner = q * (q + mu) + params.nu
        den = p + params.nu / (p + mu) + s2 * (q + mu) / inner
    elif model == "wave":
        k2 = params.k**2
        inner = (p + lam) ** 2 + k2
        den = p * p + k2 - s2 * k2 * k2 / inner
    else:
        raise ParameterError(f"unknown model {model!r}")
    if np.any(np.abs(inner) < POLE_THRESHOLD) or np.any(np.abs(den) < POLE_THRESHOLD):
        raise PoleError("pole of the perturbative transform", level=1)
    out = 1.0 / den
    return out[()] if out.ndim == 0 else out


def functional_residual(spec: ApproximantSpec, p):
    """Residual ``LHS - 1`` of the functional equation with the approximant at p and p + lam."""
    p = np.asarray(p, dtype=complex)
    prm = spec.params
    g = dia_approximant(spec, p)
    g_shift = dia_approximant(spec, p + prm.ou.lam)
    if spec.model == "oscillator":
        lhs = g * (p + prm.nu / (p + prm.mu_kernel) + prm.ou.variance * g_shift)
    else:
        k2 = prm.k**2
        lhs = (p * p + k2) * g - prm.ou.variance * k2 * k2 * g_shift * g
    return lhs - 1.0


def _quadratic_pencil(spec: ApproximantSpec):
    """Tridiagonal T(p) = p^2 I + p A1 + A0 with det T = continuant denominator."""
    n = spec.depth
    prm = spec.params
    lam = prm.ou.lam
    sigma = prm.ou.sigma
    j = np.arange(n, dtype=float)
    A1 = np.zeros((n, n))
    A0 = np.zeros((n, n))
    if spec.model == "oscillator":
        mu = prm.mu_kernel
        A1[j.astype(int), j.astype(int)] = 2 * j * lam + mu
        A0[j.astype(int), j.astype(int)] = j * lam * (j * lam + mu) + prm.nu
        for i in range(1, n):
            # super * sub = -sigma^2 (s_{i-1} + mu)(s_i + mu)
            A1[i - 1, i] = sigma
            A0[i - 1, i] = sigma * ((i - 1) * lam + mu)
            A1[i, i - 1] = -sigma
            A0[i, i - 1] = -sigma * (i * lam + mu)
    else:
        k2 = prm.k**2
        A1[j.astype(int), j.astype(int)] = 2 * j * lam
        A0[j.astype(int), j.astype(int)] = (j * lam) ** 2 + k2
        for i in range(1, n):
            A0[i - 1, i] = A0[i, i - 1] = sigma * k2
    return A1, A0


def approximant_poles(spec: ApproximantSpec) -> np.ndarray:
    """Poles of a zero-tail approximant.

    The denominator of the truncated fraction is the determinant of a
    tridiagonal matrix quadratic in p; its roots are the eigenvalues of the
    companion linearization, which avoids forming the high-degree
    polynomial explicitly.
    """
    n = spec.depth
    A1, A0 = _quadratic_pencil(spec)
    companion = np.block([[np.zeros((n, n)), np.eye(n)], [-A0, -A1]])
    return np.sort_complex(linalg.eigvals(companion))


def abscissa_bound(spec: ApproximantSpec) -> float:
    """Largest real part among the poles of the zero-tail truncation."""
    return float(np.max(approximant_poles(spec).real))


@dataclass(frozen=True)
class LaplaceFunction:
    """A vectorized map p -> F(p), analytic for Re p > ``abscissa``.

    ``bandwidth`` bounds the imaginary parts of the singularities; the
    inversion uses it to decide how many Fourier terms must be summed
    before the tail becomes regular. Leave it at 0 when unknown.
    """

    func: Callable
    abscissa: float = 0.0
    label: str = ""
    bandwidth: float = 0.0

    def __call__(self, p):
        return self.func(p)

    def cauchy_riemann_defect(self, points, h: float = 1e-6) -> float:
        """Largest |dF/dx + i dF/dy| / |dF/dx| over ``points`` (central differences)."""
        z = np.asarray(points, dtype=complex)
        dx = (self.func(z + h) - self.func(z - h)) / (2 * h)
        dy = (self.func(z + 1j * h) - self.func(z - 1j * h)) / (2 * h)
        scale = np.maximum(np.abs(dx), np.finfo(float).tiny)
        return float(np.max(np.abs(dx + 1j * dy) / scale))


def approximant_function(spec: ApproximantSpec) -> LaplaceFunction:
    """Wrap an approximant with its pole-derived abscissa and bandwidth."""
    if spec.tail == "zero":
        poles = approximant_poles(spec)
        abscissa = float(np.max(poles.real))
        bandwidth = float(np.max(np.abs(poles.imag)))
    else:
        # the fixed-point tail adds branch points; bound them by the next depth
        poles = approximant_poles(spec.with_depth(spec.depth + 1))
        abscissa = max(0.0, float(np.max(poles.real)))
        bandwidth = float(np.max(np.abs(poles.imag)))
    return LaplaceFunction(
        lambda p: dia_approximant(spec, p),
        abscissa,
        f"{spec.model} depth {spec.depth}",
        bandwidth,
    )


@dataclass(frozen=True)
class InversionConfig:
    """Parameters of the Fourier-series Bromwich inversion.

    At each output time t the series samples F on the line
    ``Re p = c0 + shift`` with spacing ``pi / t``. By default the shift is
    ``-log(discretization) / (2 t)``, which keeps the aliasing error near
    ``discretization`` relative to the growth envelope ``exp(c0 t)``; a
    fixed ``shift`` applies to every t instead.

    ``terms`` (M) is the number of terms summed beyond those needed to
    pass the transform's bandwidth; the remaining alternating tail is
    Euler-averaged with binomial weights of order ``order``. ``margin``
    widens the bandwidth allowance. ``c0`` overrides the abscissa
    declared by the function.

    Attributes
    ----------
    c0, shift : float or None
    terms : int
        At least 16.
    order : int
        Euler acceleration order.
    discretization : float
    margin : float
    tol : float
        Target absolute accuracy; exceeding it raises.
    initial_value_p : float
        Real p used for the initial-value limit at t = 0.
    """

    c0: Optional[float] = None
    shift: Optional[float] = None
    terms: int = 20
    order: int = 15
    discretization: float = 1e-11
    margin: float = 1.0
    tol: float = 1e-8
    initial_value_p: float = 1e10

    def __post_init__(self):
        if self.terms < 16:
            raise ParameterError(f"terms must be >= 16, got {self.terms}")
        if self.order < 1:
            raise ParameterError(f"order must be >= 1, got {self.order}")
        if self.shift is not None and self.shift <= 0:
            raise ParameterError("contour shift must be > 0 (c > c0)")
        if not 0 < self.discretization < 1:
            raise ParameterError("discretization must be in (0, 1)")
        if self.margin < 0:
            raise ParameterError("margin must be >= 0")
        if self.tol <= 0:
            raise ParameterError("tol must be > 0")

    def series_length(self, bandwidth: float, t_max: float) -> int:
        """Terms summed directly before Euler averaging starts."""
        return int(math.ceil(bandwidth * t_max * (1.0 + self.margin) / math.pi)) + self.terms


def _euler_series(func, t, c0, bandwidth, cfg: InversionConfig):
    """Invert at positive times t; returns (complex values, error estimates)."""
    n = cfg.series_length(bandwidth, float(t.max()))
    m = cfg.order
    k = np.arange(n + m + 1)
    if cfg.shift is None:
        shift = -math.log(cfg.discretization) / (2.0 * t)
    else:
        shift = np.full_like(t, cfg.shift)
    p = (c0 + shift)[:, None] + 1j * math.pi * k[None, :] / t[:, None]
    # pairing p with conj(p) sums the two-sided series; for a real-valued
    # inverse the result is real and any imaginary part flags asymmetry
    both = np.asarray(func(np.concatenate([p, p.conj()])), dtype=complex)
    terms = 0.5 * (both[: t.size] + both[t.size :]) * np.where(k % 2 == 0, 1.0, -1.0)
    terms[:, 0] *= 0.5
    partial = np.cumsum(terms, axis=1)
    weights = comb(m, np.arange(m + 1)) / 2.0**m
    prefactor = np.exp((c0 + shift) * t) / t
    value = prefactor * (partial[:, n : n + m + 1] @ weights)
    previous = prefactor * (partial[:, n - 1 : n + m] @ weights)
    # acceleration gap + aliasing + cancellation in the amplified sum
    aliasing = np.exp(-2.0 * shift * t) * np.abs(value.real)
    rounding = (
        np.finfo(float).eps * prefactor * np.max(np.abs(terms), axis=1) * math.sqrt(k.size)
    )
    estimate = np.abs(value.real - previous.real) + aliasing + rounding
    return value, estimate


def invert_laplace(
    f: LaplaceFunction, grid: TimeGrid, cfg: InversionConfig = InversionConfig()
) -> Series:
    """Invert ``f`` onto ``grid``.

    The value at t = 0 is the initial-value limit ``p f(p)`` at
    ``p = cfg.initial_value_p``. Raises :class:`InversionError` when the
    error estimate exceeds ``cfg.tol`` anywhere; warns with
    :class:`InversionWarning` when the imaginary part of the reconstruction
    exceeds ``cfg.tol``.
    """
    c0 = f.abscissa if cfg.c0 is None else cfg.c0
    times = grid.times
    out = np.empty(times.size)
    positive = times > 0
    with np.errstate(all="ignore"):
        value, estimate = _euler_series(f.func, times[positive], c0, f.bandwidth, cfg)
    if not np.all(np.isfinite(value)):
        raise InversionError("inversion produced non-finite values", estimate=float("inf"))
    worst = float(np.max(estimate)) if estimate.size else 0.0
    if worst > cfg.tol:
        raise InversionError(
            f"series acceleration stagnated: error estimate {worst:.3g} > tol {cfg.tol:.3g}",
            estimate=worst,
        )
    imag = float(np.max(np.abs(value.imag))) if value.size else 0.0
    if imag > cfg.tol:
        warnings.warn(f"imaginary part {imag:.3g} exceeds tol {cfg.tol:.3g}", InversionWarning)
    out[positive] = value.real
    if not np.all(positive):
        s = cfg.initial_value_p
        out[~positive] = float(np.real(s * f.func(np.asarray(s, dtype=complex))))
    return Series(grid, out)


def invert_approximant(
    spec: ApproximantSpec, grid: TimeGrid, cfg: InversionConfig = InversionConfig()
) -> Series:
    """Time-domain values of a continued-fraction approximant."""
    return invert_laplace(approximant_function(spec), grid, cfg)
