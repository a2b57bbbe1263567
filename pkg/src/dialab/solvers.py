"""
Time-domain solution routes for the two model problems.

Oscillator with memory damping and random frequency::

    G' + i b(t) G + int_0^t nu exp(-mu (t - s)) G(s) ds = delta(t)

Wave in a random medium::

    E'' + k**2 (1 + m(x)) E = delta(x)

Single realizations are integrated with classical RK4, the delta forcing
being replaced by the jump condition on the highest derivative. The memory
integral is carried as an auxiliary state ``z' = -mu z + nu G``. Midpoint
coefficient values come from an OU path sampled on a grid twice as fine as
the output grid, so the sample solvers take their path on ``grid.refined(2)``.

The closed DIA equations are solved deterministically with trapezoid
product integration of the quadratic convolution term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AccuracyError, DivergenceError, InputError, ParameterError
from .stochastic import (
    DEFAULT_BLOCK,
    EnsembleStats,
    OUParams,
    OUPath,
    RngSeed,
    TimeGrid,
    ensemble_stats,
    sample_ou_paths,
)

__all__ = [
    "ModelParams",
    "WaveParams",
    "Series",
    "solve_model_sample",
    "solve_wave_sample",
    "ensemble_green_function",
    "ensemble_wave_field",
    "solve_dia_volterra_model",
    "solve_dia_volterra_wave",
]

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class ModelParams:
    """Damping strength ``nu``, memory decay rate ``mu_kernel`` and the OU law of b."""

    nu: float
    mu_kernel: float
    ou: OUParams

    def __post_init__(self):
        if not (math.isfinite(self.nu) and math.isfinite(self.mu_kernel)):
            raise ParameterError("nu and mu_kernel must be finite")
        if self.nu <= 0:
            raise ParameterError(f"nu must be > 0, got {self.nu}")
        if self.mu_kernel < 0:
            raise ParameterError(f"mu_kernel must be >= 0, got {self.mu_kernel}")

    @classmethod
    def create(cls, nu, sigma, lam, mu_kernel=0.0):
        return cls(nu, mu_kernel, OUParams(sigma, lam))

    @property
    def sigma(self):
        return self.ou.sigma

    @property
    def lam(self):
        return self.ou.lam

    @property
    def omega0(self):
        """Unperturbed angular frequency sqrt(nu)."""
        return math.sqrt(self.nu)


@dataclass(frozen=True)
class WaveParams:
    """Wavenumber ``k`` and the OU law of the refractive-index fluctuation."""

    k: float
    ou: OUParams

    def __post_init__(self):
        if not math.isfinite(self.k) or self.k <= 0:
            raise ParameterError(f"k must be finite and > 0, got {self.k}")

    @classmethod
    def create(cls, k, sigma, lam):
        return cls(k, OUParams(sigma, lam))

    @property
    def sigma(self):
        return self.ou.sigma

    @property
    def lam(self):
        return self.ou.lam


@dataclass(frozen=True)
class Series:
    """Values (real or complex) sampled on a :class:`TimeGrid`."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != (self.grid.n_steps,):
            raise InputError(
                f"series has shape {values.shape}, grid expects ({self.grid.n_steps},)"
            )
        object.__setattr__(self, "values", values)

    @property
    def times(self):
        return self.grid.times

    @property
    def real(self) -> "Series":
        return Series(self.grid, np.real(self.values).astype(float))


def _output_grid(path: OUPath, grid: Optional[TimeGrid]) -> TimeGrid:
    coarse = path.grid.coarsened(2)
    if grid is not None and grid != coarse:
        raise InputError(
            f"path grid {path.grid} is not the 2x refinement of output grid {grid}"
        )
    return coarse


def _check_state(i, *arrays, offset=0):
    for a in arrays:
        bad = ~np.isfinite(a) | (np.abs(a) > DIVERGENCE_LIMIT)
        if np.any(bad):
            row = int(np.argmax(bad)) + offset
            raise DivergenceError(
                f"state diverged at step {i} (sample {row})", step=i, sample=row
            )


def _rk4_oscillator(b, h, nu, mu, forcing=None, t0_offset=0):
    """Batched RK4 for (G, z); ``b`` has shape (B, 2n-1) on the half-step grid."""
    nb, nf = b.shape
    n = (nf - 1) // 2 + 1
    out = np.empty((nb, n), dtype=complex)
    if forcing is None:
        G = np.ones(nb, dtype=complex)
    else:
        G = np.zeros(nb, dtype=complex)
    z = np.zeros(nb, dtype=complex)
    out[:, 0] = G
    half = 0.5 * h
    for i in range(n - 1):
        b0, bm, b1 = b[:, 2 * i], b[:, 2 * i + 1], b[:, 2 * i + 2]
        if forcing is None:
            f0 = fm = f1 = 0.0
        else:
            t = i * h
            f0, fm, f1 = forcing(t), forcing(t + half), forcing(t + h)
        k1g = -1j * b0 * G - z + f0
        k1z = nu * G - mu * z
        g, zz = G + half * k1g, z + half * k1z
        k2g = -1j * bm * g - zz + fm
        k2z = nu * g - mu * zz
        g, zz = G + half * k2g, z + half * k2z
        k3g = -1j * bm * g - zz + fm
        k3z = nu * g - mu * zz
        g, zz = G + h * k3g, z + h * k3z
        k4g = -1j * b1 * g - zz + f1
        k4z = nu * g - mu * zz
        G = G + (h / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        z = z + (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        _check_state(i + 1, G, z, offset=t0_offset)
        out[:, i + 1] = G
    return out


def _rk4_wave(m, h, k, forcing=None, t0_offset=0):
    """Batched RK4 for (E, E'); ``m`` has shape (B, 2n-1) on the half-step grid."""
    nb, nf = m.shape
    n = (nf - 1) // 2 + 1
    out = np.empty((nb, n))
    E = np.zeros(nb)
    V = np.zeros(nb) if forcing is not None else np.ones(nb)
    out[:, 0] = E
    k2 = k * k
    half = 0.5 * h
    for i in range(n - 1):
        c0 = -k2 * (1.0 + m[:, 2 * i])
        cm = -k2 * (1.0 + m[:, 2 * i + 1])
        c1 = -k2 * (1.0 + m[:, 2 * i + 2])
        if forcing is None:
            f0 = fm = f1 = 0.0
        else:
            t = i * h
            f0, fm, f1 = forcing(t), forcing(t + half), forcing(t + h)
        k1e, k1v = V, c0 * E + f0
        e, v = E + half * k1e, V + half * k1v
        k2e, k2v = v, cm * e + fm
        e, v = E + half * k2e, V + half * k2v
        k3e, k3v = v, cm * e + fm
        e, v = E + h * k3e, V + h * k3v
        k4e, k4v = v, c1 * e + f1
        E = E + (h / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
        V = V + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        _check_state(i + 1, E, V, offset=t0_offset)
        out[:, i + 1] = E
    return out


def solve_model_sample(
    params: ModelParams,
    path: OUPath,
    grid: Optional[TimeGrid] = None,
    forcing: Optional[Callable[[float], float]] = None,
) -> Series:
    """Integrate the oscillator for one realization of b(t).

    Parameters
    ----------
    params : ModelParams
    path : OUPath
        Coefficient path on the half-step grid, i.e. ``grid.refined(2)``.
    grid : TimeGrid, optional
        Requested output grid; checked against ``path``.
    forcing : callable, optional
        Smooth forcing f(t) replacing the delta. The solver then starts from
        rest instead of the jump condition G(0+) = 1.

    Returns
    -------
    Series
        Complex G-hat on the output grid.
    """
    out_grid = _output_grid(path, grid)
    vals = _rk4_oscillator(
        path.values[None, :], out_grid.dt, params.nu, params.mu_kernel, forcing
    )
    return Series(out_grid, vals[0])


def solve_wave_sample(
    params: WaveParams,
    path: OUPath,
    grid: Optional[TimeGrid] = None,
    forcing: Optional[Callable[[float], float]] = None,
) -> Series:
    """Integrate ``E'' = -k**2 (1 + m) E`` with E(0) = 0, E'(0) = 1 for one path of m."""
    out_grid = _output_grid(path, grid)
    vals = _rk4_wave(path.values[None, :], out_grid.dt, params.k, forcing)
    return Series(out_grid, vals[0])


def ensemble_green_function(
    params: ModelParams,
    grid: TimeGrid,
    n_samples: int,
    seed: RngSeed,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK,
) -> EnsembleStats:
    """Monte Carlo mean of G-hat over independent OU paths (sample i uses stream i)."""
    if n_samples < 2:
        raise InputError("ensemble_green_function needs n_samples >= 2")
    fine = grid.refined(2)

    def block(start, stop):
        b = sample_ou_paths(params.ou, fine, stop - start, seed, start=start)
        return _rk4_oscillator(b, grid.dt, params.nu, params.mu_kernel, t0_offset=start)

    return ensemble_stats(block, grid, n_samples, workers, block_size)


def ensemble_wave_field(
    params: WaveParams,
    grid: TimeGrid,
    n_samples: int,
    seed: RngSeed,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK,
) -> EnsembleStats:
    """Monte Carlo mean of the wave field E over independent medium realizations."""
    if n_samples < 2:
        raise InputError("ensemble_wave_field needs n_samples >= 2")
    fine = grid.refined(2)

    def block(start, stop):
        m = sample_ou_paths(params.ou, fine, stop - start, seed, start=start)
        return _rk4_wave(m, grid.dt, params.k, t0_offset=start)

    return ensemble_stats(block, grid, n_samples, workers, block_size)


# -- DIA Volterra oracles ---------------------------------------------------


def _volterra_model(nu, mu, s2, lam, h, n):
    G = np.empty(n)
    G[0] = 1.0
    if n == 1:
        return G
    damp = math.exp(-mu * h)
    expo = np.exp(-lam * h * np.arange(n))
    EG = np.empty(n)
    EG[0] = 1.0
    M = 0.0
    F = 0.0
    for j in range(1, n):
        S = 0.0
        if s2 != 0.0 and j > 1:
            S = float(np.dot(EG[1:j], G[j - 1 : 0 : -1]))
        A = -damp * M - 0.5 * h * nu * damp * G[j - 1] - s2 * h * S
        beta = 0.5 * h * nu + 0.5 * h * s2 * (1.0 + expo[j])
        G[j] = (G[j - 1] + 0.5 * h * (F + A)) / (1.0 + 0.5 * h * beta)
        M = damp * M + 0.5 * h * nu * (damp * G[j - 1] + G[j])
        F = A - beta * G[j]
        EG[j] = expo[j] * G[j]
        if not math.isfinite(G[j]) or abs(G[j]) > DIVERGENCE_LIMIT:
            raise DivergenceError(f"Volterra solution diverged at step {j}", step=j)
    return G


def _volterra_wave(k, s2, lam, h, n):
    E = np.zeros(n)
    if n == 1:
        return E
    k2 = k * k
    coupling = s2 * k2 * k2
    expo = np.exp(-lam * h * np.arange(n))
    EE = np.zeros(n)
    V = 1.0
    F = 0.0
    denom = 1.0 + 0.25 * h * h * k2
    for j in range(1, n):
        C = 0.0
        if coupling != 0.0 and j > 1:
            C = h * float(np.dot(EE[1:j], E[j - 1 : 0 : -1]))
        src = coupling * C
        E[j] = (E[j - 1] + h * V + 0.25 * h * h * (F + src)) / denom
        Fj = -k2 * E[j] + src
        V = V + 0.5 * h * (F + Fj)
        F = Fj
        EE[j] = expo[j] * E[j]
        if not math.isfinite(E[j]) or abs(E[j]) > DIVERGENCE_LIMIT:
            raise DivergenceError(f"Volterra solution diverged at step {j}", step=j)
    return E


def _checked(solve, grid, check, tol, extrapolate):
    coarse = solve(grid.dt, grid.n_steps)
    if not (check or extrapolate):
        return coarse
    fine = solve(grid.dt / 2, 2 * grid.n_steps - 1)[::2]
    if extrapolate:
        result = (4.0 * fine - coarse) / 3.0
        if check:
            # one more level: the extrapolated error is O(h^4)
            finer = solve(grid.dt / 4, 4 * grid.n_steps - 3)[::4]
            estimate = float(np.max(np.abs(result - (4.0 * finer - fine) / 3.0))) * 16.0 / 15.0
    else:
        result = coarse
        # second order: the coarse error is about 4/3 of the coarse-fine gap
        estimate = float(np.max(np.abs(coarse - fine))) * 4.0 / 3.0
    if check and estimate > tol:
        raise AccuracyError(
            f"step {grid.dt:g} too coarse: error estimate {estimate:.3g} > {tol:.3g}",
            estimate=estimate,
        )
    return result


def solve_dia_volterra_model(
    params: ModelParams,
    grid: TimeGrid,
    check: bool = True,
    tol: float = 1e-4,
    extrapolate: bool = False,
) -> Series:
    """Solve the closed DIA equation for the mean oscillator response.

    Integrates::

        G' + int_0^t nu exp(-mu (t-s)) G(s) ds
           + sigma**2 int_0^t exp(-lam s) G(s) G(t - s) ds = 0,   G(0) = 1

    with the implicit trapezoid rule, both integrals discretized with
    trapezoid product weights. The memory integral is updated recursively
    (exact for the exponential kernel), the quadratic convolution costs
    O(n) per step.

    Parameters
    ----------
    check : bool
        Re-solve on the half-step grid and raise :class:`AccuracyError` if
        the estimated error of the returned solution exceeds ``tol``.
    extrapolate : bool
        Return the Richardson combination of the step-h and step-h/2
        solutions instead; with ``check`` its error is estimated from a
        third solve at h/4.
    """

    def solve(h, n):
        return _volterra_model(params.nu, params.mu_kernel, params.ou.variance, params.lam, h, n)

    return Series(grid, _checked(solve, grid, check, tol, extrapolate))


def solve_dia_volterra_wave(
    params: WaveParams,
    grid: TimeGrid,
    check: bool = True,
    tol: float = 1e-4,
    extrapolate: bool = False,
) -> Series:
    """Solve the closed DIA equation for the coherent wave field.

    Integrates::

        E'' + k**2 E - sigma**2 k**4 int_0^x exp(-lam (x-y)) E(x-y) E(y) dy = 0

    with E(0) = 0, E'(0) = 1, using the trapezoid rule on the first-order
    system. The convolution endpoints vanish with E(0), so each step is
    explicit in the convolution and implicit (2x2, solved in closed form)
    in the oscillator part.
    """

    def solve(h, n):
        return _volterra_wave(params.k, params.ou.variance, params.lam, h, n)

    return Series(grid, _checked(solve, grid, check, tol, extrapolate))
