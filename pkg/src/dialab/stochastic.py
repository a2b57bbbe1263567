"""
Ornstein-Uhlenbeck coefficient sampling and ensemble statistics.

The random coefficient of both model problems (the frequency b(t) of the
oscillator and the refractive fluctuation of the wave problem) is a centered
stationary Gaussian process with autocorrelation sigma**2 * exp(-lam*|tau|).
Paths are drawn with the exact AR(1) transition of the process, so grid
statistics carry no time-step bias.

Every path is a pure function of ``(seed, stream_id)``: the stream id selects
a disjoint block of the Philox counter space, which makes ensembles
independent of worker count and scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import lfilter

from .errors import InputError, ParameterError

__all__ = [
    "OUParams",
    "TimeGrid",
    "RngSeed",
    "OUPath",
    "EnsembleStats",
    "generate_ou_path",
    "sample_ou_paths",
    "estimate_autocorrelation",
    "monte_carlo_phase_average",
    "ensemble_stats",
]

DEFAULT_BLOCK = 512
_U64 = 2**64


def _finite(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class OUParams:
    """Stationary standard deviation ``sigma`` and inverse correlation time ``lam``.

    ``lam = 0`` (a frozen, time-independent coefficient) is accepted so that
    closed forms and transforms can be evaluated in that limit, but
    stationary sampling rejects it.
    """

    sigma: float
    lam: float

    def __post_init__(self):
        _finite("sigma", self.sigma)
        _finite("lam", self.lam)
        if self.sigma < 0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if self.lam < 0:
            raise ParameterError(f"lam must be >= 0, got {self.lam}")

    @property
    def variance(self) -> float:
        return self.sigma * self.sigma

    def autocorrelation(self, tau):
        """Exact stationary autocorrelation at lag ``tau``."""
        return self.variance * np.exp(-self.lam * np.abs(tau))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``0, dt, ..., t_max`` with ``n_steps`` points."""

    t_max: float
    n_steps: int

    def __post_init__(self):
        _finite("t_max", self.t_max)
        if self.t_max <= 0:
            raise ParameterError(f"t_max must be > 0, got {self.t_max}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ParameterError(f"n_steps must be an integer >= 2, got {self.n_steps}")

    @classmethod
    def from_step(cls, dt: float, t_max: float) -> "TimeGrid":
        """Grid whose spacing is the largest value <= ``dt`` that tiles ``[0, t_max]``."""
        n = int(math.ceil(t_max / dt - 1e-9)) + 1
        return cls(t_max, max(n, 2))

    @property
    def dt(self) -> float:
        return self.t_max / (self.n_steps - 1)

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.n_steps, dtype=float) * self.dt
        t[-1] = self.t_max
        return t

    def refined(self, factor: int = 2) -> "TimeGrid":
        """Grid with ``factor`` times as many intervals over the same span."""
        return TimeGrid(self.t_max, (self.n_steps - 1) * factor + 1)

    def coarsened(self, factor: int = 2) -> "TimeGrid":
        if (self.n_steps - 1) % factor:
            raise InputError(
                f"grid with {self.n_steps - 1} intervals cannot be coarsened by {factor}"
            )
        return TimeGrid(self.t_max, (self.n_steps - 1) // factor + 1)


@dataclass(frozen=True)
class RngSeed:
    """A 64-bit ``seed`` (Philox key) and a 64-bit ``stream_id`` (counter block)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < _U64:
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        bitgen = np.random.Philox(key=int(self.seed), counter=int(self.stream_id) * _U64)
        return np.random.Generator(bitgen)

    def substream(self, i: int) -> "RngSeed":
        return RngSeed(self.seed, i)


@dataclass(frozen=True)
class OUPath:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_steps,):
            raise InputError(
                f"path has shape {values.shape}, grid expects ({self.grid.n_steps},)"
            )
        if not np.all(np.isfinite(values)):
            raise InputError("path contains non-finite values")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class EnsembleStats:
    """Pointwise ensemble mean with standard errors.

    ``std_error`` is the standard error of the real part of the mean and
    ``std_error_imag`` that of the imaginary part (zero for real ensembles).
    With a single sample both are NaN.
    """

    grid: TimeGrid
    mean: np.ndarray
    std_error: np.ndarray
    n_samples: int
    std_error_imag: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.std_error_imag is None:
            object.__setattr__(self, "std_error_imag", np.zeros_like(self.std_error))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def _ou_coefficients(params: OUParams, dt: float):
    decay = math.exp(-params.lam * dt)
    # -expm1 keeps precision when lam*dt is tiny
    innovation = params.sigma * math.sqrt(-math.expm1(-2.0 * params.lam * dt))
    return decay, innovation


def _normals(seed: int, stream_ids, n: int) -> np.ndarray:
    z = np.empty((len(stream_ids), n))
    for row, sid in enumerate(stream_ids):
        z[row] = RngSeed(seed, int(sid)).generator().standard_normal(n)
    return z


def _ou_block(params: OUParams, grid: TimeGrid, seed: int, stream_ids) -> np.ndarray:
    if params.lam <= 0:
        raise ParameterError("stationary sampling needs lam > 0")
    z = _normals(seed, stream_ids, grid.n_steps)
    if params.sigma == 0.0:
        return np.zeros_like(z)
    decay, innovation = _ou_coefficients(params, grid.dt)
    out = np.empty_like(z)
    out[:, 0] = params.sigma * z[:, 0]
    out[:, 1:], _ = lfilter(
        [innovation], [1.0, -decay], z[:, 1:], axis=1, zi=(decay * out[:, :1])
    )
    return out


def generate_ou_path(params: OUParams, grid: TimeGrid, seed: RngSeed) -> OUPath:
    """Draw one stationary OU path on ``grid``.

    The first value is drawn from the stationary law N(0, sigma**2); later
    values use the exact transition
    ``b[n+1] = b[n]*exp(-lam*dt) + sigma*sqrt(1 - exp(-2*lam*dt))*z[n]``.
    """
    values = _ou_block(params, grid, seed.seed, [seed.stream_id])[0]
    return OUPath(grid, values)


def sample_ou_paths(
    params: OUParams, grid: TimeGrid, n_paths: int, seed: RngSeed, start: int = 0
) -> np.ndarray:
    """Array of shape ``(n_paths, n_steps)``; row ``i`` uses stream ``start + i``."""
    if n_paths < 1:
        raise InputError("n_paths must be >= 1")
    return _ou_block(params, grid, seed.seed, range(start, start + n_paths))


def _as_array(paths) -> tuple[np.ndarray, TimeGrid | None]:
    if isinstance(paths, np.ndarray):
        if paths.ndim != 2 or paths.shape[0] == 0:
            raise InputError("path array must be 2-D and non-empty")
        return paths, None
    paths = list(paths)
    if not paths:
        raise InputError("empty path collection")
    grid = paths[0].grid
    if any(p.grid != grid for p in paths):
        raise InputError("all paths must share one grid")
    return np.stack([p.values for p in paths]), grid


def estimate_autocorrelation(paths, lag_index: int) -> tuple[float, float]:
    """Estimate <b(t) b(t + lag*dt)> from an ensemble of paths.

    Products are averaged over all admissible time origins within each path
    and then across paths. The standard error comes from the spread of the
    per-path time averages, which are independent across paths.

    Parameters
    ----------
    paths : sequence of OUPath or ndarray of shape (n_paths, n_steps)
    lag_index : int
        Lag in grid steps, ``0 <= lag_index < n_steps``.

    Returns
    -------
    estimate, std_error : float
        ``std_error`` is NaN for a single path.
    """
    values, _ = _as_array(paths)
    n = values.shape[1]
    if not 0 <= lag_index < n:
        raise InputError(f"lag_index must be in [0, {n}), got {lag_index}")
    per_path = np.mean(values[:, : n - lag_index] * values[:, lag_index:], axis=1)
    estimate = float(np.mean(per_path))
    if per_path.size < 2:
        return estimate, float("nan")
    return estimate, float(np.std(per_path, ddof=1) / math.sqrt(per_path.size))


class _Moments:
    """Pairwise (Chan) merge of block means and centered second moments."""

    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2_re = None
        self.m2_im = None

    def add_block(self, x: np.ndarray):
        nb = x.shape[0]
        mb = x.mean(axis=0)
        d = x - mb
        m2r = np.sum(d.real**2, axis=0)
        m2i = np.sum(d.imag**2, axis=0)
        if self.n == 0:
            self.n, self.mean, self.m2_re, self.m2_im = nb, mb, m2r, m2i
            return
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        w = self.n * nb / n
        self.m2_re = self.m2_re + m2r + delta.real**2 * w
        self.m2_im = self.m2_im + m2i + delta.imag**2 * w
        self.n = n

    def stats(self, grid: TimeGrid) -> EnsembleStats:
        if self.n < 2:
            nan = np.full(self.mean.shape, np.nan)
            return EnsembleStats(grid, self.mean, nan, self.n, nan.copy())
        scale = 1.0 / ((self.n - 1) * self.n)
        return EnsembleStats(
            grid,
            self.mean,
            np.sqrt(self.m2_re * scale),
            self.n,
            np.sqrt(self.m2_im * scale),
        )


def ensemble_stats(
    block_fn: Callable[[int, int], np.ndarray],
    grid: TimeGrid,
    n_samples: int,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK,
) -> EnsembleStats:
    """Reduce ``block_fn(start, stop)`` outputs into an :class:`EnsembleStats`.

    Blocks are fixed by ``block_size`` alone and merged in index order, so the
    result is bit-identical for every ``workers`` value.
    """
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    bounds = [(s, min(s + block_size, n_samples)) for s in range(0, n_samples, block_size)]
    acc = _Moments()
    if workers <= 1:
        for s, e in bounds:
            acc.add_block(np.asarray(block_fn(s, e)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for block in pool.map(lambda b: block_fn(*b), bounds):
                acc.add_block(np.asarray(block))
    return acc.stats(grid)


def phase_factor(values: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i/2 * int_0^t b)`` with the cumulative trapezoid rule along the last axis."""
    integral = cumulative_trapezoid(values, dx=dt, axis=-1, initial=0.0)
    return np.exp(-0.5j * integral)


def monte_carlo_phase_average(
    params: OUParams,
    grid: TimeGrid,
    n_samples: int,
    seed: RngSeed,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK,
) -> EnsembleStats:
    """Monte Carlo estimate of ``<exp(-(i/2) int_0^t b(t') dt')>`` on ``grid``."""

    def block(start, stop):
        b = sample_ou_paths(params, grid, stop - start, seed, start=start)
        return phase_factor(b, grid.dt)

    return ensemble_stats(block, grid, n_samples, workers, block_size)


def paths_from_array(values: np.ndarray, grid: TimeGrid) -> Sequence[OUPath]:
    return [OUPath(grid, row) for row in values]
