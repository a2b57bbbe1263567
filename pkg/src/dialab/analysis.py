"""
Measurement of decay rates and frequencies, error metrics and CSV output.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, InputError
from .solvers import Series

__all__ = [
    "EnvelopeFit",
    "ErrorMetrics",
    "fit_damped_oscillation",
    "compare_series",
    "format_value",
    "emit_table",
]

MIN_CROSSINGS = 5
MAX_RELATIVE_RMS = 0.2


@dataclass(frozen=True)
class EnvelopeFit:
    """Parameters of ``amplitude * exp(-rate t) * sin(omega t + phase)``.

    ``rms_residual`` is the root-mean-square misfit over the fitted window
    and ``relative_rms`` the same divided by the RMS of the data there.
    """

    amplitude: float
    rate: float
    omega: float
    phase: float
    rms_residual: float
    relative_rms: float = 0.0
    t_start: float = 0.0

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-self.rate * t) * np.sin(self.omega * t + self.phase)


@dataclass(frozen=True)
class ErrorMetrics:
    max_abs: float
    rms: float
    rel_rms: float


def _zero_crossings(t, y):
    """Linear-interpolated sign-change locations."""
    s = np.signbit(y)
    idx = np.nonzero(s[:-1] != s[1:])[0]
    y0, y1 = y[idx], y[idx + 1]
    frac = np.where(y1 != y0, y0 / (y0 - y1), 0.0)
    return t[idx] + frac * (t[idx + 1] - t[idx])


def _initial_rate(t, y, crossings):
    """Log-linear fit to the largest |y| between successive zero crossings."""
    peaks_t, peaks_y = [], []
    for a, b in zip(crossings[:-1], crossings[1:]):
        mask = (t > a) & (t < b)
        if np.any(mask):
            i = np.argmax(np.abs(y[mask]))
            peaks_t.append(t[mask][i])
            peaks_y.append(abs(y[mask][i]))
    peaks_y = np.asarray(peaks_y)
    if len(peaks_y) < 2 or np.any(peaks_y <= 0):
        return 0.0
    slope = np.polyfit(peaks_t, np.log(peaks_y), 1)[0]
    return max(0.0, -float(slope))


def fit_damped_oscillation(series: Series, t_min: Optional[float] = None) -> EnvelopeFit:
    """Fit ``A exp(-rate t) sin(omega t + phase)`` by nonlinear least squares.

    Starting values: omega from the mean zero-crossing spacing, rate from
    a log-linear fit to successive extrema, amplitude and phase from a
    linear solve at those values. Data before ``t_min`` (default: the
    first quarter period after the first sample) are excluded.

    Raises
    ------
    InputError
        Fewer than five zero crossings.
    FitError
        Solver failure, or residual RMS above 20% of the data RMS.
    """
    t = np.asarray(series.times, dtype=float)
    y = np.real(np.asarray(series.values)).astype(float)
    crossings = _zero_crossings(t, y)
    if crossings.size < MIN_CROSSINGS:
        raise InputError(
            f"need at least {MIN_CROSSINGS} zero crossings, found {crossings.size}"
        )
    omega0 = math.pi / float(np.mean(np.diff(crossings)))
    if t_min is None:
        t_min = t[0] + 0.5 * math.pi / omega0
    keep = t >= t_min
    t, y = t[keep], y[keep]
    rate0 = _initial_rate(t, y, crossings[crossings >= t_min])

    def basis(rate, omega):
        env = np.exp(-rate * t)
        return np.column_stack([env * np.sin(omega * t), env * np.cos(omega * t)])

    ab0, *_ = np.linalg.lstsq(basis(rate0, omega0), y, rcond=None)

    # parametrize by (a, b) = A (cos phase, sin phase) to avoid phase wrapping
    def residual(x):
        return basis(x[2], x[3]) @ x[:2] - y

    x0 = np.array([ab0[0], ab0[1], rate0, omega0])
    try:
        sol = least_squares(
            residual,
            x0,
            bounds=([-np.inf, -np.inf, 0.0, 0.0], np.inf),
            x_scale="jac",
            xtol=1e-14,
            ftol=1e-14,
            gtol=1e-14,
            max_nfev=2000,
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"least squares failed: {exc}") from exc
    if sol.status <= 0:
        raise FitError(f"least squares did not converge: {sol.message}")
    a, b, rate, omega = sol.x
    phase = math.atan2(b, a) % (2 * math.pi)
    if phase >= 2 * math.pi:  # -0.0 and tiny negatives round up
        phase = 0.0
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    data_rms = float(np.sqrt(np.mean(y**2)))
    relative = rms / data_rms if data_rms > 0 else math.inf
    if not math.isfinite(rms) or relative > MAX_RELATIVE_RMS:
        raise FitError(f"fit residual is {relative:.1%} of the data RMS")
    if omega <= 0:
        raise FitError("fitted frequency collapsed to zero")
    return EnvelopeFit(
        amplitude=float(math.hypot(a, b)),
        rate=float(rate),
        omega=float(omega),
        phase=float(phase),
        rms_residual=rms,
        relative_rms=relative,
        t_start=float(t_min),
    )


def compare_series(a: Series, b: Series) -> ErrorMetrics:
    """Max-abs, RMS and RMS relative to ``b`` of the pointwise difference."""
    if a.grid != b.grid:
        raise InputError(f"grid mismatch: {a.grid} vs {b.grid}")
    diff = np.asarray(a.values) - np.asarray(b.values)
    rms = float(np.sqrt(np.mean(np.abs(diff) ** 2)))
    ref = float(np.sqrt(np.mean(np.abs(np.asarray(b.values)) ** 2)))
    rel = rms / ref if ref > 0 else (0.0 if rms == 0 else math.inf)
    return ErrorMetrics(float(np.max(np.abs(diff))), rms, rel)


def format_value(value) -> str:
    """Text form of one cell: floats with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


Row = Union[Mapping[str, object], Sequence[object]]


def emit_table(
    rows: Iterable[Row],
    columns: Sequence[str],
    path: Union[str, os.PathLike, None] = None,
    stream: Optional[IO[bytes]] = None,
) -> bytes:
    """Serialize rows as CSV and return the bytes.

    The header lists ``columns`` in order and is always written. Rows may
    be mappings keyed by column name or sequences in column order. Lines
    end with a single line feed. When ``path`` or ``stream`` is given the
    bytes are also written there; I/O failures re-raise as ``OSError``
    naming the path.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, Mapping):
            missing = [c for c in columns if c not in row]
            if missing:
                raise InputError(f"row lacks columns {missing}")
            values = [row[c] for c in columns]
        else:
            values = list(row)
            if len(values) != len(columns):
                raise InputError(f"row has {len(values)} cells, header has {len(columns)}")
        writer.writerow([format_value(v) for v in values])
    data = buf.getvalue().encode("utf-8")
    if path is not None:
        try:
            with open(path, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise OSError(f"cannot write table to {os.fspath(path)}: {exc}") from exc
    if stream is not None:
        stream.write(data)
    return data
