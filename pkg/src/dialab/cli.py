"""
Command-line driver: ``dialab {ou,green,wave,residual}``.

Each command reads an optional JSON configuration, applies flag
overrides, writes the effective configuration to ``<out>/config.json``
and then its CSV tables and a plain-text ``summary.txt``. Exit status is
0 on success, 1 on a runtime failure and 2 when the configuration is
invalid.

All quantities are in dimensionless program units: the oscillator runs in
time t (``nu`` in 1/time**2, ``lam`` and ``mu_kernel`` in 1/time), the wave
model in range x (``k`` and ``lam`` in 1/length). The grid's ``t_max`` is a
time or a range accordingly.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, closed_forms, laplace, solvers, stochastic
from .errors import ConfigError, DialabError, ParameterError

COMMANDS = ("ou", "green", "wave", "residual")

DEFAULTS = {
    "ou": {
        "ou": {"sigma": 1.0, "lam": 1.0},
        "grid": {"t_max": 10.0, "n_steps": 1001},
        "n_samples": 1000,
        "paths_written": 5,
        "max_lag": 200,
    },
    "green": {
        "oscillator": {"nu": 0.04, "mu_kernel": 0.0, "sigma": 0.1, "lam": 0.1},
        "grid": {"t_max": 20.0, "n_steps": 2001},
        "n_samples": 1000,
        "depths": [2, 3, 30],
    },
    "wave": {
        "wave": {"k": 10.0, "sigma": 0.1, "lam": 0.05},
        "grid": {"t_max": 4.0, "n_steps": 8001},
        "n_samples": 1000,
        "depths": [2, 3, 30],
        "sigma_points": 100,
    },
    "residual": {
        "oscillator": {"nu": 0.04, "mu_kernel": 0.0, "sigma": 0.1, "lam": 0.1},
        "wave": {"k": 1.0, "sigma": 0.1, "lam": 0.1},
        "depths": [1, 2, 3, 5, 10, 15, 20, 25, 30],
        "points": [[2.0, 0.0], [1.0, 1.0], [5.0, -2.0]],
    },
}
COMMON = {"seed": 0, "inversion": {}, "volterra_tol": 1e-4, "compare": ["all"]}
ROUTE_GROUPS = ("monte_carlo", "volterra", "approximants", "closed_forms")
INVERSION_KEYS = ("terms", "order", "discretization", "margin", "tol", "shift")


@dataclass(frozen=True)
class RunConfig:
    """Validated settings of one command run."""

    command: str
    seed: int
    sections: dict = field(default_factory=dict)

    def get(self, key):
        return self.sections[key]

    @property
    def inversion(self) -> laplace.InversionConfig:
        return laplace.InversionConfig(**self.sections["inversion"])

    @property
    def grid(self) -> stochastic.TimeGrid:
        g = self.sections["grid"]
        return stochastic.TimeGrid(g["t_max"], g["n_steps"])

    @property
    def rng(self) -> stochastic.RngSeed:
        return stochastic.RngSeed(self.seed)

    def selected(self, group: str) -> bool:
        chosen = self.sections["compare"]
        return "all" in chosen or group in chosen

    def to_dict(self) -> dict:
        return {"command": self.command, "seed": self.seed, **self.sections}


def _number(value, path, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError("must be finite", path)
    return value


def _merge(defaults: dict, given: dict, path: str) -> dict:
    out = {}
    for key, default in defaults.items():
        out[key] = given.get(key, default)
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", path)
    return out


def _section(raw: dict, name: str, defaults: dict) -> dict:
    given = raw.get(name, {})
    if not isinstance(given, dict):
        raise ConfigError("expected an object", name)
    merged = _merge(defaults, given, name)
    return {k: _number(v, f"{name}.{k}", integer=(k == "n_steps")) for k, v in merged.items()}


def _build_params(command: str, sections: dict):
    """Instantiate parameter objects so their own invariants are checked."""
    checks = {
        "ou": lambda s: stochastic.OUParams(s["sigma"], s["lam"]),
        "oscillator": lambda s: solvers.ModelParams.create(
            s["nu"], s["sigma"], s["lam"], s["mu_kernel"]
        ),
        "wave": lambda s: solvers.WaveParams.create(s["k"], s["sigma"], s["lam"]),
        "grid": lambda s: stochastic.TimeGrid(s["t_max"], s["n_steps"]),
        "inversion": lambda s: laplace.InversionConfig(**s),
    }
    for name, build in checks.items():
        if name in sections:
            try:
                build(sections[name])
            except (ParameterError, TypeError, ValueError) as exc:
                raise ConfigError(str(exc), name) from exc
    if command in ("ou", "green", "wave") and "ou" not in sections:
        model = sections.get("oscillator") or sections.get("wave")
        if model["lam"] <= 0:
            raise ConfigError("sampling needs lam > 0", "oscillator.lam" if "oscillator" in sections else "wave.lam")


def parse_config(command: str, raw: dict, overrides: Optional[dict] = None) -> RunConfig:
    """Merge ``raw`` (a parsed JSON object) and ``overrides`` over the command defaults."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", "command")
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = dict(raw)
    given_command = raw.pop("command", command)
    if given_command != command:
        raise ConfigError(f"file is for {given_command!r}, running {command!r}", "command")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    defaults = {**COMMON, **DEFAULTS[command]}
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown keys {unknown}")

    sections = {}
    for name in ("ou", "oscillator", "wave", "grid"):
        if name in defaults:
            sections[name] = _section(raw, name, defaults[name])

    inv = raw.get("inversion", {})
    if not isinstance(inv, dict):
        raise ConfigError("expected an object", "inversion")
    bad = sorted(set(inv) - set(INVERSION_KEYS))
    if bad:
        raise ConfigError(f"unknown keys {bad}", "inversion")
    sections["inversion"] = {
        k: _number(v, f"inversion.{k}", integer=k in ("terms", "order")) for k, v in inv.items()
    }

    for key in ("n_samples", "paths_written", "max_lag", "sigma_points"):
        if key in defaults:
            value = _number(raw.get(key, defaults[key]), key, integer=True)
            if value < (0 if key == "max_lag" else 1):
                raise ConfigError(f"must be positive, got {value}", key)
            sections[key] = value
    if command in ("green", "wave") and sections["n_samples"] < 2:
        raise ConfigError("ensembles need at least 2 samples", "n_samples")
    if command == "ou" and sections["max_lag"] >= sections["grid"]["n_steps"]:
        raise ConfigError("must be below grid.n_steps", "max_lag")

    if "depths" in defaults:
        depths = raw.get("depths", defaults["depths"])
        if not isinstance(depths, list) or not depths:
            raise ConfigError("expected a non-empty list", "depths")
        depths = [_number(d, "depths", integer=True) for d in depths]
        if any(d < 1 for d in depths):
            raise ConfigError("depths must be >= 1", "depths")
        if depths != sorted(set(depths)):
            raise ConfigError("depths must be sorted and distinct", "depths")
        sections["depths"] = depths

    if "points" in defaults:
        points = raw.get("points", defaults["points"])
        try:
            sections["points"] = [[float(re_), float(im)] for re_, im in points]
        except (TypeError, ValueError) as exc:
            raise ConfigError("expected a list of [re, im] pairs", "points") from exc
        if not sections["points"]:
            raise ConfigError("expected at least one point", "points")

    sections["volterra_tol"] = _number(raw.get("volterra_tol", COMMON["volterra_tol"]), "volterra_tol")
    compare = raw.get("compare", COMMON["compare"])
    if not isinstance(compare, list) or any(c not in ROUTE_GROUPS + ("all",) for c in compare):
        raise ConfigError(f"entries must be among {('all',) + ROUTE_GROUPS}", "compare")
    sections["compare"] = list(compare)

    seed = _number(raw.get("seed", COMMON["seed"]), "seed", integer=True)
    if not 0 <= seed < 2**64:
        raise ConfigError("must be a 64-bit unsigned integer", "seed")
    _build_params(command, sections)
    return RunConfig(command, seed, sections)


def load_config(command: str, path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}", "config") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}", "config") from exc
    return parse_config(command, raw, overrides)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


# -- helpers -----------------------------------------------------------------


class _Run:
    """Output directory plus the lines collected for summary.txt."""

    def __init__(self, out: Path, quiet: bool):
        self.out = out
        self.quiet = quiet
        self.lines = []

    def table(self, name, columns, rows):
        analysis.emit_table(rows, columns, self.out / name)
        self.note(f"wrote {name}")

    def note(self, message):
        if not self.quiet:
            print(message)

    def summary(self, line=""):
        self.lines.append(line)

    def finish(self):
        (self.out / "summary.txt").write_bytes(("\n".join(self.lines) + "\n").encode())
        self.note("wrote summary.txt")


def _fit_row(name, series):
    try:
        fit = analysis.fit_damped_oscillation(series)
    except DialabError as exc:
        nan = math.nan
        return {"route": name, "amplitude": nan, "rate": nan, "omega": nan, "phase": nan,
                "rms_residual": nan, "status": f"rejected: {exc}"}
    return {"route": name, "amplitude": fit.amplitude, "rate": fit.rate, "omega": fit.omega,
            "phase": fit.phase, "rms_residual": fit.rms_residual, "status": "ok"}


FIT_COLUMNS = ["route", "amplitude", "rate", "omega", "phase", "rms_residual", "status"]
METRIC_COLUMNS = ["route", "reference", "max_abs", "rms", "rel_rms"]


def decay_flag(values) -> tuple[float, str]:
    """Ratio of the largest |value| in the last quarter to that in the first quarter."""
    values = np.abs(np.asarray(values))
    q = max(1, values.size // 4)
    head = float(np.max(values[:q]))
    ratio = float(np.max(values[-q:])) / head if head > 0 else 0.0
    return ratio, "decays" if ratio < 0.5 else "oscillates"


def _metric_rows(routes, pairs):
    rows = []
    for name, ref in pairs:
        if name in routes and ref in routes:
            m = analysis.compare_series(routes[name], routes[ref])
            rows.append({"route": name, "reference": ref, "max_abs": m.max_abs,
                         "rms": m.rms, "rel_rms": m.rel_rms})
    return rows


def _approximants(cfg, run, model, params, grid, routes):
    for depth in cfg.get("depths"):
        spec = laplace.ApproximantSpec(model, depth, params)
        routes[f"depth_{depth}"] = laplace.invert_approximant(spec, grid, cfg.inversion)
        run.note(f"inverted depth-{depth} approximant")


# -- commands ----------------------------------------------------------------


def cmd_ou(cfg: RunConfig, run: _Run, workers: int = 1):
    s = cfg.get("ou")
    params = stochastic.OUParams(s["sigma"], s["lam"])
    grid = cfg.grid
    paths = stochastic.sample_ou_paths(params, grid, cfg.get("n_samples"), cfg.rng)
    shown = min(cfg.get("paths_written"), paths.shape[0])
    columns = ["t"] + [f"path_{i}" for i in range(shown)]
    run.table("paths.csv", columns, (
        [t, *paths[:shown, j]] for j, t in enumerate(grid.times)
    ))
    rows = []
    for lag in range(cfg.get("max_lag") + 1):
        est, se = stochastic.estimate_autocorrelation(paths, lag)
        tau = lag * grid.dt
        rows.append([lag, tau, est, se, float(params.autocorrelation(tau))])
    run.table("autocorrelation.csv",
              ["lag_index", "tau", "estimate", "std_error", "exact"], rows)
    worst = max(abs(r[2] - r[4]) / r[3] if r[3] > 0 else 0.0 for r in rows)
    run.summary("command: ou")
    run.summary(f"paths: {paths.shape[0]}  grid points: {grid.n_steps}")
    run.summary(f"largest |estimate - exact| / std_error over lags: {worst:.3f}")


def cmd_green(cfg: RunConfig, run: _Run, workers: int = 1):
    s = cfg.get("oscillator")
    params = solvers.ModelParams.create(s["nu"], s["sigma"], s["lam"], s["mu_kernel"])
    grid = cfg.grid
    t = grid.times
    routes, extra = {}, {}
    if cfg.selected("monte_carlo"):
        stats = solvers.ensemble_green_function(params, grid, cfg.get("n_samples"), cfg.rng, workers)
        routes["monte_carlo"] = solvers.Series(grid, stats.mean.real)
        extra["monte_carlo_imag"] = stats.mean.imag
        extra["monte_carlo_se"] = stats.std_error
        run.note("ensemble done")
    if cfg.selected("volterra"):
        routes["volterra"] = solvers.solve_dia_volterra_model(params, grid, tol=cfg.get("volterra_tol"))
        run.note("Volterra solve done")
    if cfg.selected("approximants"):
        _approximants(cfg, run, "oscillator", params, grid, routes)
    if cfg.selected("closed_forms"):
        routes["perturbative_green"] = solvers.Series(grid, closed_forms.perturbative_green(params, t))
        routes["dia_third_green"] = solvers.Series(grid, closed_forms.dia_third_green(params, t))
        routes["appendix_green_first"] = solvers.Series(grid, closed_forms.appendix_green_first(params, t))
        for order in (1, 2, 3):
            extra[f"appendix_f_order{order}"] = closed_forms.appendix_f_approx(params, t, order)

    columns = ["t", *routes, *extra]
    run.table("series.csv", columns, (
        [ti, *(r.values[j] for r in routes.values()), *(e[j] for e in extra.values())]
        for j, ti in enumerate(t)
    ))
    pairs = [(name, "volterra") for name in routes if name != "volterra"]
    pairs += [("depth_2", "perturbative_green"), ("depth_3", "dia_third_green")]
    run.table("metrics.csv", METRIC_COLUMNS, _metric_rows(routes, pairs))
    run.table("fits.csv", FIT_COLUMNS, [_fit_row(n, r) for n, r in routes.items()])

    run.summary("command: green")
    run.summary(f"nu={s['nu']:g} mu_kernel={s['mu_kernel']:g} sigma={s['sigma']:g} lam={s['lam']:g}")
    run.summary(f"grid: t_max={grid.t_max:g} n_steps={grid.n_steps}")
    run.summary("")
    run.summary("decays vs oscillates (last-quarter / first-quarter peak ratio):")
    for name, series in routes.items():
        ratio, flag = decay_flag(series.values)
        run.summary(f"  {name}: {flag} ({ratio:.4f})")
    limsup = (s["nu"] + s["sigma"] ** 2) / (2 * s["nu"] + s["sigma"] ** 2)
    run.summary(f"perturbative closed form: oscillates, limsup |G| = {limsup:.6g}")
    run.summary(f"third-approximant closed form: decays like exp(-{s['lam']:g} t)")


def cmd_wave(cfg: RunConfig, run: _Run, workers: int = 1):
    s = cfg.get("wave")
    params = solvers.WaveParams.create(s["k"], s["sigma"], s["lam"])
    grid = cfg.grid
    x = grid.times
    routes, extra = {}, {}
    if cfg.selected("monte_carlo"):
        stats = solvers.ensemble_wave_field(params, grid, cfg.get("n_samples"), cfg.rng, workers)
        routes["monte_carlo"] = solvers.Series(grid, stats.mean.real)
        extra["monte_carlo_se"] = stats.std_error
        run.note("ensemble done")
    if cfg.selected("volterra"):
        routes["volterra"] = solvers.solve_dia_volterra_wave(params, grid, tol=cfg.get("volterra_tol"))
        run.note("Volterra solve done")
    if cfg.selected("approximants"):
        _approximants(cfg, run, "wave", params, grid, routes)
    if cfg.selected("closed_forms"):
        routes["perturbative_wave"] = solvers.Series(grid, closed_forms.perturbative_wave(params, x))
        if s["sigma"] ** 2 < closed_forms.DIA_SIGMA_SQ_LIMIT:
            routes["dia_wave"] = solvers.Series(grid, closed_forms.dia_wave(params, x))

    run.table("series.csv", ["x", *routes, *extra], (
        [xi, *(r.values[j] for r in routes.values()), *(e[j] for e in extra.values())]
        for j, xi in enumerate(x)
    ))
    pairs = [(name, "volterra") for name in routes if name != "volterra"]
    pairs += [("depth_2", "perturbative_wave"), ("depth_3", "dia_wave")]
    run.table("metrics.csv", METRIC_COLUMNS, _metric_rows(routes, pairs))
    fits = [_fit_row(n, r) for n, r in routes.items()]
    run.table("fits.csv", FIT_COLUMNS, fits)

    # fitted versus formula rates and frequencies
    sigma, lam, k = s["sigma"], s["lam"], s["k"]
    formulas = {"perturbative": (closed_forms.perturbative_rate(sigma, lam),
                                 k * closed_forms.perturbative_freq_factor(sigma))}
    if sigma**2 < closed_forms.DIA_SIGMA_SQ_LIMIT:
        formulas["dia"] = (closed_forms.dia_rate(sigma, lam), k * closed_forms.dia_freq_factor(sigma))
    rate_rows = []
    for fit in fits:
        name = fit["route"]
        which = "perturbative" if name in ("depth_1", "depth_2", "monte_carlo", "perturbative_wave") else "dia"
        if which not in formulas:
            continue
        rate, omega = formulas[which]
        rel = (fit["rate"] - rate) / rate if rate > 0 else math.nan
        rate_rows.append({"route": name, "formula": which, "fitted_rate": fit["rate"],
                          "formula_rate": rate, "rate_rel_error": rel,
                          "fitted_omega": fit["omega"], "formula_omega": omega})
    run.table("rates.csv", ["route", "formula", "fitted_rate", "formula_rate", "rate_rel_error",
                            "fitted_omega", "formula_omega"], rate_rows)

    sig = np.linspace(0.5 / cfg.get("sigma_points"), 0.5, cfg.get("sigma_points"))
    att_rows = []
    for sv in sig:
        rep = closed_forms.attenuation_report(float(sv), lam)
        att_rows.append({"sigma": sv, "perturbative_rate": rep.perturbative_rate,
                         "dia_rate": rep.dia_rate, "rate_ratio": rep.rate_ratio,
                         "dia_exceeds": rep.dia_rate > rep.perturbative_rate,
                         "freq_sq_shift": rep.freq_sq_shift})
    run.table("attenuation.csv", ["sigma", "perturbative_rate", "dia_rate", "rate_ratio",
                                  "dia_exceeds", "freq_sq_shift"], att_rows)

    run.summary("command: wave")
    run.summary(f"k={k:g} sigma={sigma:g} lam={lam:g}")
    run.summary(f"grid: x_max={grid.t_max:g} n_steps={grid.n_steps}")
    run.summary(f"attenuation ordering holds on all {len(att_rows)} sigma values: "
                f"{all(r['dia_exceeds'] for r in att_rows)}")
    for name, (rate, omega) in formulas.items():
        run.summary(f"{name} formula: rate={rate:.6g} omega={omega:.6g}")
    for fit in fits:
        run.summary(f"fit {fit['route']}: {fit['status']}")


def cmd_residual(cfg: RunConfig, run: _Run, workers: int = 1):
    so, sw = cfg.get("oscillator"), cfg.get("wave")
    models = {
        "oscillator": solvers.ModelParams.create(so["nu"], so["sigma"], so["lam"], so["mu_kernel"]),
        "wave": solvers.WaveParams.create(sw["k"], sw["sigma"], sw["lam"]),
    }
    points = [complex(re_, im) for re_, im in cfg.get("points")]
    rows, flags = [], []
    for model, params in models.items():
        for p in points:
            history = []
            for depth in cfg.get("depths"):
                spec = laplace.ApproximantSpec(model, depth, params)
                res = abs(complex(laplace.functional_residual(spec, p)))
                value = complex(laplace.dia_approximant(spec, p))
                conj = abs(complex(laplace.dia_approximant(spec, p.conjugate())) - value.conjugate())
                rows.append({"model": model, "depth": depth, "p_re": p.real, "p_im": p.imag,
                             "residual_abs": res, "conjugate_defect": conj})
                history.append(res)
            # monotone up to a factor-2 tolerance
            monotone = all(b <= 2.0 * a for a, b in zip(history, history[1:]))
            flags.append((model, p, monotone, history[-1]))
    run.table("residual.csv", ["model", "depth", "p_re", "p_im", "residual_abs",
                               "conjugate_defect"], rows)
    run.summary("command: residual")
    for model, p, monotone, last in flags:
        run.summary(f"{model} p={p.real:g}{p.imag:+g}i: monotone={monotone} "
                    f"deepest residual={last:.3e}")


HANDLERS = {"ou": cmd_ou, "green": cmd_green, "wave": cmd_wave, "residual": cmd_residual}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialab", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("ou", "sample OU paths and tabulate the autocorrelation"),
        ("green", "oscillator Green's function by every route"),
        ("wave", "coherent wave field by every route"),
        ("residual", "functional-equation residuals versus depth"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="JSON configuration file")
        p.add_argument("--out", metavar="DIR", default="dialab_out", help="output directory")
        p.add_argument("--seed", type=int, help="base seed (overrides the file)")
        p.add_argument("--samples", type=int, help="ensemble size (overrides the file)")
        p.add_argument("--depths", help="comma-separated approximant depths, e.g. 2,3,30")
        p.add_argument("--workers", type=int, default=1, help="threads for ensembles")
        p.add_argument("--quiet", action="store_true", help="suppress progress messages")
    return parser


def _overrides(args, command) -> dict:
    out = {"seed": args.seed}
    if args.samples is not None:
        if command == "residual":
            raise ConfigError("the residual command takes no samples", "samples")
        out["n_samples"] = args.samples
    if args.depths is not None:
        if command == "ou":
            raise ConfigError("the ou command takes no depths", "depths")
        try:
            out["depths"] = [int(d) for d in args.depths.split(",")]
        except ValueError as exc:
            raise ConfigError(f"expected comma-separated integers, got {args.depths!r}", "depths") from exc
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if args.workers < 1:
            raise ConfigError("must be >= 1", "workers")
        cfg = load_config(args.command, args.config, _overrides(args, args.command))
    except ConfigError as exc:
        print(f"dialab: config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    run = _Run(out, args.quiet)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(dump_config(cfg))
        HANDLERS[args.command](cfg, run, args.workers)
        run.finish()
    except (DialabError, OSError) as exc:
        print(f"dialab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
