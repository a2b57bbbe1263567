"""
Four routes to the mean oscillator response
===========================================

The averaged Green's function G(t) of the stochastic oscillator is computed
by Monte Carlo over OU paths, by the closed DIA integro-differential
equation, by inverting truncated continued fractions, and from the
small-parameter closed forms. The closure routes agree with each other to
solver accuracy; Monte Carlo measures how good the closure is.
"""

import numpy as np

from dialab import (
    ApproximantSpec,
    ModelParams,
    RngSeed,
    TimeGrid,
    compare_series,
    dia_third_green,
    ensemble_green_function,
    invert_approximant,
    perturbative_green,
    solve_dia_volterra_model,
)
from dialab.solvers import Series

params = ModelParams.create(nu=0.04, sigma=0.1, lam=0.1)
grid = TimeGrid(t_max=20.0, n_steps=2001)

mc = ensemble_green_function(params, grid, 4000, RngSeed(1), workers=4)
volterra = solve_dia_volterra_model(params, grid)
deep = invert_approximant(ApproximantSpec("oscillator", 30, params), grid)

print("depth-30 fraction vs Volterra, max abs:", f"{compare_series(deep, volterra).max_abs:.2e}")
mc_series = Series(grid, mc.mean.real)
print("Monte Carlo vs Volterra, rel rms:", f"{compare_series(mc_series, volterra).rel_rms:.3%}")
print("largest Monte Carlo standard error:", f"{mc.std_error.max():.4f}")

# Shallow truncations and the closed forms built from them.
for depth in (2, 3, 5):
    approx = invert_approximant(ApproximantSpec("oscillator", depth, params), grid)
    gap = compare_series(approx, volterra).max_abs
    print(f"depth {depth:2d} vs Volterra, max abs {gap:.3e}")

t = grid.times
for name, values in (("perturbative", perturbative_green(params, t)),
                     ("third approximant", dia_third_green(params, t))):
    print(f"{name} closed form at t = 5, 10, 20:", np.round(values[[500, 1000, 2000]], 4))
print("Volterra at t = 5, 10, 20:        ", np.round(volterra.values[[500, 1000, 2000]], 4))
