"""
Phase averages and the Liouville-transform approximations
=========================================================

Removing the first-derivative noise term leaves a random phase
exp(-(i/2) int b). Its mean has a closed form with small- and large-lam
limits. The successive approximations built on it, and the averaged
first-order system, are evaluated here.
"""

import numpy as np

from dialab import (
    ModelParams,
    OUParams,
    RngSeed,
    TimeGrid,
    appendix_f_approx,
    first_order_system_coeffs,
    monte_carlo_phase_average,
    phase_average_closed,
)

grid = TimeGrid(t_max=5.0, n_steps=501)
for lam in (0.1, 10.0):
    params = OUParams(0.2, lam)
    stats = monte_carlo_phase_average(params, grid, 20_000, RngSeed(0), workers=4)
    idx = [100, 300, 500]
    exact = phase_average_closed(params, grid.times[idx])
    z = np.abs(stats.mean.real[idx] - exact) / stats.std_error[idx]
    print(f"lam={lam:5.1f}: Monte Carlo {np.round(stats.mean.real[idx], 5)}, "
          f"exact {np.round(exact, 5)}, z {np.round(z, 2)}")
    for branch in ("small_lambda", "large_lambda"):
        print(f"   {branch}: {np.round(phase_average_closed(params, grid.times[idx], branch), 5)}")

params = ModelParams.create(nu=0.04, sigma=0.2, lam=0.1)
t = np.linspace(0, 60, 7)
for order in (1, 2, 3):
    print(f"order {order}:", np.round(appendix_f_approx(params, t, order), 5))

coeffs = first_order_system_coeffs(ModelParams.create(nu=1.0, sigma=0.2, lam=0.1))
print(f"c1 = {coeffs.c1:.5e}, c2 = {coeffs.c2:.5e}, alpha = {coeffs.alpha:.4e}, "
      f"beta = {coeffs.beta:.6f}")
print(f"small-lam limits: alpha {coeffs.small_lambda_alpha:.4e}, beta {coeffs.small_lambda_beta:.6f}")
