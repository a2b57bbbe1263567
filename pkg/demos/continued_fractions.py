"""
Continued fractions in the Laplace domain
=========================================

The closed DIA equation becomes a functional equation in p whose solution
is a continued fraction. Truncations ("approximants") are rational, so
their poles can be computed exactly; deeper truncations satisfy the
functional equation ever more closely.
"""

import numpy as np

from dialab import (
    ApproximantSpec,
    ModelParams,
    TimeGrid,
    approximant_poles,
    dia_approximant,
    functional_residual,
    invert_approximant,
    perturbative_transform,
)

params = ModelParams.create(nu=0.04, sigma=0.1, lam=0.1)

# Depth 2 is the perturbative closure.
p = np.array([1.0 + 2.0j, 3.0 - 0.5j])
print("depth 2:     ", dia_approximant(ApproximantSpec("oscillator", 2, params), p))
print("perturbative:", perturbative_transform("oscillator", params, p))

# Residual of the functional equation at p = 2 shrinks with depth.
for depth in (1, 2, 3, 5, 10, 20, 30):
    r = abs(functional_residual(ApproximantSpec("oscillator", depth, params), 2.0))
    print(f"depth {depth:2d}: |residual| = {r:.3e}")

# Poles: their real parts set the decay rate of each truncation.
for depth in (2, 3, 30):
    poles = approximant_poles(ApproximantSpec("oscillator", depth, params))
    print(f"depth {depth:2d}: rightmost pole real part {poles.real.max():+.4f}, "
          f"{poles.size} poles")

# Back to the time domain.
grid = TimeGrid(t_max=40.0, n_steps=401)
g = invert_approximant(ApproximantSpec("oscillator", 30, params), grid)
print("G(t) at t = 0, 10, 20, 40:", np.round(g.values[[0, 100, 200, 400]], 5))
