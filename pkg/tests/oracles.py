"""Independent reference implementations used only by the tests.

These deliberately avoid the package's numerics: rational approximants are
built symbolically and inverted exactly by partial fractions at high
precision, coefficient integrals use adaptive quadrature, and simple ODEs
use scipy's general-purpose integrator.
"""

import mpmath
import numpy as np
import sympy as sp
from scipy.integrate import quad, solve_ivp

_p = sp.symbols("p")


def _oscillator_fraction(depth, nu, s2, lam, mu=0):
    g = sp.Integer(0)
    for j in range(depth - 1, -1, -1):
        q = _p + j * lam
        g = 1 / (q + nu / (q + mu) + s2 * g)
    return g


def _wave_fraction(depth, k, s2, lam):
    g = sp.Integer(0)
    for j in range(depth - 1, -1, -1):
        q = _p + j * lam
        g = 1 / (q**2 + k**2 - s2 * k**4 * g)
    return g


def exact_inverse(model, depth, t, dps=40, **params):
    """Inverse Laplace transform of a zero-tail approximant by residues.

    Parameters are exact rationals (sympy.Rational) or floats; ``t`` is an array.
    """
    build = _oscillator_fraction if model == "oscillator" else _wave_fraction
    expr = sp.cancel(sp.together(build(depth, **params)))
    num, den = sp.fraction(expr)
    num_c = [mpmath.mpf(str(sp.N(c, dps))) for c in sp.Poly(num, _p).all_coeffs()]
    den_c = [mpmath.mpf(str(sp.N(c, dps))) for c in sp.Poly(den, _p).all_coeffs()]
    with mpmath.workdps(dps):
        roots = mpmath.polyroots(den_c, maxsteps=400, extraprec=4 * dps)
        dden = [c * (len(den_c) - 1 - i) for i, c in enumerate(den_c[:-1])]
        residues = [mpmath.polyval(num_c, r) / mpmath.polyval(dden, r) for r in roots]
        out = []
        for ti in np.asarray(t, dtype=float):
            val = mpmath.fsum(res * mpmath.exp(r * ti) for res, r in zip(residues, roots))
            out.append(float(mpmath.re(val)))
    return np.array(out), [complex(r) for r in roots]


def c_integrals(nu, sigma, lam):
    """c1, c2 by adaptive quadrature of their defining integrals."""
    a = lam / np.sqrt(nu)
    pref = sigma**2 * lam**2 / (4 * nu**2)
    i1 = quad(lambda e: np.exp(-a * e) * np.sin(2 * e), 0, np.inf, limit=500)[0]
    i2 = quad(lambda e: np.exp(-a * e) * (1 - np.cos(2 * e)), 0, np.inf, limit=500)[0]
    return pref * i1, pref * i2


def constant_b_green(t, nu, c):
    """G-hat for b = c, no kernel decay: e^{-ict/2}[cos wt - (ic/2w) sin wt]."""
    w = np.sqrt(nu + c * c / 4)
    return np.exp(-0.5j * c * t) * (np.cos(w * t) - 0.5j * c / w * np.sin(w * t))


def markov_green(times, b_fine, nu_over_mu):
    """Solve G' = -(i b + nu/mu) G exactly for b given on the doubled grid."""
    h = (times[1] - times[0]) / 2
    integral = np.concatenate([[0.0], np.cumsum(0.5 * h * (b_fine[1:] + b_fine[:-1]))])[::2]
    return np.exp(-1j * integral - nu_over_mu * times)


def wave_ivp(k, m_const, xs):
    """E'' = -k^2 (1 + m) E, E(0)=0, E'(0)=1 with a tight general ODE solver."""
    sol = solve_ivp(
        lambda x, y: [y[1], -k * k * (1 + m_const) * y[0]],
        (0, xs[-1]), [0.0, 1.0], t_eval=xs, rtol=1e-12, atol=1e-14, method="DOP853",
    )
    return sol.y[0]


def eq45_difference_symbolic():
    """Exact rational form of the squared-frequency difference."""
    s = sp.symbols("s", positive=True)
    lhs = (1 - 3 * s + 2 * s**2) / (1 - s + 2 * s**2) - (1 - s) / (1 + s)
    return s, sp.factor(sp.simplify(lhs))
