"""Independent reference computations used only by the tests.

Everything here is built from closed forms (analytic characteristic
functions, symbolic moments) or from straightforward dense quadrature, never
from the fast paths under test.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
import sympy as sp

from levyband.char_fn import CfEvaluation, analytic_cf
from levyband.kernel import phi_w


def trapezoid_nodes(n_u: int):
    u = np.linspace(-1.0, 1.0, n_u)
    w = np.full(n_u, u[1] - u[0])
    w[[0, -1]] *= 0.5
    return u, w


def population_kn(model, delta, h, kernel, t_grid, n_u: int = 4097):
    """K_n(t) = (1/2pi) int exp(-iut) phi_W(u) / phi_delta(u/h) du with the analytic CF."""
    u, w = trapezoid_nodes(n_u)
    f = phi_w(kernel, u) / analytic_cf(model, delta, u / h) * w
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    vals = np.empty(t.size, dtype=complex)
    for lo in range(0, t.size, 1024):
        vals[lo:lo + 1024] = np.exp(-1j * np.outer(t[lo:lo + 1024], u)) @ f / (2 * math.pi)
    resid = float(np.max(np.abs(vals.imag)))
    assert resid < 1e-10, f"population K_n not real: {resid}"
    return vals.real


def population_s2(model, delta, h, kernel, x, y, n_u: int = 4097):
    """Two-moment variance formula with population K_n, integrated against
    a (large) simulated sample ``y`` of the increment law."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.size)
    y = np.asarray(y, dtype=float)
    t_all = np.linspace(-(abs(x).max() + abs(y).max()) / h - 1, (abs(x).max() + abs(y).max()) / h + 1, 40001)
    k_tab = population_kn(model, delta, h, kernel, t_all, n_u)
    for i, xi in enumerate(x):
        g = y**2 * np.interp((xi - y) / h, t_all, k_tab)
        out[i] = np.mean(g * g) - np.mean(g) ** 2
    return out


def analytic_cf_eval(model, delta, u) -> CfEvaluation:
    """phi, phi', phi'' from phi = exp(delta psi) with psi' and psi'' in closed form."""
    u = np.asarray(u, dtype=float)
    phi = analytic_cf(model, delta, u)
    if model.kind == "gamma":
        a = 1 - 1j * u / model.lam
        d1 = model.c * (1j / model.lam) / a
        d2 = model.c * (1j / model.lam) ** 2 / a**2
    else:
        s2, lam, v = model.sigma**2, model.lam, model.v
        if model.kind == "bcn":
            e = np.exp(-0.5 * v**2 * u**2)
            d1 = -s2 * u - lam * v**2 * u * e
            d2 = -s2 - lam * v**2 * (1 - v**2 * u**2) * e
        else:
            q = 1 + v**2 * u**2
            d1 = -s2 * u - lam * 2 * v**2 * u / q**2
            d2 = -s2 - lam * (2 * v**2 / q**2 - 8 * v**4 * u**2 / q**3)
    dphi = delta * d1 * phi
    d2phi = (delta * d2 + (delta * d1) ** 2) * phi
    return CfEvaluation(u, np.asarray(phi, complex), np.asarray(dphi, complex),
                        np.asarray(d2phi, complex))


def fourth_moment_oracle(sigma: float, v: float, lam: float, delta: float) -> float:
    """E[L_delta^4] for BCN(sigma, v) with intensity lam, from cumulants.

    kappa_2 = delta (sigma^2 + int x^2 rho), kappa_4 = delta int x^4 rho;
    with zero mean E[L^4] = kappa_4 + 3 kappa_2^2.  The jump integrals are
    evaluated symbolically.
    """
    x = sp.symbols("x", real=True)
    s, vv, ll, dd = (sp.nsimplify(a) for a in (sigma, v, lam, delta))
    rho = ll * sp.exp(-x**2 / (2 * vv**2)) / sp.sqrt(2 * sp.pi * vv**2)
    m2 = sp.integrate(x**2 * rho, (x, -sp.oo, sp.oo))
    m4 = sp.integrate(x**4 * rho, (x, -sp.oo, sp.oo))
    k2 = dd * (s**2 + m2)
    k4 = dd * m4
    return float(sp.simplify(k4 + 3 * k2**2))


def phi_w_flattop_mp(u: float, b: float = 1.0, c: float = 0.05, dps: int = 40) -> float:
    """Flat-top Fourier transform evaluated in extended precision."""
    with mpmath.workdps(dps):
        a = abs(mpmath.mpf(u))
        if a <= c:
            return 1.0
        if a >= 1:
            return 0.0
        return float(mpmath.exp(-b * mpmath.exp(-b / (a - c) ** 2) / (a - 1) ** 2))


def kernel_w_quad(spec, x: float) -> float:
    """W(x) by adaptive quadrature of the cosine transform (phi_W is even)."""
    from scipy.integrate import quad

    val, _ = quad(lambda u: math.cos(u * x) * phi_w(spec, u), 0.0, 1.0, limit=400,
                  epsabs=1e-13, epsrel=1e-12)
    return val / math.pi

