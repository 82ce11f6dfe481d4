"""Empirical characteristic function (and derivatives) on frequency grids.

The fast path works on symmetric uniform grids ``u_k = k * du``,
``k = -m..m``.  Only the half ``k >= 0`` is computed and the rest follows by
conjugate symmetry.  On that half, ``exp(i u_k y)`` factors as
``exp(i a*s*du*y) * exp(i b*du*y)`` with ``k = a*s + b``, which turns the
n x K exponential table into a small complex matrix product.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .levy_models import IncrementSample, LevyModel

_CHUNK = 16384


def frequency_grid(u_max: float, n_u: int) -> np.ndarray:
    """Odd-length uniform grid on [-u_max, u_max], exactly symmetric, 0 a node."""
    if n_u < 3 or n_u % 2 == 0:
        raise ParameterError("n_u must be an odd integer >= 3")
    if not u_max > 0:
        raise ParameterError("u_max must be > 0")
    m = (n_u - 1) // 2
    return (u_max / m) * np.arange(-m, m + 1, dtype=float)


@dataclass(frozen=True)
class CfEvaluation:
    """ECF values ``phi`` and first/second derivatives on the grid ``u``."""

    u: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray

    def restrict(self, u_max: float) -> "CfEvaluation":
        keep = np.abs(self.u) <= u_max * (1 + 1e-12)
        return CfEvaluation(self.u[keep], self.phi[keep], self.dphi[keep], self.d2phi[keep])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "re_phi", "im_phi", "re_dphi", "im_dphi", "re_d2phi", "im_d2phi"])
            for row in zip(
                self.u,
                self.phi.real, self.phi.imag,
                self.dphi.real, self.dphi.imag,
                self.d2phi.real, self.d2phi.imag,
            ):
                w.writerow([repr(float(v)) for v in row])


def _symmetric_step(u: np.ndarray) -> float | None:
    """Return du if ``u`` is exactly ``du * arange(-m, m+1)``, else None."""
    if u.size % 2 == 0 or u.size < 3:
        return None
    m = (u.size - 1) // 2
    du = u[-1] / m
    if du <= 0:
        return None
    if np.array_equal(u, du * np.arange(-m, m + 1, dtype=float)):
        return du
    return None


def ecf_naive(y: np.ndarray, u: np.ndarray):
    """Direct summation (1/n) sum (i y)^k exp(i u y), k = 0, 1, 2."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    out = np.zeros((3, u.size), dtype=complex)
    iy = 1j * y
    for lo in range(0, u.size, 256):
        e = np.exp(1j * np.outer(y, u[lo:lo + 256]))
        out[0, lo:lo + 256] = e.sum(axis=0)
        out[1, lo:lo + 256] = iy @ e
        out[2, lo:lo + 256] = (iy * iy) @ e
    return out / y.size


def _ecf_halfgrid(y: np.ndarray, du: float, K: int) -> np.ndarray:
    """ECF orders 0..2 at u = du * arange(K) via a factored matrix product."""
    s = max(1, int(math.ceil(math.sqrt(K))))
    na = -(-K // s)
    coarse = (s * du) * np.arange(na)
    fine = du * np.arange(s)
    acc = np.zeros((3 * na, s), dtype=complex)
    for lo in range(0, y.size, _CHUNK):
        yc = y[lo:lo + _CHUNK]
        a = np.exp(1j * np.outer(yc, coarse))
        b = np.exp(1j * np.outer(yc, fine))
        iy = (1j * yc)[:, None]
        aw = np.concatenate([a, a * iy, a * (iy * iy)], axis=1)
        acc += aw.T @ b
    out = acc.reshape(3, na * s)[:, :K]
    return out / y.size


def ecf_eval(sample: IncrementSample | np.ndarray, u_grid) -> CfEvaluation:
    """Evaluate the ECF and its first two derivatives on ``u_grid``.

    Grids produced by :func:`frequency_grid` use the factored fast path and
    are exactly conjugate symmetric; any other grid falls back to direct
    summation.
    """
    y = sample.y if isinstance(sample, IncrementSample) else np.asarray(sample, dtype=float)
    if y.size == 0:
        raise ParameterError("empty sample")
    u = np.asarray(u_grid, dtype=float)
    if u.ndim != 1 or u.size == 0 or not np.all(np.isfinite(u)):
        raise ParameterError("u_grid must be a nonempty finite 1-d array")

    du = _symmetric_step(u)
    if du is None:
        vals = ecf_naive(y, u)
        return CfEvaluation(u, vals[0], vals[1], vals[2])

    m = (u.size - 1) // 2
    half = _ecf_halfgrid(y, du, m + 1)
    half[0, 0] = 1.0
    half[1, 0] = 1j * y.mean()
    half[2, 0] = -np.mean(y * y)
    # phi(-u) = conj(phi(u)), phi'(-u) = -conj(phi'(u)), phi''(-u) = conj(phi''(u))
    phi = np.concatenate([np.conj(half[0, :0:-1]), half[0]])
    dphi = np.concatenate([-np.conj(half[1, :0:-1]), half[1]])
    d2phi = np.concatenate([np.conj(half[2, :0:-1]), half[2]])
    dphi[m] = 1j * dphi[m].imag
    d2phi[m] = d2phi[m].real
    return CfEvaluation(u, phi, dphi, d2phi)


def characteristic_exponent(model: LevyModel, u) -> np.ndarray:
    """psi(u) with E exp(i u L_t) = exp(t psi(u)), zero drift."""
    u = np.asarray(u, dtype=float)
    if model.kind == "gamma":
        return -model.c * np.log(1 - 1j * u / model.lam)
    diff = -0.5 * model.sigma**2 * u**2
    if model.kind == "bcn":
        jump = model.lam * (np.exp(-0.5 * model.v**2 * u**2) - 1)
    else:
        jump = model.lam * (1 / (1 + model.v**2 * u**2) - 1)
    return (diff + jump).astype(complex)


def analytic_cf(model: LevyModel, delta: float, u) -> np.ndarray | complex:
    """Closed-form characteristic function of the increment L_delta."""
    if not delta > 0:
        raise ParameterError("delta must be > 0")
    u = np.asarray(u, dtype=float)
    if model.kind == "gamma":
        out = (1 - 1j * u / model.lam) ** (-model.c * delta)
    else:
        out = np.exp(delta * characteristic_exponent(model, u))
    return out if out.ndim else complex(out)
