"""Uniform confidence bands: deconvolution kernel, variance function,
multiplier and empirical bootstrap critical values, band assembly."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .char_fn import CfEvaluation, ecf_eval, frequency_grid
from .errors import ParameterError, QuadratureResidual, QuadratureResolution, ZeroVariance
from .estimator import DEFAULT_N_U, GUARD, DensityEstimate, check_guard
from .kernel import DEFAULT_KERNEL, KernelSpec, phi_w
from .levy_models import IncrementSample

KHAT_IMAG_TOL = 1e-8
KHAT_TABLE_STEP = 0.01
B_BLOCK = 64
VARIANCE_FLOOR = 1e3 * np.finfo(float).eps
_ROW_CHUNK = 8192


def _memory_cap_bytes() -> int:
    return int(float(os.environ.get("LEVYBAND_MEMORY_CAP_MB", "1024")) * 2**20)


def _deconv_integrand(cf: CfEvaluation, h: float, kernel: KernelSpec):
    """Nodes on [-1, 1] and phi_W(u)/phi_hat(u/h) with trapezoid weights."""
    m = (cf.u.size - 1) // 2
    k = np.arange(-m, m + 1)
    u = k / m
    f = phi_w(kernel, u) / cf.phi
    w = np.full(u.size, 1.0 / m)
    w[[0, -1]] *= 0.5
    return u, f * w


def _deconv_cf(sample, h, n_u, cf):
    if cf is None:
        cf = ecf_eval(sample, frequency_grid(1.0 / h, n_u))
    elif not math.isclose(cf.u[-1], 1.0 / h, rel_tol=1e-12):
        raise ParameterError("ECF grid must span exactly [-1/h, 1/h] for the deconvolution kernel")
    check_guard(cf, 1.0 / h, GUARD, h)
    return cf


def khat_eval(
    sample: IncrementSample,
    h: float,
    kernel: KernelSpec = DEFAULT_KERNEL,
    t_grid=0.0,
    n_u: int = DEFAULT_N_U,
    cf: CfEvaluation | None = None,
):
    """K_hat(t) = (1/2pi) int exp(-iut) phi_W(u) / phi_hat(u/h) du, direct trapezoid.

    ``cf`` (if given) must be the ECF on ``frequency_grid(1/h, n_u)``.
    """
    cf = _deconv_cf(sample, h, n_u, cf)
    u, fw = _deconv_integrand(cf, h, kernel)
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    out = np.empty(t.size, dtype=complex)
    for lo in range(0, t.size, 256):
        out[lo:lo + 256] = np.exp(-1j * np.outer(t[lo:lo + 256], u)) @ fw
    out /= 2 * math.pi
    resid = float(np.max(np.abs(out.imag)))
    if resid > KHAT_IMAG_TOL:
        raise QuadratureResidual(resid, KHAT_IMAG_TOL)
    return out.real


@dataclass(frozen=True)
class KhatTable:
    """K_hat tabulated exactly (same trapezoid rule) on a uniform t grid."""

    t: np.ndarray
    values: np.ndarray
    spline: CubicSpline
    imag_residual: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.size and (t.min() < self.t[0] or t.max() > self.t[-1]):
            raise QuadratureResolution("K_hat requested outside its tabulated range")
        return self.spline(t)


def khat_table(
    cf: CfEvaluation,
    h: float,
    t_max: float,
    kernel: KernelSpec = DEFAULT_KERNEL,
    step: float = KHAT_TABLE_STEP,
) -> KhatTable:
    """Tabulate K_hat on |t| <= t_max with one FFT, then fit a cubic spline.

    With frequency step du = 1/m on [-1, 1] and table step dt such that
    du * dt * N = 2pi, the trapezoid sum at t = j * dt is exactly the
    length-N DFT of the weighted integrand.
    """
    m = (cf.u.size - 1) // 2
    period = 2 * math.pi * m
    if 2 * t_max >= period / 2:
        raise QuadratureResolution(
            f"|t| up to {t_max:.1f} needs more than n_u={cf.u.size} frequency nodes"
        )
    u, fw = _deconv_integrand(cf, h, kernel)
    N = 1 << max(int(math.ceil(math.log2(period / step))), int(math.ceil(math.log2(u.size))))
    dt = period / N
    buf = np.zeros(N, dtype=complex)
    k = np.arange(-m, m + 1)
    buf[k % N] = fw
    spec = np.fft.fft(buf) / (2 * math.pi)
    jmax = int(math.ceil(t_max / dt)) + 3
    j = np.arange(-jmax, jmax + 1)
    vals = spec[j % N]
    resid = float(np.max(np.abs(vals.imag)))
    if resid > KHAT_IMAG_TOL:
        raise QuadratureResidual(resid, KHAT_IMAG_TOL)
    t = j * dt
    return KhatTable(t, vals.real, CubicSpline(t, vals.real), resid)


class WeightMatrix:
    """g[j, m] = Y_j^2 K_hat((x_m - Y_j)/h) with exact column means.

    Rows with Y_j = 0 are identically zero and are not stored.  When the
    dense nonzero block would exceed the memory cap (env
    ``LEVYBAND_MEMORY_CAP_MB``, default 1024) columns are recomputed on
    demand in blocks instead of being held.
    """

    def __init__(self, y: np.ndarray, x: np.ndarray, h: float, khat: KhatTable,
                 memory_cap: int | None = None, col_block: int = 32):
        self.y = np.asarray(y, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.h = float(h)
        self.khat = khat
        self.n = self.y.size
        self.nz = np.flatnonzero(self.y != 0)
        self.col_block = col_block
        cap = _memory_cap_bytes() if memory_cap is None else memory_cap
        self.chunked = self.nz.size * self.x.size * 8 > cap
        self._dense = None if self.chunked else self._compute(0, self.x.size)
        s1 = np.zeros(self.x.size)
        s2 = np.zeros(self.x.size)
        for lo, hi, g in self.blocks():
            s1[lo:hi] = g.sum(axis=0)
            s2[lo:hi] = np.einsum("ij,ij->j", g, g)
        self.gbar = s1 / self.n
        self.g2bar = s2 / self.n

    def _compute(self, lo: int, hi: int) -> np.ndarray:
        ynz = self.y[self.nz]
        xs = self.x[lo:hi]
        out = np.empty((ynz.size, xs.size))
        for r in range(0, ynz.size, _ROW_CHUNK):
            yc = ynz[r:r + _ROW_CHUNK]
            t = (xs[None, :] - yc[:, None]) / self.h
            out[r:r + _ROW_CHUNK] = (yc * yc)[:, None] * self.khat(t)
        return out

    def blocks(self):
        """Yield (lo, hi, g_nz[:, lo:hi]) over column blocks."""
        if self._dense is not None:
            yield 0, self.x.size, self._dense
            return
        for lo in range(0, self.x.size, self.col_block):
            hi = min(lo + self.col_block, self.x.size)
            yield lo, hi, self._compute(lo, hi)

    def dense(self) -> np.ndarray:
        """Full n x N_x matrix including zero rows (for checks)."""
        g = np.zeros((self.n, self.x.size))
        for lo, hi, blk in self.blocks():
            g[self.nz, lo:hi] = blk
        return g


def variance_fn(
    sample: IncrementSample,
    h: float,
    kernel: KernelSpec,
    x_grid,
    n_u: int = DEFAULT_N_U,
    cf: CfEvaluation | None = None,
    memory_cap: int | None = None,
):
    """s_hat^2(x) = mean(Y^4 K^2) - mean(Y^2 K)^2 and the cached WeightMatrix."""
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    cf = _deconv_cf(sample, h, n_u, cf)
    y = sample.y
    t_max = (np.max(np.abs(x)) + np.max(np.abs(y))) / h + 1.0
    table = khat_table(cf, h, t_max, kernel)
    wm = WeightMatrix(y, x, h, table, memory_cap)
    s2 = wm.g2bar - wm.gbar**2
    # below this the one-pass difference is rounding noise: treat as degenerate
    s2[s2 <= VARIANCE_FLOOR * wm.g2bar] = 0.0
    return s2, wm


# -- bootstrap ---------------------------------------------------------------

def _check_sd(s_hat: np.ndarray) -> bool:
    """True when every point is degenerate (all sup statistics are then 0)."""
    zero = s_hat <= 0
    if zero.all():
        return True
    if zero.any():
        raise ZeroVariance(f"s_hat vanishes at {int(zero.sum())} of {zero.size} grid points")
    return False


def bootstrap_sups(wm: WeightMatrix, s_hat, B: int, rng: np.random.Generator,
                   method: str = "mb") -> np.ndarray:
    """B draws of sup_x |Z(x)| for the multiplier (``mb``) or empirical (``eb``) bootstrap.

    Multipliers are drawn block by block (B_BLOCK replicates at a time) from
    ``rng``, so the result does not depend on how columns are chunked.
    """
    if method not in ("mb", "eb"):
        raise ParameterError(f"unknown bootstrap method {method!r}")
    if B < 1:
        raise ParameterError("B must be >= 1")
    s_hat = np.asarray(s_hat, dtype=float)
    if _check_sd(s_hat):
        return np.zeros(B)
    n = wm.n
    scale = 1.0 / (s_hat * math.sqrt(n))
    sups = np.empty(B)
    for b0 in range(0, B, B_BLOCK):
        bs = min(B_BLOCK, B - b0)
        if method == "mb":
            xi = rng.standard_normal((bs, n))
            w_nz = xi[:, wm.nz]
            shift = xi.sum(axis=1)
        else:
            idx = rng.integers(0, n, size=(bs, n))
            counts = np.bincount((idx + (np.arange(bs) * n)[:, None]).ravel(),
                                 minlength=bs * n).reshape(bs, n)
            w_nz = counts[:, wm.nz].astype(float)
            shift = np.full(bs, float(n))
        best = np.zeros(bs)
        for lo, hi, g in wm.blocks():
            z = (w_nz @ g - shift[:, None] * wm.gbar[lo:hi]) * scale[lo:hi]
            np.maximum(best, np.abs(z).max(axis=1), out=best)
        sups[b0:b0 + bs] = best
    return sups


def quantile_index(B: int, tau: float) -> int:
    """0-based index of the ceil(B(1-tau))-th order statistic."""
    if not 0 < tau < 1:
        raise ParameterError("tau must lie in (0, 1)")
    k = math.ceil(B * (1 - tau) - 1e-9)
    return min(max(k, 1), B) - 1


def critical_value(sups, tau):
    """Bootstrap (1-tau)-quantile(s) of the sup statistic."""
    s = np.sort(np.asarray(sups, dtype=float))
    if np.ndim(tau):
        return np.array([s[quantile_index(s.size, t)] for t in tau])
    return float(s[quantile_index(s.size, tau)])


def mb_critical_value(wm, s_hat, B: int, tau, rng):
    if B < 100:
        raise ParameterError("B must be >= 100")
    return critical_value(bootstrap_sups(wm, s_hat, B, rng, "mb"), tau)


def eb_critical_value(wm, s_hat, B: int, tau, rng):
    if B < 100:
        raise ParameterError("B must be >= 100")
    return critical_value(bootstrap_sups(wm, s_hat, B, rng, "eb"), tau)


# -- bands -------------------------------------------------------------------

@dataclass
class ConfidenceBand:
    x: np.ndarray
    rho_hat: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    half_width: np.ndarray
    level: float
    c_hat: float
    method: str
    h: float
    n: int
    delta: float

    def contains(self, values) -> bool:
        values = np.asarray(values, dtype=float)
        return bool(np.all((self.lower <= values) & (values <= self.upper)))

    @property
    def sup_width(self) -> float:
        return float(np.max(self.upper - self.lower))


def band_scale(est: DensityEstimate, s_hat) -> np.ndarray:
    """s_hat(x) / (x^2 sqrt(n) h delta): half-width per unit critical value."""
    return np.asarray(s_hat) / (est.x**2 * math.sqrt(est.n) * est.h * est.delta)


def build_band(est: DensityEstimate, s_hat, c_hat: float, tau: float,
               method: str = "mb") -> ConfidenceBand:
    s_hat = np.asarray(s_hat, dtype=float)
    if s_hat.shape != est.x.shape:
        raise ParameterError("s_hat must live on the estimate's grid")
    half = band_scale(est, s_hat) * c_hat
    return ConfidenceBand(
        est.x, est.rho_hat, est.rho_hat - half, est.rho_hat + half, half,
        1 - tau, float(c_hat), method, est.h, est.n, est.delta,
    )


def sup_statistic(est: DensityEstimate, s_hat, rho_true) -> float:
    """max_x |sqrt(n) delta h x^2 (rho_hat - rho) / s_hat|."""
    s_hat = np.asarray(s_hat, dtype=float)
    dev = math.sqrt(est.n) * est.delta * est.h * est.x**2 * (est.rho_hat - rho_true)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(dev) / s_hat
    z = np.where(s_hat > 0, z, np.where(dev == 0, 0.0, np.inf))
    return float(np.max(z))


@dataclass
class BandResult:
    """Everything computed for one sample: estimate, s_hat and bootstrap sups."""

    estimate: DensityEstimate
    s_hat: np.ndarray
    sups: dict

    def band(self, tau: float, method: str = "mb") -> ConfidenceBand:
        return build_band(self.estimate, self.s_hat, critical_value(self.sups[method], tau),
                          tau, method)


def compute_band(
    sample: IncrementSample,
    cfg,
    kernel: KernelSpec = DEFAULT_KERNEL,
    B: int = 500,
    methods: Sequence[str] = ("mb",),
    rngs: dict | None = None,
    memory_cap: int | None = None,
) -> BandResult:
    """Spectral estimate plus bootstrap sup statistics on ``cfg.x_grid``.

    ``rngs`` maps method name to its generator; one ECF evaluation on
    [-1/h, 1/h] is shared by the estimate and the deconvolution kernel.
    """
    from .estimator import spectral_estimate

    if B < 100:
        raise ParameterError("B must be >= 100")
    cf = ecf_eval(sample, frequency_grid(1.0 / cfg.h, cfg.n_u))
    est = spectral_estimate(sample, cfg, kernel, cf=cf)
    s2, wm = variance_fn(sample, cfg.h, kernel, cfg.x_grid, cfg.n_u, cf=cf, memory_cap=memory_cap)
    s_hat = np.sqrt(s2)
    est.s_hat = s_hat
    rngs = rngs or {}
    sups = {}
    for m in methods:
        rng = rngs.get(m) or np.random.default_rng()
        sups[m] = bootstrap_sups(wm, s_hat, B, rng, m)
    return BandResult(est, s_hat, sups)
