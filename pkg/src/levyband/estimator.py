"""Spectral estimator of the Levy density, the direct kernel estimator and
pilot estimators of the diffusion coefficient sigma^2."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .char_fn import CfEvaluation, ecf_eval, frequency_grid
from .errors import CharFnTooSmall, ParameterError, QuadratureResidual
from .kernel import DEFAULT_KERNEL, KernelSpec, epanechnikov, phi_w
from .levy_models import IncrementSample, LevyModel

GUARD = 1e-10
IMAG_TOL = 1e-8
DEFAULT_N_U = 4097
POINTS_PER_INTERVAL = 101


# -- sigma^2 pilots ----------------------------------------------------------

def trv_sigma2(sample: IncrementSample, alpha0: float = 3.0, theta0: float = 0.48) -> float:
    """Truncated realized volatility: squared increments below alpha0 * delta**theta0."""
    if not alpha0 > 0:
        raise ParameterError("alpha0 must be > 0")
    if not 0 < theta0 < 0.5:
        raise ParameterError("theta0 must lie in (0, 1/2)")
    y = sample.y
    keep = np.abs(y) <= alpha0 * sample.delta**theta0
    return float(np.sum(y[keep] ** 2) / (sample.n * sample.delta))


def pv_sigma2(sample: IncrementSample, alpha: float = 1.0) -> float:
    """Power variation estimator of order ``alpha`` in (0, 2)."""
    if not 0 < alpha < 2:
        raise ParameterError("alpha must lie in (0, 2)")
    m_alpha = 2 ** (alpha / 2) * gamma_fn((alpha + 1) / 2) / math.sqrt(math.pi)
    s = np.sum(np.abs(sample.y) ** alpha) / (sample.n * sample.delta ** (alpha / 2) * m_alpha)
    return float(s ** (2 / alpha))


def jr_default_frequency(n: int, delta: float) -> float:
    """``sqrt(log(n) / delta)``.

    For a sigma = 1 Brownian increment |phi| at this frequency is n**-1/2,
    the size of the ECF sampling noise, so the estimate is noisy.  See
    :func:`jr_adaptive_frequency` for a data-driven alternative.
    """
    return math.sqrt(math.log(n) / delta)


def jr_adaptive_frequency(sample: IncrementSample, power: float = 0.25) -> float:
    """Frequency at which a PV-based pilot predicts |phi| = n**-power.

    Solves delta * u^2 * s2 / 2 = power * log(n) with s2 the order-1 power
    variation estimate, so the signal stays well above the n**-1/2 noise
    whatever the scale of the data.
    """
    if not 0 < power < 0.5:
        raise ParameterError("power must lie in (0, 1/2)")
    pilot = pv_sigma2(sample)
    if pilot <= 0:
        raise ParameterError("power variation pilot is zero; frequency undefined")
    return math.sqrt(2 * power * math.log(max(sample.n, 2)) / (sample.delta * pilot))


def jr_sigma2(sample: IncrementSample, u_n: float | None = None) -> float:
    """Log-modulus ECF estimator -2 log|phi(u_n)| / (delta u_n^2)."""
    if u_n is None:
        u_n = jr_default_frequency(max(sample.n, 2), sample.delta)
    if not u_n > 0:
        raise ParameterError("u_n must be > 0")
    phi = np.mean(np.exp(1j * u_n * sample.y))
    mod = abs(phi)
    if mod == 0:
        return 0.0
    return float(-2.0 / (sample.delta * u_n**2) * math.log(mod))


@dataclass(frozen=True)
class Sigma2Mode:
    """How the sigma^2 pilot is obtained: ``zero``, ``fixed`` or ``trv``."""

    kind: str = "zero"
    value: float = 0.0
    alpha0: float = 3.0
    theta0: float = 0.48

    def __post_init__(self):
        if self.kind not in ("zero", "fixed", "trv"):
            raise ParameterError(f"unknown sigma2 mode {self.kind!r}")
        if self.kind == "fixed" and not self.value >= 0:
            raise ParameterError("fixed sigma2 must be >= 0")

    def resolve(self, sample: IncrementSample) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "fixed":
            return float(self.value)
        return trv_sigma2(sample, self.alpha0, self.theta0)

    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed={self.value:g}"
        return self.kind


def parse_sigma2(text: str) -> Sigma2Mode | None:
    """``zero``, ``trv``, ``fixed=V`` or ``auto`` (returns None)."""
    t = text.strip().lower()
    if t == "auto":
        return None
    if t in ("zero", "trv"):
        return Sigma2Mode(t)
    if t.startswith("fixed="):
        try:
            return Sigma2Mode("fixed", float(t[6:]))
        except ValueError:
            raise ParameterError(f"bad sigma2 value in {text!r}") from None
    raise ParameterError(f"unknown sigma2 mode {text!r}")


def default_sigma2(model: LevyModel) -> Sigma2Mode:
    """TRV(3, 0.48) when the model has a Brownian part, zero otherwise."""
    return Sigma2Mode("trv") if model.has_diffusion else Sigma2Mode("zero")


# -- evaluation grids --------------------------------------------------------

def parse_intervals(text: str) -> list[tuple[float, float]]:
    """``-0.75:-0.25,0.25:0.75`` -> [(-0.75, -0.25), (0.25, 0.75)]."""
    out = []
    for part in filter(None, (s.strip() for s in text.split(","))):
        a, sep, b = part.partition(":")
        if not sep:
            raise ParameterError(f"interval {part!r} is not of the form a:b")
        out.append((float(a), float(b)))
    if not out:
        raise ParameterError("no intervals given")
    return out


def interval_grid(intervals, points: int = POINTS_PER_INTERVAL) -> np.ndarray:
    """Equispaced points per interval, concatenated; intervals must avoid 0."""
    parts = []
    for a, b in intervals:
        if not a < b:
            raise ParameterError(f"empty interval [{a}, {b}]")
        if a <= 0 <= b:
            raise ParameterError(f"interval [{a}, {b}] contains the origin")
        parts.append(np.linspace(a, b, points))
    return np.concatenate(parts)


def default_intervals(model: LevyModel) -> list[tuple[float, float]]:
    if model.kind == "gamma":
        return [(0.25, 0.75)]
    return [(-0.75, -0.25), (0.25, 0.75)]


# -- spectral estimator ------------------------------------------------------

@dataclass(frozen=True)
class EstimatorConfig:
    h: float
    x_grid: np.ndarray
    n_u: int = DEFAULT_N_U
    sigma2: Sigma2Mode = field(default_factory=Sigma2Mode)

    def __post_init__(self):
        if not self.h > 0:
            raise ParameterError("bandwidth h must be > 0")
        x = np.atleast_1d(np.asarray(self.x_grid, dtype=float))
        if x.size == 0 or np.any(x == 0) or not np.all(np.isfinite(x)):
            raise ParameterError("x_grid must be nonempty, finite and exclude 0")
        object.__setattr__(self, "x_grid", x)
        if self.n_u < 129 or self.n_u % 2 == 0:
            raise ParameterError("n_u must be odd and >= 129")

    def with_h(self, h: float) -> "EstimatorConfig":
        return EstimatorConfig(h, self.x_grid, self.n_u, self.sigma2)


@dataclass
class DensityEstimate:
    x: np.ndarray
    rho_hat: np.ndarray
    h: float
    delta: float
    n: int
    sigma2: float = 0.0
    s_hat: np.ndarray | None = None
    imag_residual: float = 0.0


def psi2_hat(cf: CfEvaluation, delta: float) -> np.ndarray:
    """Estimate of -psi'' = ((phi')^2 - phi'' phi) / (delta phi^2)."""
    return (cf.dphi**2 - cf.d2phi * cf.phi) / (delta * cf.phi**2)


def check_guard(cf: CfEvaluation, u_max: float, guard: float = GUARD, h=None) -> float:
    inside = np.abs(cf.u) <= u_max * (1 + 1e-12)
    min_abs = float(np.min(np.abs(cf.phi[inside])))
    if not min_abs > guard:
        raise CharFnTooSmall(min_abs, guard, h)
    return min_abs


def trapezoid_weights(u: np.ndarray) -> np.ndarray:
    du = u[1] - u[0]
    w = np.full(u.size, du)
    w[[0, -1]] *= 0.5
    return w


def fourier_matrix(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """exp(-i x u) scaled by trapezoid weights and 1/2pi."""
    return np.exp(-1j * np.outer(x, u)) * (trapezoid_weights(u) / (2 * math.pi))


def _invert(E: np.ndarray, integrand: np.ndarray, x: np.ndarray):
    vals = E @ integrand
    resid = float(np.max(np.abs(vals.imag)))
    if resid > IMAG_TOL:
        raise QuadratureResidual(resid, IMAG_TOL)
    return vals.real / x**2, resid


def spectral_estimate(
    sample: IncrementSample,
    cfg: EstimatorConfig,
    kernel: KernelSpec = DEFAULT_KERNEL,
    cf: CfEvaluation | None = None,
    guard: float = GUARD,
) -> DensityEstimate:
    """Fourier-inversion estimate of the Levy density on ``cfg.x_grid``.

    By default the ECF is evaluated on ``cfg.n_u`` nodes spanning
    [-1/h, 1/h].  A precomputed ``cf`` on any symmetric uniform grid that
    covers [-1/h, 1/h] may be passed instead; nodes beyond 1/h carry zero
    weight because phi_W(u h) vanishes there.
    """
    h = cfg.h
    if cf is None:
        cf = ecf_eval(sample, frequency_grid(1.0 / h, cfg.n_u))
    else:
        if cf.u[-1] < (1.0 / h) * (1 - 1e-12):
            raise ParameterError("supplied ECF grid does not cover [-1/h, 1/h]")
        cf = cf.restrict(1.0 / h)
    check_guard(cf, 1.0 / h, guard, h)
    s2 = cfg.sigma2.resolve(sample)
    integrand = (psi2_hat(cf, sample.delta) - s2) * phi_w(kernel, cf.u * h)
    E = fourier_matrix(cfg.x_grid, cf.u)
    rho, resid = _invert(E, integrand, cfg.x_grid)
    return DensityEstimate(cfg.x_grid, rho, h, sample.delta, sample.n, s2, imag_residual=resid)


def direct_kernel_estimate(sample: IncrementSample, h: float, x_grid) -> np.ndarray:
    """Epanechnikov kernel density of the increments, scaled by 1/delta."""
    if not h > 0:
        raise ParameterError("bandwidth h must be > 0")
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    y = np.sort(sample.y)
    out = np.zeros(x.size)
    for i, xi in enumerate(x):
        lo, hi = np.searchsorted(y, xi - h, "left"), np.searchsorted(y, xi + h, "right")
        out[i] = epanechnikov((xi - y[lo:hi]) / h).sum()
    return out / (sample.n * sample.delta * h)
