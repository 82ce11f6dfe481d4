"""Bandwidth choice from sup-distances between estimates at adjacent bandwidths.

Candidates are h_j = j * M * sqrt(delta) / J, j = 1..J.  The selected
bandwidth is the smallest h_j (j >= 2) whose adjacent distance
||rho_hat_{h_j} - rho_hat_{h_{j-1}}|| is within kappa times the smallest
adjacent distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .char_fn import ecf_eval, frequency_grid
from .errors import CharFnTooSmall, LevyBandError, ParameterError, QuadratureResidual
from .estimator import (
    GUARD,
    IMAG_TOL,
    EstimatorConfig,
    check_guard,
    fourier_matrix,
    psi2_hat,
)
from .kernel import DEFAULT_KERNEL, KernelSpec, phi_w
from .levy_models import IncrementSample


@dataclass(frozen=True)
class SelectionConfig:
    M: float = 2.0
    J: int = 20
    kappa: float = 20.0

    def __post_init__(self):
        if not self.M > 1:
            raise ParameterError("M must be > 1")
        if int(self.J) != self.J or self.J < 3:
            raise ParameterError("J must be an integer >= 3")
        if not self.kappa > 1:
            raise ParameterError("kappa must be > 1")

    def candidates(self, delta: float) -> np.ndarray:
        pilot = self.M * math.sqrt(delta)
        return pilot * np.arange(1, int(self.J) + 1) / self.J


@dataclass
class BandwidthSelection:
    candidates: np.ndarray
    distances: np.ndarray          # d[j] for j = 1..J-1 (0-based), nan if infeasible
    feasible: np.ndarray
    index: int                     # 0-based index into candidates
    h: float
    kappa: float
    M: float
    estimates: dict = field(default_factory=dict, repr=False)


class SelectionFailed(LevyBandError):
    """No admissible candidate bandwidth."""


def candidate_estimates(sample: IncrementSample, candidates, est_cfg: EstimatorConfig,
                        kernel: KernelSpec = DEFAULT_KERNEL, guard: float = GUARD):
    """rho_hat at each candidate h on the common grid; None where the guard fails.

    The ECF is evaluated once on ``est_cfg.n_u`` nodes spanning the widest
    frequency range 1/min(h); every candidate integrates over the same nodes
    with its own phi_W(u h) cutoff.
    """
    hs = np.asarray(candidates, dtype=float)
    if np.any(hs <= 0) or np.any(np.diff(hs) <= 0):
        raise ParameterError("candidates must be positive and strictly increasing")
    cf = ecf_eval(sample, frequency_grid(1.0 / hs[0], est_cfg.n_u))
    s2 = est_cfg.sigma2.resolve(sample)
    with np.errstate(all="ignore"):
        base = psi2_hat(cf, sample.delta) - s2
    E = fourier_matrix(est_cfg.x_grid, cf.u)
    x2 = est_cfg.x_grid**2
    out = []
    for h in hs:
        try:
            check_guard(cf, 1.0 / h, guard, h)
        except CharFnTooSmall:
            out.append(None)
            continue
        weight = phi_w(kernel, cf.u * h)
        inside = weight > 0
        vals = E[:, inside] @ (base[inside] * weight[inside])
        resid = float(np.max(np.abs(vals.imag)))
        if resid > IMAG_TOL:
            raise QuadratureResidual(resid, IMAG_TOL)
        out.append(vals.real / x2)
    return out


def adjacent_distances(estimates) -> np.ndarray:
    """d_j = max |rho_j - rho_{j-1}|, nan when either neighbour is missing."""
    d = np.full(len(estimates), np.nan)
    for j in range(1, len(estimates)):
        a, b = estimates[j], estimates[j - 1]
        if a is not None and b is not None:
            d[j] = float(np.max(np.abs(a - b)))
    return d


def select_from_distances(d, kappa: float) -> int:
    """Smallest 0-based j >= 1 with d[j] <= kappa * min(d); nan entries skipped."""
    d = np.asarray(d, dtype=float)
    valid = ~np.isnan(d)
    valid[0] = False
    if not valid.any():
        raise SelectionFailed("no pair of feasible adjacent candidates")
    thresh = kappa * np.min(d[valid])
    for j in np.flatnonzero(valid):
        if d[j] <= thresh:
            return int(j)
    raise AssertionError("unreachable: the minimiser always qualifies")


def distance_profile(sample, candidates, est_cfg, kernel=DEFAULT_KERNEL):
    """List of (h_j, d_j) for j >= 2 (1-based), nan where infeasible."""
    hs = np.asarray(candidates, dtype=float)
    d = adjacent_distances(candidate_estimates(sample, hs, est_cfg, kernel))
    return list(zip(hs[1:].tolist(), d[1:].tolist()))


def select_bandwidth(
    sample: IncrementSample,
    cfg: SelectionConfig = SelectionConfig(),
    est_cfg: EstimatorConfig | None = None,
    kernel: KernelSpec = DEFAULT_KERNEL,
) -> BandwidthSelection:
    if est_cfg is None:
        raise ParameterError("est_cfg (grid and sigma2 mode) is required")
    hs = cfg.candidates(sample.delta)
    ests = candidate_estimates(sample, hs, est_cfg, kernel)
    d = adjacent_distances(ests)
    j = select_from_distances(d, cfg.kappa)
    feasible = np.array([e is not None for e in ests])
    return BandwidthSelection(hs, d, feasible, j, float(hs[j]), cfg.kappa, cfg.M,
                              estimates={float(h): e for h, e in zip(hs, ests)})
