"""Simulated Levy models: exact increment samplers and true Levy densities.

Three families are supported, all with zero drift:

* ``bcn``   sigma * Brownian motion + compound Poisson with N(0, v^2) jumps
* ``bcl``   sigma * Brownian motion + compound Poisson with Laplace(0, v) jumps
* ``gamma`` Gamma process with Levy density c * x^-1 * exp(-lam * x) on x > 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

KINDS = ("bcn", "bcl", "gamma")

_ALIASES = {
    "sigma": "sigma",
    "v": "v",
    "lambda": "lam",
    "lam": "lam",
    "c": "c",
    "c+": "c",
    "lambda+": "lam",
}


@dataclass(frozen=True)
class LevyModel:
    """A Levy process from one of the supported families.

    For ``bcn``/``bcl`` the parameters are ``sigma`` (diffusion coefficient),
    ``v`` (jump scale) and ``lam`` (jump intensity).  For ``gamma`` they are
    ``c`` and ``lam``.
    """

    kind: str
    sigma: float = 0.0
    v: float = 1.0
    lam: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "gamma":
            if not (self.c > 0 and self.lam > 0):
                raise ParameterError("gamma model needs c > 0 and lambda > 0")
        else:
            if not self.sigma >= 0:
                raise ParameterError("sigma must be >= 0")
            if not (self.v > 0 and self.lam > 0):
                raise ParameterError("v and lambda must be > 0")

    @classmethod
    def bcn(cls, sigma: float, v: float, lam: float) -> "LevyModel":
        return cls("bcn", sigma=sigma, v=v, lam=lam)

    @classmethod
    def bcl(cls, sigma: float, v: float, lam: float) -> "LevyModel":
        return cls("bcl", sigma=sigma, v=v, lam=lam)

    @classmethod
    def gamma(cls, c: float, lam: float) -> "LevyModel":
        return cls("gamma", sigma=0.0, c=c, lam=lam)

    @property
    def has_diffusion(self) -> bool:
        return self.kind != "gamma" and self.sigma > 0

    def jump_moment(self, k: int) -> float:
        """Integral of x^k * rho(x) over the real line, for k >= 2."""
        if k < 2:
            raise ParameterError("jump moments are only finite for k >= 2")
        if self.kind == "bcn":
            if k % 2:
                return 0.0
            # E[X^k] for N(0, v^2) is v^k (k-1)!!
            return self.lam * self.v**k * math.prod(range(k - 1, 0, -2))
        if self.kind == "bcl":
            if k % 2:
                return 0.0
            return self.lam * math.factorial(k) * self.v**k
        return self.c * math.gamma(k) / self.lam**k

    def label(self) -> str:
        if self.kind == "gamma":
            return f"gamma:c={self.c:g},lambda={self.lam:g}"
        return f"{self.kind}:sigma={self.sigma:g},v={self.v:g},lambda={self.lam:g}"

    def __str__(self) -> str:
        return self.label()


def parse_model(text: str) -> LevyModel:
    """Parse ``bcn:sigma=1,v=0.5,lambda=10`` style model strings."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    params: dict[str, float] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ParameterError(f"malformed model parameter {item!r}")
        key = key.strip().lower()
        if key not in _ALIASES:
            raise ParameterError(f"unknown model parameter {key!r}")
        try:
            params[_ALIASES[key]] = float(value)
        except ValueError:
            raise ParameterError(f"non-numeric value in {item!r}") from None
    if kind == "gamma":
        if set(params) - {"c", "lam"}:
            raise ParameterError("gamma model accepts only c and lambda")
        return LevyModel.gamma(params.get("c", 1.0), params.get("lam", 1.0))
    if kind in ("bcn", "bcl"):
        if "c" in params:
            raise ParameterError(f"{kind} model does not take c")
        return LevyModel(kind, **params)
    raise ParameterError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class IncrementSample:
    """Observed increments ``y`` over time span ``delta``."""

    y: np.ndarray
    delta: float
    n: int = field(init=False)

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        if y.ndim != 1:
            raise ParameterError("increments must be one-dimensional")
        if not self.delta > 0:
            raise ParameterError("delta must be > 0")
        if not np.all(np.isfinite(y)):
            raise ParameterError("increments must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n", y.size)


def simulate_increments(
    model: LevyModel, n: int, delta: float, rng: np.random.Generator
) -> IncrementSample:
    """Draw ``n`` i.i.d. increments of ``model`` over time span ``delta``.

    Compound Poisson parts are composed exactly from Poisson counts and
    individual jump draws; no time discretization is involved.
    """
    if int(n) != n or n < 1:
        raise ParameterError("n must be a positive integer")
    if not delta > 0:
        raise ParameterError("delta must be > 0")
    n = int(n)
    if model.kind == "gamma":
        y = rng.gamma(shape=model.c * delta, scale=1.0 / model.lam, size=n)
        return IncrementSample(y, delta)

    counts = rng.poisson(model.lam * delta, size=n)
    total = int(counts.sum())
    if model.kind == "bcn":
        jumps = rng.normal(0.0, model.v, size=total)
    else:
        # inverse CDF of Laplace(0, v)
        u = rng.random(total) - 0.5
        a = np.minimum(np.abs(u), 0.5 - 2.0**-54)
        jumps = -model.v * np.sign(u) * np.log1p(-2.0 * a)
    owner = np.repeat(np.arange(n), counts)
    y = np.bincount(owner, weights=jumps, minlength=n)
    if model.sigma > 0:
        y = y + model.sigma * math.sqrt(delta) * rng.standard_normal(n)
    return IncrementSample(y, delta)


def true_density(model: LevyModel, x):
    """Levy density rho(x) of ``model``; vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    if model.kind == "bcn":
        v2 = model.v**2
        out = model.lam * np.exp(-(x**2) / (2 * v2)) / math.sqrt(2 * math.pi * v2)
    elif model.kind == "bcl":
        out = model.lam * np.exp(-np.abs(x) / model.v) / (2 * model.v)
    else:
        pos = x > 0
        safe = np.where(pos, x, 1.0)
        out = np.where(pos, model.c * np.exp(-model.lam * safe) / safe, 0.0)
    return out if out.ndim else float(out)
