"""Kernels defined through compactly supported Fourier transforms.

A kernel W is specified by ``phi_W``, which is even, equals 1 at the origin
and vanishes outside [-1, 1].  W itself is recovered by numerical Fourier
inversion ``W(x) = (1/2pi) int exp(-iux) phi_W(u) du``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, QuadratureResidual

DEFAULT_N_INV = 16385


@dataclass(frozen=True)
class KernelSpec:
    """``flattop`` (parameters b, c) or ``poly`` (integer exponent k)."""

    kind: str = "flattop"
    b: float = 1.0
    c: float = 0.05
    k: int = 6

    def __post_init__(self):
        if self.kind == "flattop":
            if not (self.b > 0 and 0 < self.c < 1):
                raise ParameterError("flat-top kernel needs b > 0 and 0 < c < 1")
        elif self.kind == "poly":
            if int(self.k) != self.k or self.k < 5:
                raise ParameterError("poly kernel needs an integer k >= 5")
        else:
            raise ParameterError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def flattop(cls, b: float = 1.0, c: float = 0.05) -> "KernelSpec":
        return cls("flattop", b=b, c=c)

    @classmethod
    def poly(cls, k: int = 6) -> "KernelSpec":
        return cls("poly", k=int(k))

    def label(self) -> str:
        if self.kind == "flattop":
            return f"flattop:b={self.b:g},c={self.c:g}"
        return f"poly:k={self.k}"

    def __str__(self) -> str:
        return self.label()


DEFAULT_KERNEL = KernelSpec.flattop(1.0, 0.05)


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``flattop:b=1,c=0.05`` or ``poly:k=6``."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ParameterError(f"malformed kernel parameter {item!r}")
        try:
            params[key.strip().lower()] = float(value)
        except ValueError:
            raise ParameterError(f"non-numeric value in {item!r}") from None
    if kind == "flattop":
        if set(params) - {"b", "c"}:
            raise ParameterError("flattop kernel accepts only b and c")
        return KernelSpec.flattop(params.get("b", 1.0), params.get("c", 0.05))
    if kind == "poly":
        if set(params) - {"k"}:
            raise ParameterError("poly kernel accepts only k")
        k = params.get("k", 6)
        if k != int(k):
            raise ParameterError("poly kernel needs an integer k")
        return KernelSpec.poly(int(k))
    raise ParameterError(f"unknown kernel kind {kind!r}")


def phi_w(spec: KernelSpec, u):
    """Fourier transform of the kernel, vectorized over ``u``."""
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    out = np.zeros_like(a)
    if spec.kind == "poly":
        inside = a < 1
        out[inside] = (1 - a[inside] ** 2) ** spec.k
    else:
        b, c = spec.b, spec.c
        out[a <= c] = 1.0
        mid = (a > c) & (a < 1)
        am = a[mid]
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            out[mid] = np.exp(-b * np.exp(-b / (am - c) ** 2) / (am - 1) ** 2)
    return out if out.ndim else float(out)


def kernel_w(spec: KernelSpec, x, n_inv: int = DEFAULT_N_INV, tol: float = 1e-10):
    """W(x) by composite trapezoid over [-1, 1] with ``n_inv`` nodes.

    Raises QuadratureResidual if the imaginary part of the inversion exceeds
    ``tol``; that only happens when the grid cannot resolve exp(-iux).
    """
    if n_inv < 3:
        raise ParameterError("n_inv must be >= 3")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.linspace(-1.0, 1.0, n_inv)
    du = u[1] - u[0]
    w = phi_w(spec, u) * du
    w[[0, -1]] *= 0.5
    out = np.empty(x.size, dtype=complex)
    for lo in range(0, x.size, 512):
        out[lo:lo + 512] = np.exp(-1j * np.outer(x[lo:lo + 512], u)) @ w
    out /= 2 * math.pi
    resid = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if resid > tol:
        raise QuadratureResidual(resid, tol)
    return out.real if out.size > 1 else float(out.real[0])


@dataclass(frozen=True)
class KernelLookup:
    """W tabulated on a uniform grid over [-span, span], linearly interpolated."""

    spec: KernelSpec
    x: np.ndarray
    w: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.x, self.w, left=0.0, right=0.0)


def kernel_lookup(spec: KernelSpec = DEFAULT_KERNEL, span: float = 400.0,
                  n_nodes: int = 200_001) -> KernelLookup:
    """Tabulate W on ``n_nodes`` points over [-span, span] with one FFT.

    The frequency step is tied to the table spacing (du * dx * N = 2pi);
    the implied period N * dx is at least 2.5 * (2 * span), well past the
    decay of W for both kernel families.
    """
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise ParameterError("n_nodes must be odd and >= 3")
    m = (n_nodes - 1) // 2
    dx = span / m
    N = 1 << int(math.ceil(math.log2(5 * n_nodes)))
    du = 2 * math.pi / (N * dx)
    ku = int(math.floor(1.0 / du))
    k = np.arange(-ku, ku + 1)
    f = np.zeros(N, dtype=complex)
    f[k % N] = phi_w(spec, k * du)
    # W(j dx) = (du / 2pi) sum_k phi(k du) exp(-i k j du dx)
    vals = np.fft.fft(f) * (du / (2 * math.pi))
    j = np.arange(-m, m + 1)
    w = vals[j % N].real
    return KernelLookup(spec, dx * j.astype(float), w)


def epanechnikov(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1, 0.75 * (1 - x * x), 0.0)
