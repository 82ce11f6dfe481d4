"""Exception types raised by levyband."""


class LevyBandError(Exception):
    """Base class for all levyband errors."""


class ParameterError(LevyBandError, ValueError):
    """Invalid model, kernel or configuration parameter."""


class CharFnTooSmall(LevyBandError):
    """|ECF| dropped below the division guard on the working frequency range.

    Usually means the bandwidth is too small relative to sqrt(delta).
    """

    def __init__(self, min_abs: float, guard: float, h: float | None = None):
        self.min_abs = min_abs
        self.guard = guard
        self.h = h
        where = f" (h={h:g})" if h is not None else ""
        super().__init__(f"min |ecf| = {min_abs:.3e} <= guard {guard:.1e}{where}")


class QuadratureResidual(LevyBandError):
    """A Fourier inversion that should be real left a large imaginary part."""

    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"imaginary residual {residual:.3e} exceeds {tol:.1e}")


class QuadratureResolution(LevyBandError):
    """Requested evaluation range exceeds what the quadrature grid resolves."""


class ZeroVariance(LevyBandError):
    """The estimated standard deviation vanishes at some (not all) grid points."""
