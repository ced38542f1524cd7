"""Exception hierarchy shared by all modules."""


class IndefRFError(Exception):
    """Base class for every error raised by this package."""


class DomainError(IndefRFError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NonConvergent(IndefRFError):
    """Adaptive quadrature stopped before reaching its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InfiniteMass(IndefRFError):
    """Total variation of a measure is not finite (or exceeds the ceiling)."""


class DegenerateCalibration(IndefRFError):
    """Signed mass too close to zero to infer a normalization constant."""


class UnsupportedSpectrum(IndefRFError):
    """No closed-form spectral density is shipped for the kernel family."""


class OrderOverflow(IndefRFError):
    """Bessel order required by a spectrum exceeds the validated range."""


class EnvelopeBreach(IndefRFError):
    """A rejection proposal exceeded the envelope height."""


class RankDeficient(IndefRFError):
    """Random orthogonal factorization degenerated."""


class ZeroSurrogate(IndefRFError):
    """Importance-sampling surrogate density underflowed."""


class EmptyPlus(IndefRFError):
    """Both Jordan components have zero mass (the zero kernel)."""


class DimensionMismatch(IndefRFError, ValueError):
    """Input dimension does not match the feature map."""


class DataNotNormalized(IndefRFError, ValueError):
    """Spherical kernel received rows that are not unit norm."""


class ParseError(IndefRFError, ValueError):
    """Malformed LIBSVM input."""

    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ShapeMismatch(IndefRFError, ValueError):
    """Matrices of different shape were compared."""


class ZeroDenominator(IndefRFError, ZeroDivisionError):
    """Reference matrix has zero Frobenius norm."""


class NonSymmetric(IndefRFError, ValueError):
    """Matrix is not symmetric within tolerance."""


class NonBinaryLabels(IndefRFError, ValueError):
    """Binary classifier received labels outside {-1, +1}."""
