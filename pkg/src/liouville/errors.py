"""Exception hierarchy shared across the package."""


class LiouvilleError(Exception):
    """Base class for every error raised by this package."""


class GridMismatchError(LiouvilleError):
    """Two grid functions with different resolutions were combined."""


class ConditionError(LiouvilleError):
    """A perturbation profile violates the monotone-decay condition."""


class RangeError(LiouvilleError):
    """An accumulated log-impedance left the representable range."""


class IntegrationError(LiouvilleError):
    """A shooting integration overflowed or produced non-finite values."""


class BracketError(LiouvilleError):
    """Eigenvalue bracketing failed; carries the offending interval data."""


class DegenerateEigenfunctionError(LiouvilleError):
    """Endpoint data of a computed eigenfunction vanished identically."""


class PoleCollisionError(LiouvilleError):
    """A product-formula evaluation point collided with a pole or zero."""


class InversionError(LiouvilleError):
    """Newton inversion of the transform failed to converge.

    The ``residuals`` attribute holds the per-iteration residual norms
    observed before giving up.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class TargetError(LiouvilleError):
    """A spectral fit target is inadmissible or out of supported range."""


class FitError(LiouvilleError):
    """Gauss-Newton spectral fitting stagnated before reaching tolerance.

    The ``residuals`` attribute holds the per-iteration residual norms.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []
