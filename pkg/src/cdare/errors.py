"""Exception and warning types shared across the package."""


class CdareError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrix(CdareError):
    """A linear solve hit a pivot below the singularity floor."""


class EigenFailure(CdareError):
    """The dense eigensolver did not converge."""


class NotHermitian(CdareError):
    """An operand required to be Hermitian is not, within tolerance."""


class NotPositiveDefinite(CdareError):
    """A matrix required to be Hermitian positive definite is not."""


class SpectralRadiusTooLarge(CdareError):
    """The contraction condition rho < 1 fails, so no solution exists."""


class NotWellPosed(CdareError):
    """An iteration step was not well defined (resolvent factor singular).

    ``step`` is the semigroup index (or iteration count) at which the
    breakdown occurred; ``trace`` optionally carries the partial history.
    """

    def __init__(self, step, message="iteration not well posed", trace=None):
        super().__init__(f"{message} at step {step}")
        self.step = step
        self.trace = trace


class SingularA(CdareError):
    """The coefficient matrix A is singular; no negative definite solution."""


class ValidationFailed(CdareError):
    """A computed quantity failed its a-posteriori residual check.

    ``residual`` carries the offending residual value.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class OutOfRange(CdareError, ValueError):
    """A scalar parameter is outside its admissible interval."""


class InsufficientTrace(CdareError):
    """An iteration trace is too short or not monotone enough to analyze."""


class RetryExhausted(CdareError):
    """Rejection sampling gave up after the configured number of attempts."""


class IllConditionedWarning(UserWarning):
    """A linear system had an estimated condition number above 1/u.

    Emitted as a warning, never an error: near-critical problems with
    rho close to 1 are a headline use case and must not abort spuriously.
    """
