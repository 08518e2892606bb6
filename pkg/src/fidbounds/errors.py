"""Exception types raised by fidbounds.

Every domain error carries the name of the violated invariant and, where it
makes sense, the measured violation so callers (and the CLI) can report it.
"""


class FidboundsError(Exception):
    """Base class for all package errors."""

    invariant = "unspecified"

    def __init__(self, message="", violation=None):
        self.violation = violation
        if not message:
            message = self.invariant
        if violation is not None:
            message = f"{message} (measured violation: {violation:.6g})"
        super().__init__(f"{type(self).__name__}: {message}")


class ValidationError(FidboundsError, ValueError):
    """Input failed a domain check. The CLI maps these to exit code 2."""


class NonHermitianInput(ValidationError):
    invariant = "matrix must equal its conjugate transpose"


class TraceNotOne(ValidationError):
    invariant = "trace must equal 1"


class NotPositiveSemidefinite(ValidationError):
    invariant = "smallest eigenvalue must be nonnegative"


class DimensionMismatch(ValidationError):
    invariant = "operands must have equal dimensions"


class IndexOutOfRange(ValidationError):
    invariant = "index outside the admissible range"


class ParameterOutOfRange(ValidationError):
    invariant = "parameter outside its admissible range"


class NotAProbabilityVector(ValidationError):
    invariant = "entries must be nonnegative and sum to 1"


class ProbabilityOutOfRange(ValidationError):
    invariant = "probability must lie in [0, 1]"


class RankTooHigh(ValidationError):
    invariant = "numerical rank of the product exceeds 3"


class SingularState(ValidationError):
    invariant = "state must be invertible (condition number below guard)"


class NotInBall(ValidationError):
    invariant = "operator must satisfy tr H = 1 and tr H^2 <= 1"


class WrongDimension(ValidationError):
    invariant = "operation is defined for a specific dimension only"


class NotPowerOfTwoDimension(ValidationError):
    invariant = "dimension must be a power of two"


class OddDimension(ValidationError):
    invariant = "dimension must be even"


class InvalidPermutation(ValidationError):
    invariant = "permutation outside the admissible set"


class UnknownMetric(ValidationError):
    invariant = "metric identifier not recognised"


class UnknownSuite(ValidationError):
    invariant = "suite identifier not recognised"


class ConvergenceFailure(FidboundsError, ArithmeticError):
    invariant = "eigensolver did not converge"


class NumericalInconsistency(FidboundsError, ArithmeticError):
    invariant = "analytically nonnegative quantity came out negative"
