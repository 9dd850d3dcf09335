class HilmodError(Exception):
    """Base exception for all Hilmod errors."""

    def __init__(self, message: str, details: str | None = None) -> None:
        self.message = message
        self.details = details
        super().__init__(message)


class ValidationError(HilmodError):
    """Raised when input validation fails (e.g., malformed JSON, bad run parameters)."""

    pass


class DimensionError(ValidationError):
    """Raised when operands disagree on module rank d or spectrum size n."""

    pass


class OrderLimitError(ValidationError):
    """Raised when a moment, cumulant or enumeration order exceeds the supported cap."""

    pass


class HypothesisError(HilmodError):
    """Raised when a mathematical hypothesis of an operation does not hold for the given input."""

    pass


class NotInvertibleError(HypothesisError):
    """Raised when an algebra element or operator is not invertible at some spectrum point."""

    def __init__(self, message: str, details: str | None = None, point: int | None = None) -> None:
        super().__init__(message, details)
        self.point = point


class KernelViolationError(HypothesisError):
    """Raised when a functional does not vanish on the kernel of the reference functional."""

    pass


class NotProportionalError(HypothesisError):
    """Raised when one module vector is not an algebra multiple of another."""

    pass


class EquationViolatedError(HypothesisError):
    """Raised when a rank-one sum identity supplied as input does not hold."""

    pass


class NoWitnessError(HypothesisError):
    """Raised when no single trichotomy case holds across the whole spectrum."""

    pass


class NotRankDecreasingError(HypothesisError):
    """Raised when a preserver maps a rank-one generator to something of pointwise rank >= 2."""

    pass


class InconsistentTypeError(HypothesisError):
    """Raised when a preserver shares neither a common left nor a common right factor."""

    pass


class NotPointwiseProportionalError(HypothesisError):
    """Raised when two maps are not proportional on some evaluation vector."""

    pass


class NoGlobalScalarError(HypothesisError):
    """Raised when per-vector proportionality factors disagree at a spectrum point."""

    pass


class NotRankOnePreservingError(HypothesisError):
    """Raised when some generator image is zero or has pointwise rank >= 2."""

    pass


class GaugeFailureError(HypothesisError):
    """Raised when recovered factors do not reproduce the generator table."""

    pass
