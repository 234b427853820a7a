"""Exception and warning types shared across the package."""


class StaircaseError(Exception):
    """Base class for all package errors."""


class DomainError(StaircaseError, ValueError):
    """A model parameter violates an invariant."""

    def __init__(self, invariant, message=""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)


class EndpointsTooHigh(DomainError):
    def __init__(self, message=""):
        super().__init__("EndpointsTooHigh", message)


class StepIndexError(StaircaseError, IndexError):
    """Step or walker index out of range."""


class InvalidConfig(StaircaseError, ValueError):
    """A path configuration breaks ordering, monotonicity or boundary rules."""


class DegenerateBeta(StaircaseError, ValueError):
    """The betas are not pairwise distinct where distinctness is required."""


class NoConvergence(StaircaseError, RuntimeError):
    """Adaptive quadrature hit its node cap before reaching tolerance."""

    def __init__(self, message, value=None, err_estimate=None):
        super().__init__(message)
        self.value = value
        self.err_estimate = err_estimate


class SingularGramm(StaircaseError, ArithmeticError):
    """The Gramm matrix could not be inverted reliably."""


class GammaOutOfRange(StaircaseError, ValueError):
    """A gamma parameter lies outside the supported range (0, 1)."""


class ImaginaryResidue(StaircaseError, ArithmeticError):
    """A quantity that should be real came out with a sizeable imaginary part."""


class SingularTerm(StaircaseError, ArithmeticError):
    """A closed-form term has a vanishing denominator."""


class DuplicatePoints(StaircaseError, ValueError):
    """A correlation query repeats a space-time point."""


class ZeroGauge(StaircaseError, ValueError):
    """A gauge factor vanished."""


class StateSpaceTooLarge(StaircaseError, MemoryError):
    """The exact transfer-matrix state space is too big to enumerate."""


class EndpointsNotPacked(StaircaseError, ValueError):
    """End points must be 0..N-1 for the tiling picture."""


class InconsistentTiling(StaircaseError, ValueError):
    """A lozenge set does not tile the staircase domain."""


class ConditionWarning(UserWarning):
    """Estimated relative error of a numerical result exceeds the threshold."""
