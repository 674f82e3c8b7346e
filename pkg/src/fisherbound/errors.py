"""Exception hierarchy shared across the package."""


class FisherBoundError(Exception):
    """Base class for all package errors."""


class ParameterError(FisherBoundError, ValueError):
    """theta is outside (or too close to the edge of) the admissible set."""


class DomainError(FisherBoundError, ValueError):
    """A sample lies outside the support of a model or channel."""


class LikelihoodRatioError(FisherBoundError, ValueError):
    """Two densities do not have a finite likelihood-ratio bound."""


class ShapeError(FisherBoundError, ValueError):
    """Alphabets or dimensions of composed objects do not match."""


class ValidationError(FisherBoundError, ValueError):
    pass


class UnsupportedOperationError(FisherBoundError, NotImplementedError):
    """The requested quantity does not exist for this object (e.g. a density
    of a deterministic kernel)."""


class CapabilityError(FisherBoundError, NotImplementedError):
    """No oracle is implemented for this model/channel combination."""


class ConvergenceError(FisherBoundError, RuntimeError):
    def __init__(self, message, gap=None, iterations=None):
        super().__init__(message)
        self.gap = gap
        self.iterations = iterations


class DivergenceInfiniteError(FisherBoundError, ValueError):
    """KL(p||q) is infinite because q does not dominate p."""


class ProtocolError(FisherBoundError, RuntimeError):
    pass
