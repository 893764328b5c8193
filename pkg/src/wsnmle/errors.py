"""Exception types shared across the package."""


class WsnMleError(Exception):
    """Base class for all package errors."""


class GraphError(WsnMleError):
    """Base class for topology construction errors."""


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class OutOfRange(GraphError):
    pass


class Disconnected(GraphError):
    pass


class RetriesExhausted(GraphError):
    """Random graph generation failed to produce a connected graph."""


class ModelError(WsnMleError):
    """Base class for model assembly and estimation errors."""


class SingularCovariance(ModelError):
    """A noise covariance has a zero diagonal entry."""


class DimensionMismatch(ModelError):
    pass


class ZeroInformation(ModelError):
    """Total Fisher information is zero; the estimate is undefined."""


class ZeroTransmissionNoise(ModelError):
    """Transmission noise variance must be positive for gain optimization."""


class SingularR(ModelError):
    """The bordered covariance matrix could not be inverted."""


class NotConverged(WsnMleError):
    """Iteration cap reached before the tolerance was met.

    Carries the final disagreement in :attr:`disagreement`.
    """

    def __init__(self, message: str, disagreement: float):
        super().__init__(message)
        self.disagreement = disagreement
