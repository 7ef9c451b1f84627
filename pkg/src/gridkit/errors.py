"""Exception hierarchy shared by all gridkit modules."""


class GridKitError(Exception):
    """Base class for all errors raised by gridkit."""


class DomainError(GridKitError, ValueError):
    """An argument is outside the documented domain of an operation."""


class CapabilityError(GridKitError):
    """The request is valid but not supported by this implementation."""


class ConstructionError(GridKitError):
    """Grid construction failed (bad connectivity, degenerate cells, ...)."""


class NumericError(GridKitError, ArithmeticError):
    """A numeric operation failed, e.g. inverting a singular geometry map."""


class InvalidationError(GridKitError):
    """A handle (entity, mapper) outlived a grid modification."""


class StateError(GridKitError):
    """An object was used in the wrong state, e.g. an unbound local function."""


class ShapeError(GridKitError):
    """A user callable returned data of an unexpected shape."""


class IllegalPartitionError(GridKitError):
    """The requested partition pair cannot be used for communication."""


class ConvergenceError(GridKitError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class FactoryLookupError(GridKitError, KeyError):
    """No factory is registered under the requested name."""


class ProtocolError(GridKitError):
    """A malformed or out-of-contract protocol message was received."""
