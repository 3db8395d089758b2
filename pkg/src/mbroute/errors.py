"""Exception hierarchy shared by all modules."""


class MbrError(Exception):
    """Base class for every error raised by the package."""


class ParseError(MbrError):
    """The instance or schedule document is not well-formed."""


class ValidationError(MbrError):
    """A document parsed but violates an invariant.

    ``path`` names the offending field, e.g. ``edges[0].length``.
    """

    def __init__(self, path: str, message: str = ""):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if message else path)


class InvalidRoute(MbrError):
    pass


class DomainError(MbrError, ValueError):
    pass


class InfeasibleTransition(MbrError, ValueError):
    pass


class EmptyGraph(MbrError):
    pass


class InstanceError(MbrError):
    pass


class UnsatisfiableStop(InstanceError):
    pass


class NoRoute(InstanceError):
    """A train's exit cannot be reached from its entry at the requested entry speed."""


class EnumerationLimitExceeded(MbrError):
    pass


class BackendError(MbrError):
    pass


class DecodeError(MbrError):
    pass


class NoPath(MbrError):
    pass


class GenerationFailure(MbrError):
    pass
