"""Exception types raised across the package."""


class IsingEchoError(Exception):
    """Base class for all package errors."""


class InvalidConfigError(IsingEchoError, ValueError):
    pass


class InvalidGridError(IsingEchoError, ValueError):
    pass


class DomainError(IsingEchoError, ValueError):
    pass


class PhysicalityError(IsingEchoError, RuntimeError):
    """A state or amplitude left the physical region (signals an upstream bug)."""


class IntegrationError(IsingEchoError, RuntimeError):
    pass


class ResourceError(IsingEchoError, MemoryError):
    pass


class NotFoundError(IsingEchoError, LookupError):
    pass


class AmbiguityError(IsingEchoError, ValueError):
    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)
