"""Exception hierarchy shared by every layer of the package."""


class SPSSRError(Exception):
    """Base class for all errors raised by this package."""


# field
class MismatchedField(SPSSRError, ValueError):
    pass


class NotPrime(SPSSRError, ValueError):
    pass


class OutOfRange(SPSSRError, ValueError):
    pass


# parameters and families
class InvalidServerCount(SPSSRError, ValueError):
    pass


class InvalidDemandSize(SPSSRError, ValueError):
    pass


class InvalidFamily(SPSSRError, ValueError):
    pass


class DegenerateInstance(SPSSRError, ValueError):
    """Normalization left fewer than two demand messages.

    The partial normalization log is kept on ``self.log`` so callers can show
    which indices were dropped or extracted before the instance collapsed.
    """

    def __init__(self, message: str, log=None):
        super().__init__(message)
        self.log = log


class DemandNotInFamily(SPSSRError, ValueError):
    pass


class WrongDemandSize(SPSSRError, ValueError):
    pass


# scheme
class OutOfRangeServer(SPSSRError, ValueError):
    pass


class ExhaustedRandomness(SPSSRError):
    pass


class ShapeMismatch(SPSSRError, ValueError):
    pass


# verification
class BudgetExceeded(SPSSRError):
    pass


# harness
class TransportError(SPSSRError):
    """A server could not be reached or answered with garbage.

    ``server`` is the 1-based index of the offending server, when known.
    """

    def __init__(self, message: str, server: int | None = None):
        super().__init__(message)
        self.server = server


class BindError(SPSSRError):
    pass


class FrameError(SPSSRError, ValueError):
    """A wire frame or payload failed to decode.

    ``code`` is the ERROR-frame code a server should answer with.
    """

    def __init__(self, message: str, code: int = 0x0002):
        super().__init__(message)
        self.code = code


class RemoteError(TransportError):
    """The server answered a QUERY with an ERROR frame."""

    def __init__(self, code: int, message: str, server: int | None = None):
        where = f"server {server}: " if server is not None else ""
        super().__init__(f"{where}error 0x{code:04x}: {message}", server)
        self.code = code
        self.remote_message = message
