"""Exception hierarchy shared by every VeriBlock module."""


class VeriBlockError(Exception):
    """Base class for all simulator errors."""


# ledger
class EmptyPayload(VeriBlockError):
    pass


class ClockRegression(VeriBlockError):
    pass


class ChainFormatError(VeriBlockError):
    """A chain dump could not be parsed."""


# contracts
class InvalidGeometry(VeriBlockError):
    pass


class UnknownIncident(VeriBlockError):
    pass


class SelfReview(VeriBlockError):
    pass


class InsufficientBalance(VeriBlockError):
    pass


class UnknownScopeTarget(VeriBlockError):
    pass


class UnknownRequest(VeriBlockError):
    pass


class RequestClosed(VeriBlockError):
    """The request already left the Open state."""


class AlreadyFulfilled(RequestClosed):
    pass


class AlreadyRefunded(RequestClosed):
    pass


class WrongProvider(VeriBlockError):
    """Delivery attempted by a provider other than the designated one."""


class NotYetExpired(VeriBlockError):
    pass


class InvalidRecord(VeriBlockError, ValueError):
    pass


# trust
class EventGap(VeriBlockError):
    pass


class EmptyEvidence(VeriBlockError):
    pass


class NoEvidence(VeriBlockError):
    pass


class UnknownScope(VeriBlockError):
    pass


class BadWeights(VeriBlockError, ValueError):
    pass


class UnknownAlgorithm(VeriBlockError, KeyError):
    pass


# sim / cli
class BadStep(VeriBlockError, ValueError):
    pass


class ConfigError(VeriBlockError):
    pass
