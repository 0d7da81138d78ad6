"""Exception types shared across the toolkit."""
from __future__ import annotations


class RatbenchError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(RatbenchError, ValueError):
    """A record or parameter set violates a domain invariant."""


class PayloadExceedsMax(ValidationError):
    def __init__(self, technology, payload_bytes: int, max_bytes: int):
        self.technology = technology
        self.payload_bytes = payload_bytes
        self.max_bytes = max_bytes
        super().__init__(
            f"{technology} payload {payload_bytes} B exceeds maximum {max_bytes} B"
        )


class NegativeEnergy(ValidationError):
    pass


class NegativeSpeed(ValidationError):
    pass


class RxWithoutDelivery(ValidationError):
    pass


class TagMismatch(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class ParseError(RatbenchError, ValueError):
    """Input text could not be decoded into a domain object."""


class LdroRequired(ValidationError):
    """Low-data-rate optimisation must be enabled for long symbol times."""


class BadCeLevel(ValidationError):
    pass


class BadSpreadingFactor(ValidationError):
    pass


class BadProbability(ValidationError):
    pass


class UnknownTxPower(RatbenchError, KeyError):
    """Requested transmit power is outside the power lookup domain."""


class TooFewSamples(ValidationError):
    pass


class NonPositiveEnergy(ValidationError):
    pass


class UnknownField(RatbenchError, KeyError):
    """Requested record field is not part of the exportable field set."""


class Unsupported(RatbenchError):
    """Technology cannot carry the requested payload."""

    def __init__(self, technology, payload_bytes: int, reason: str = ""):
        self.technology = technology
        self.payload_bytes = payload_bytes
        msg = f"{technology} cannot carry {payload_bytes} B"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class TechnologyUnavailable(RatbenchError):
    """No usable delivery estimate for this technology in this context."""


class NoFeasibleTechnology(RatbenchError):
    """No technology satisfies the message and policy constraints."""


class ConfigInvalid(RatbenchError, ValueError):
    pass
