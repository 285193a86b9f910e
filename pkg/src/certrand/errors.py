"""Exception hierarchy shared by every module."""


class CertRandError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(CertRandError, ValueError):
    pass


class CapExceeded(CertRandError, ValueError):
    pass


class EmptyBatch(CertRandError, ValueError):
    pass


class ClockViolation(CertRandError, ValueError):
    pass


class IncompleteTranscript(CertRandError, ValueError):
    pass


class InsufficientEntropy(CertRandError):
    pass


class SessionAborted(CertRandError):
    def __init__(self, round_index: int, cause: str = ""):
        super().__init__(f"session aborted at round {round_index}: {cause}")
        self.round_index = round_index
        self.cause = cause


class Abort(CertRandError):
    """Coin flip abort; names the offending party."""

    REASONS = ("missing", "mismatch", "timeout")

    def __init__(self, party: str, reason: str):
        if reason not in self.REASONS:
            raise ValueError(f"unknown abort reason {reason!r}")
        super().__init__(f"party {party!r} aborted the coin flip: {reason}")
        self.party = party
        self.reason = reason


class RangeError(CertRandError, ValueError):
    pass


class QuorumFailure(CertRandError):
    pass


class SeedChainViolation(CertRandError):
    pass


class TrapdoorMismatch(CertRandError, ValueError):
    pass


class ImmunizationInconclusive(CertRandError):
    pass


class DuplicateBid(CertRandError, ValueError):
    pass


class DecodeError(CertRandError, ValueError):
    """Malformed canonical encoding (transcripts, pulses, messages)."""


# transport
class TransportError(CertRandError):
    pass


class ProtocolError(TransportError):
    pass


class CorruptFrame(TransportError):
    pass


class Oversize(TransportError):
    pass


class NeedMoreBytes(TransportError):
    pass


class Timeout(TransportError):
    pass


class Disconnected(TransportError):
    pass


class ConfigError(CertRandError, ValueError):
    pass
