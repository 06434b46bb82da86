"""Exceptions raised by the ring-mpc engine."""

from __future__ import annotations

from .const import EXIT_DESYNC, EXIT_ENGINE, EXIT_PARSE, EXIT_TRANSPORT, EXIT_USAGE


class RingMpcError(Exception):
    """Base class for every error the engine raises."""

    exit_code = EXIT_ENGINE
    phase: str | None = None


class ConfigError(RingMpcError):
    """Invalid configuration or command-line usage."""

    exit_code = EXIT_USAGE

    def __init__(self, message: str, key: str | None = None) -> None:
        super().__init__(message)
        self.key = key


class LengthMismatchError(RingMpcError, ValueError):
    """Two bit vectors that must have equal length do not."""


class ShareFileError(RingMpcError):
    """A share file is malformed or has an unsupported version."""


class InsufficientSharesError(RingMpcError):
    """Fewer shares than the reconstruction mode needs."""


class CircuitError(RingMpcError):
    """Base class for circuit problems."""

    exit_code = EXIT_PARSE


class CircuitParseError(CircuitError):
    """A Bristol-fashion file could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        self.line_number = line_number
        self.reason = message
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CircuitHeaderError(CircuitParseError):
    """Malformed header lines."""


class WireRangeError(CircuitParseError):
    """A wire index lies outside the declared wire count."""


class DoubleAssignmentError(CircuitParseError):
    """A wire is assigned more than once."""


class UseBeforeDefineError(CircuitParseError):
    """A gate reads a wire that has not been assigned yet."""


class UnsupportedGateError(CircuitParseError):
    """A gate kind the protocol cannot evaluate."""


class InputLengthError(CircuitError, ValueError):
    """Evaluator inputs do not match the circuit's input wires."""


class TransportError(RingMpcError):
    """Base class for transport failures."""

    exit_code = EXIT_TRANSPORT


class TransportTimeoutError(TransportError):
    """A send or receive did not complete in time."""


class TransportConnectionError(TransportError):
    """The link is closed or could not be established."""


class HandshakeError(TransportError):
    """The ring hello exchange failed."""


class FrameTooLargeError(TransportError):
    """A frame exceeds the configured size cap."""


class FrameDecodeError(TransportError):
    """Bytes on the link do not form a valid frame."""


class ProtocolError(RingMpcError):
    """The parties disagree about the protocol state."""

    exit_code = EXIT_DESYNC


class ProtocolDesyncError(ProtocolError):
    """A received message does not match what the local schedule expects."""


class KeyExchangeError(ProtocolError):
    """The PRF key exchange failed or was attempted twice."""


class PhaseError(ProtocolError):
    """A party tried to move its phase backwards or skip a step."""


class CounterOverflowError(RingMpcError):
    """The 128-bit PRF counter would wrap around."""


class ModelInputError(RingMpcError, ValueError):
    """Invalid parameters for a performance-model calculation."""

    exit_code = EXIT_USAGE


class AssetError(RingMpcError):
    """A circuit asset could not be downloaded or failed its checksum."""
