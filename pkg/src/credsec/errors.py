"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CredsecError(Exception):
    """Base class for all errors raised by this package."""


# --- character codec ---------------------------------------------------------

class UnknownCharacter(CredsecError):
    """A character outside the 95-character credential alphabet."""

    def __init__(self, position: int, char: str):
        super().__init__(f"character {char!r} at position {position} is not in the alphabet")
        self.position = position
        self.char = char


class OddLength(CredsecError):
    """Digit string has odd length and cannot be split into 2-digit codes."""


class CodeOutOfRange(CredsecError):
    """A 2-digit group outside the valid code range 01..95."""

    def __init__(self, group: int, pair: str):
        super().__init__(f"code group {pair!r} at index {group} is outside 01..95")
        self.group = group
        self.pair = pair


# --- RSA ---------------------------------------------------------------------

class MessageTooLarge(CredsecError):
    """Plaintext or ciphertext integer is not below the modulus."""


# --- DNA layer ---------------------------------------------------------------

class InvalidDnaParams(CredsecError):
    """Dummy-generation parameters violate S > T >= 2."""


class OddBitLength(CredsecError):
    """Bit string cannot be split into 2-bit groups."""


class InvalidBase(CredsecError):
    """A symbol outside the A/C/G/T alphabet."""

    def __init__(self, position: int, char: str):
        super().__init__(f"invalid base {char!r} at position {position}")
        self.position = position
        self.char = char


class EmptyChunk(CredsecError):
    """Dummy generation requires both neighbouring chunks to be non-empty."""


# --- pipeline integrity ------------------------------------------------------

class IntegrityError(CredsecError):
    """The cipher stream is corrupt: decryption cannot proceed faithfully."""


class DummyMismatch(IntegrityError):
    """Removed dummy digits differ from the recomputed ones (tamper signal)."""

    def __init__(self, position: int):
        super().__init__(f"dummy digits at stream position {position} do not match")
        self.position = position


class TruncatedStream(IntegrityError):
    """The interleaved digit stream ends mid-chunk or mid-dummy."""


class ChunkTooWide(CredsecError):
    """Chunk width k admits values >= N; chunks would not round-trip RSA."""


# --- envelope format ---------------------------------------------------------

class EnvelopeError(CredsecError):
    """Malformed serialized envelope."""


class BadMagic(EnvelopeError):
    pass


class UnsupportedVersion(EnvelopeError):
    pass


class LengthMismatch(EnvelopeError):
    pass


# --- stores and ledger -------------------------------------------------------

class NotFound(CredsecError):
    """No value stored under the requested key."""


class PersistenceFailure(CredsecError):
    """A durable write could not be completed."""


class RecordHashMismatch(CredsecError):
    """Record submitted to the ledger whose hash does not match its bytes."""


# --- accounts and sessions ---------------------------------------------------

class AuthFailed(CredsecError):
    """Uniform authentication failure; carries no account-existence signal."""

    def __init__(self, message: str = "authentication failed"):
        super().__init__(message)


class Forbidden(CredsecError):
    """Authenticated principal is not allowed to access this resource."""


class DuplicateInstructor(CredsecError):
    pass


class DuplicateStudent(CredsecError):
    pass


class HashMismatch(CredsecError):
    """Uploaded credential hash does not match the uploaded bytes."""


# --- tamper harness ----------------------------------------------------------

class TargetMissing(CredsecError):
    """The store entry or ledger block targeted for mutation does not exist."""
