"""Two-factor credential encryption: RSA over coded digit chunks, dummy
interleaving, then the DNA-base layer.  Also owns the envelope wire format
and the SHA-256 credential hash computed over it.

Encrypt: text -> 2-digit codes -> k-digit chunks -> RSA per chunk (each
zero-padded to the decimal width of N) -> dummies between chunks -> 4 bits
per digit -> XOR/base-map.  Decrypt inverts each step and treats every
parse failure on the way back as evidence of corruption.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from .codec import c2i_decode, c2i_encode
from .dna import DnaKey, dna_decode, dna_encode, dum_discard, interleave
from .errors import (
    BadMagic,
    ChunkTooWide,
    CodeOutOfRange,
    IntegrityError,
    LengthMismatch,
    MessageTooLarge,
    OddLength,
    TruncatedStream,
    UnsupportedVersion,
)
from .rsa import rsa_dec, rsa_enc

VERSION = 1
MAGIC = b"CSEC"
DEFAULT_CHUNK_DIGITS = 300

# magic, version, chunk width k, cipher width D, plaintext digit count,
# payload bit length; big-endian throughout.
_HEADER = struct.Struct(">4sBHHQQ")

_DIGIT_BITS = {ord(d): format(v, "04b") for v, d in enumerate("0123456789")}
# hex nibbles a..f can never appear in a valid digit stream; mapping them to
# None makes translate() drop them, and the length change flags corruption
_NIBBLE_DIGIT = {ord(h): h for h in "0123456789"}
_NIBBLE_DIGIT.update({ord(h): None for h in "abcdef"})

_BASE_BITS = {ord(b): format(v, "02b") for v, b in enumerate("ACGT")}
_PAIR_BASES = {ord("0123456789abcdef"[v]): "ACGT"[v >> 2] + "ACGT"[v & 3] for v in range(16)}


@dataclass(frozen=True)
class CredentialEnvelope:
    """Decode metadata plus the DNA payload, held as an ACGT string."""

    version: int
    chunk_digits: int
    cipher_width: int
    digit_count: int
    bases: str


def digits_to_bits(digits: str) -> str:
    """Four bits per decimal digit, preserving leading zeros."""
    return digits.translate(_DIGIT_BITS)


def bits_to_digits(bits: str) -> str:
    """Inverse of digits_to_bits; nibbles above 9 signal a corrupt stream."""
    if not bits:
        return ""
    if len(bits) % 4:
        raise TruncatedStream(f"bit stream length {len(bits)} is not a nibble multiple")
    hx = format(int(bits, 2), "0%dx" % (len(bits) // 4))
    out = hx.translate(_NIBBLE_DIGIT)
    if len(out) != len(hx):
        bad = next(i for i, ch in enumerate(hx) if ch not in "0123456789")
        raise IntegrityError(f"nibble at digit position {bad} decodes above 9")
    return out


def m2fe_encrypt(m: str, e: int, N: int, dk: DnaKey, rule: int, S: int, T: int,
                 k: int = DEFAULT_CHUNK_DIGITS) -> tuple[CredentialEnvelope, bytes]:
    """Encrypt credential text; returns (envelope, 32-byte envelope hash)."""
    if k <= 0:
        raise ValueError("chunk width must be positive")
    if 10 ** k >= N:
        raise ChunkTooWide(f"k={k} admits values up to 10^{k}-1, not below N")
    D = len(str(N))
    coded = c2i_encode(m)
    chunks = [coded[i : i + k] for i in range(0, len(coded), k)]
    cipher = ["%0*d" % (D, rsa_enc(int(ch), e, N)) for ch in chunks]
    stream = interleave(cipher, S, T)
    bases = dna_encode(digits_to_bits(stream), dk, rule)
    env = CredentialEnvelope(version=VERSION, chunk_digits=k, cipher_width=D,
                             digit_count=len(coded), bases=bases)
    return env, envelope_hash(env)


def m2fe_decrypt(env: CredentialEnvelope, d: int, N: int, dk: DnaKey, rule: int,
                 S: int, T: int) -> str:
    """Invert the pipeline.  Corruption anywhere surfaces as IntegrityError
    (or a subclass); a clean stream that decodes to different text is the
    caller's hash check to catch.
    """
    if env.digit_count == 0:
        if env.bases:
            raise TruncatedStream("payload present but digit_count is zero")
        return ""
    bits = dna_decode(env.bases, dk, rule)
    stream = bits_to_digits(bits)
    cipher_chunks = dum_discard(stream, env.cipher_width, S, T)
    k = env.chunk_digits
    n_expected = -(-env.digit_count // k)
    if len(cipher_chunks) != n_expected:
        raise TruncatedStream(
            f"parsed {len(cipher_chunks)} cipher chunks, header implies {n_expected}")
    last_width = env.digit_count - k * (n_expected - 1)
    pieces = []
    for i, chunk in enumerate(cipher_chunks):
        width = k if i < n_expected - 1 else last_width
        try:
            value = rsa_dec(int(chunk), d, N)
        except MessageTooLarge as err:
            raise IntegrityError(f"cipher chunk {i} is not below the modulus") from err
        piece = "%0*d" % (width, value)
        if len(piece) > width:
            raise IntegrityError(f"chunk {i} decrypts to {len(piece)} digits, expected {width}")
        pieces.append(piece)
    try:
        return c2i_decode("".join(pieces))
    except (OddLength, CodeOutOfRange) as err:
        raise IntegrityError(f"decrypted digit stream does not decode: {err}") from err


def credential_verify(computed: bytes, stored: bytes) -> bool:
    """b = 1 iff the recomputed envelope hash equals the stored one."""
    return computed == stored


# --- wire format -------------------------------------------------------------

def _pack_bases(bases: str) -> tuple[bytes, int]:
    bit_len = 2 * len(bases)
    if not bases:
        return b"", 0
    bits = bases.translate(_BASE_BITS)
    padded = bits + "0" * ((-bit_len) % 8)
    return int(padded, 2).to_bytes(len(padded) // 8, "big"), bit_len


def _unpack_bases(payload: bytes, bit_len: int) -> str:
    if bit_len == 0:
        return ""
    return payload.hex().translate(_PAIR_BASES)[: bit_len // 2]


def envelope_serialize(env: CredentialEnvelope) -> bytes:
    payload, bit_len = _pack_bases(env.bases)
    header = _HEADER.pack(MAGIC, env.version, env.chunk_digits, env.cipher_width,
                          env.digit_count, bit_len)
    return header + payload


def envelope_parse(blob: bytes) -> CredentialEnvelope:
    if len(blob) < _HEADER.size:
        raise LengthMismatch(f"{len(blob)} bytes is shorter than the {_HEADER.size}-byte header")
    magic, version, k, D, digit_count, bit_len = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"format version {version} not supported")
    if bit_len % 2:
        raise LengthMismatch(f"payload bit length {bit_len} is odd")
    if len(blob) - _HEADER.size != (bit_len + 7) // 8:
        raise LengthMismatch(
            f"payload is {len(blob) - _HEADER.size} bytes, header says {(bit_len + 7) // 8}")
    bases = _unpack_bases(blob[_HEADER.size :], bit_len)
    return CredentialEnvelope(version=version, chunk_digits=k, cipher_width=D,
                              digit_count=digit_count, bases=bases)


def envelope_hash(env: CredentialEnvelope) -> bytes:
    return hashlib.sha256(envelope_serialize(env)).digest()
