"""DNA-base layer: key derivation, XOR-then-map encoding, dummy digits.

The cipher digit stream is turned into bits, XORed with a key derived from
two integers (S, T), and mapped two bits at a time onto the four bases.  The
same (S, T) pair also drives generation of the dummy digits spliced between
ciphertext chunks; both sides recompute them, so any corruption of a dummy
is detectable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import (
    DummyMismatch,
    EmptyChunk,
    InvalidBase,
    InvalidDnaParams,
    OddBitLength,
    TruncatedStream,
)

# All 4! assignments of bit pairs to bases.  Rule y maps pair value i to
# RULES[y][i]; rule 0 is the identity order A,C,G,T.
RULES: tuple[str, ...] = tuple("".join(p) for p in itertools.permutations("ACGT"))

# DK derivation uses double floats; pairs whose value sits essentially on an
# integer boundary could floor differently across platforms, so setup
# rejects them (see floor_stable).
_FLOOR_GUARD = 1e-9


@dataclass(frozen=True)
class DnaParams:
    """S and T drive both key derivation and dummy generation.

    K is the bit-size budget used when sampling S and T at setup time; it
    plays no role in the derivation formulas themselves.
    """

    S: int
    T: int
    K: int = 16

    def __post_init__(self):
        _check_st(self.S, self.T)


@dataclass(frozen=True)
class DnaKey:
    bits: str


def _check_st(S: int, T: int) -> None:
    if T < 2 or S <= T:
        raise InvalidDnaParams(f"need S > T >= 2, got S={S}, T={T}")


def _derivation_value(S: int, T: int) -> float:
    return math.log(S) * T * T + math.log(T) * S * S


def floor_stable(S: int, T: int) -> bool:
    """False when ln(S)*T^2 + ln(T)*S^2 sits within 1e-9 of an integer.

    Such pairs are rejected at setup so that floor() gives the same key on
    every platform.
    """
    v = _derivation_value(S, T)
    return abs(v - round(v)) > _FLOOR_GUARD


def dna_keygen(params: DnaParams) -> DnaKey:
    """DK = binary expansion of floor(ln(S)*T^2 + ln(T)*S^2)."""
    value = math.floor(_derivation_value(params.S, params.T))
    return DnaKey(bits=format(value, "b"))


# --- bit-string <-> base-string ---------------------------------------------

def _xor_cycled(bits: str, key_bits: str) -> str:
    if not bits:
        return ""
    reps = len(bits) // len(key_bits) + 1
    cycled = (key_bits * reps)[: len(bits)]
    return format(int(bits, 2) ^ int(cycled, 2), "0%db" % len(bits))


def _hex_to_pair_table(bases: str) -> dict[int, str]:
    # Each hex digit of the bit string covers two consecutive 2-bit pairs.
    return {ord("0123456789abcdef"[v]): bases[v >> 2] + bases[v & 3] for v in range(16)}


_PAIR_TABLES: dict[str, dict[int, str]] = {}
_BITS_TABLES: dict[str, dict[int, str]] = {}


def _pair_table(bases: str) -> dict[int, str]:
    try:
        return _PAIR_TABLES[bases]
    except KeyError:
        _PAIR_TABLES[bases] = table = _hex_to_pair_table(bases)
        return table


def _bits_table(bases: str) -> dict[int, str]:
    try:
        return _BITS_TABLES[bases]
    except KeyError:
        _BITS_TABLES[bases] = table = {ord(ch): format(i, "02b") for i, ch in enumerate(bases)}
        return table


def dna_encode(bits: str, key: DnaKey, rule: int) -> str:
    """XOR `bits` with the cycled key, then map each 2-bit pair to a base."""
    if len(bits) % 2:
        raise OddBitLength(f"bit string length {len(bits)} is odd")
    if not bits:
        return ""
    if bits.count("0") + bits.count("1") != len(bits):
        raise ValueError("bit string may contain only 0 and 1")
    bases = RULES[_check_rule(rule)]
    z = _xor_cycled(bits, key.bits)
    # Go through hex so the pair->base mapping is one translate() call.
    # Right-pad to a 4-bit boundary; that appends at most one junk base,
    # dropped afterwards.
    pad = (-len(z)) % 4
    if pad:
        z += "0" * pad
    hx = format(int(z, 2), "0%dx" % (len(z) // 4))
    out = hx.translate(_pair_table(bases))
    return out[: len(bits) // 2]


def dna_decode(bases_str: str, key: DnaKey, rule: int) -> str:
    """Inverse of dna_encode: bases back to bit pairs, then XOR the key off."""
    bases = RULES[_check_rule(rule)]
    z = bases_str.translate(_bits_table(bases))
    if len(z) != 2 * len(bases_str):
        for pos, ch in enumerate(bases_str):
            if ch not in bases:
                raise InvalidBase(pos, ch)
    return _xor_cycled(z, key.bits)


def _check_rule(rule: int) -> int:
    if not 0 <= rule < len(RULES):
        raise ValueError(f"rule id must be 0..23, got {rule}")
    return rule


# --- dummy digits ------------------------------------------------------------

@dataclass(frozen=True)
class DummySpec:
    """Everything DumGen derives from a pair of adjacent cipher chunks.

    delta is the effective dummy length: the formula value (lam*S) mod T,
    clamped to the source chunk's length so the substring read is defined.
    len(gamma) == delta always.
    """

    alpha: int
    beta: int
    lam: int
    delta: int
    psi: int
    source: str
    gamma: str


def _dummy_shape(alpha: int, beta: int, S: int, T: int) -> tuple[int, int, int, str]:
    """(lam, delta_raw, psi, source) from chunk widths alone."""
    lam = math.floor(math.sqrt((alpha + beta) ** 2 / (alpha * beta)) + 0.5)
    delta = (lam * S) % T
    psi = 1 + ((lam + (S % (S - T))) % 2)
    source = "right" if lam % 2 else "left"
    return lam, delta, psi, source


def dum_gen(left: str, right: str, S: int, T: int) -> DummySpec:
    """Derive the dummy digits spliced between two adjacent cipher chunks.

    Deterministic in (len(left), len(right), S, T) plus the digits of the
    selected source chunk, so decryption recomputes the identical value.
    """
    _check_st(S, T)
    if not left or not right:
        raise EmptyChunk("dummy generation needs two non-empty chunks")
    alpha, beta = len(left), len(right)
    lam, delta, psi, source = _dummy_shape(alpha, beta, S, T)
    src = right if source == "right" else left
    delta = min(delta, len(src))
    gamma = src[:delta] if psi == 1 else src[len(src) - delta:]
    return DummySpec(alpha=alpha, beta=beta, lam=lam, delta=delta, psi=psi,
                     source=source, gamma=gamma)


def interleave(chunks: list[str], S: int, T: int) -> str:
    """C_1 || G_2 || C_2 || ... || G_n || C_n with G_i = dum_gen(C_{i-1}, C_i)."""
    if not chunks:
        return ""
    parts = [chunks[0]]
    for prev, cur in zip(chunks, chunks[1:]):
        parts.append(dum_gen(prev, cur, S, T).gamma)
        parts.append(cur)
    return "".join(parts)


def dum_discard(stream: str, chunk_width: int, S: int, T: int) -> list[str]:
    """Split an interleaved stream back into its fixed-width chunks.

    Every removed dummy is recomputed from its neighbours and compared; a
    difference raises DummyMismatch, which is the tamper signal this layer
    provides.  A stream that ends mid-chunk or mid-dummy raises
    TruncatedStream.
    """
    _check_st(S, T)
    if chunk_width <= 0:
        raise ValueError("chunk width must be positive")
    if not stream:
        return []
    if len(stream) < chunk_width:
        raise TruncatedStream(
            f"stream length {len(stream)} is shorter than one {chunk_width}-digit chunk")
    w = chunk_width
    # All chunks share one width, so the dummy geometry is the same at every
    # seam and can be computed up front.
    _, delta, _, _ = _dummy_shape(w, w, S, T)
    delta = min(delta, w)
    chunks = [stream[:w]]
    pos = w
    total = len(stream)
    while pos < total:
        if total - pos < delta + w:
            raise TruncatedStream(
                f"stream ends mid-record at position {pos} ({total - pos} digits left, "
                f"need {delta + w})")
        observed = stream[pos : pos + delta]
        nxt = stream[pos + delta : pos + delta + w]
        expected = dum_gen(chunks[-1], nxt, S, T).gamma
        if observed != expected:
            raise DummyMismatch(pos)
        chunks.append(nxt)
        pos += delta + w
    return chunks
