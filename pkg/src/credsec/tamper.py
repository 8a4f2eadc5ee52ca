"""Fault injection for the stores: the adversary's hands, scripted.

Used by the CLI `tamper` subcommand and by the detection/recovery tests.
Everything here bypasses the public store interfaces on purpose.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from .errors import TargetMissing
from .ledger import block_spans
from .lds import Lds


def flip_bit(data: bytes, bit_index: int) -> bytes:
    """Flip one bit, MSB-first within each byte."""
    byte_i, bit_i = divmod(bit_index, 8)
    if not 0 <= byte_i < len(data):
        raise ValueError(f"bit index {bit_index} outside {len(data)} bytes")
    out = bytearray(data)
    out[byte_i] ^= 0x80 >> bit_i
    return bytes(out)


def flip_byte(data: bytes, byte_index: int, xor: int = 0xFF) -> bytes:
    if not 1 <= xor <= 255:
        raise ValueError("xor mask must be 1..255 so the byte actually changes")
    if not 0 <= byte_index < len(data):
        raise ValueError(f"byte index {byte_index} outside {len(data)} bytes")
    out = bytearray(data)
    out[byte_index] ^= xor
    return bytes(out)


def _apply(data: bytes, bits: Iterable[int], byte_flips: Iterable[int], xor: int) -> bytes:
    for b in bits:
        data = flip_bit(data, b)
    for b in byte_flips:
        data = flip_byte(data, b, xor)
    return data


def tamper_lds(lds: Lds, roll: str, course: str, bits: Sequence[int] = (),
               byte_flips: Sequence[int] = (), xor: int = 0xFF) -> dict:
    """Corrupt a stored envelope in place.  Empty mutation lists are a no-op."""
    path = lds.path_for(roll, course)
    if not path.exists():
        raise TargetMissing(f"no store entry for ({roll}, {course})")
    data = path.read_bytes()
    mutated = _apply(data, bits, byte_flips, xor)
    if mutated != data:
        lds.overwrite_raw(roll, course, mutated)
    return {"target": "lds", "roll": roll, "course": course,
            "bits": list(bits), "bytes": list(byte_flips), "xor": xor,
            "size": len(data), "changed": mutated != data}


def tamper_ledger(chain_path: str | Path, block_index: int, bits: Sequence[int] = (),
                  byte_flips: Sequence[int] = (), xor: int = 0xFF) -> dict:
    """Corrupt one persisted ledger block in place.

    Bit/byte indexes are relative to the block's frame (length prefix, body
    and stored hash all included; any of them is fair game).
    """
    chain_path = Path(chain_path)
    if not chain_path.exists():
        raise TargetMissing(f"no ledger file at {chain_path}")
    spans = block_spans(chain_path)
    if not 0 <= block_index < len(spans):
        raise TargetMissing(f"ledger has {len(spans)} blocks, no index {block_index}")
    offset, length = spans[block_index]
    with open(chain_path, "r+b") as fh:
        fh.seek(offset)
        frame = fh.read(length)
        mutated = _apply(frame, bits, byte_flips, xor)
        if mutated != frame:
            fh.seek(offset)
            fh.write(mutated)
    return {"target": "ledger", "block": block_index, "offset": offset,
            "bits": list(bits), "bytes": list(byte_flips), "xor": xor,
            "size": length, "changed": mutated != frame}
