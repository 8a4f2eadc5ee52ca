"""Append-only hash-linked ledger holding (envelope, hash) records.

Single node, no consensus: the guarantee here is tamper evidence, not
distributed agreement.  Blocks are persisted to one append-only binary file;
a JSON sidecar mirrors offsets and the latest-record index for external
tooling.  verify() always re-reads the file from disk, so out-of-band
mutations (the threat model's forging adversary, or the tamper harness) are
judged against what is actually stored.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import NotFound, PersistenceFailure, RecordHashMismatch

GENESIS_PREV = b"\x00" * 32

_BLOCK_HEAD = struct.Struct(">QQ32sI")  # index, timestamp, prev_hash, record count
_U16 = struct.Struct(">H")
_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")


@dataclass(frozen=True)
class LedgerRecord:
    roll: str
    course: str
    envelope_bytes: bytes
    credential_hash: bytes
    uploaded_by: str


@dataclass(frozen=True)
class Block:
    index: int
    timestamp: int
    prev_hash: bytes
    records: tuple[LedgerRecord, ...]
    block_hash: bytes


def make_record(roll: str, course: str, envelope_bytes: bytes, uploaded_by: str) -> LedgerRecord:
    return LedgerRecord(roll=roll, course=course, envelope_bytes=envelope_bytes,
                        credential_hash=hashlib.sha256(envelope_bytes).digest(),
                        uploaded_by=uploaded_by)


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError("string field longer than 65535 bytes")
    return _U16.pack(len(raw)) + raw


class _Reader:
    """Cursor over a bytes buffer; short reads raise ValueError."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated block body")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]


def block_body(index: int, timestamp: int, prev_hash: bytes,
               records: tuple[LedgerRecord, ...]) -> bytes:
    """Canonical length-prefixed serialization; the hash preimage."""
    parts = [_BLOCK_HEAD.pack(index, timestamp, prev_hash, len(records))]
    for rec in records:
        parts.append(_pack_str(rec.roll))
        parts.append(_pack_str(rec.course))
        parts.append(_pack_str(rec.uploaded_by))
        parts.append(rec.credential_hash)
        parts.append(_U64.pack(len(rec.envelope_bytes)))
        parts.append(rec.envelope_bytes)
    return b"".join(parts)


def _parse_body(body: bytes) -> Block:
    rd = _Reader(body)
    index, timestamp, prev_hash, count = _BLOCK_HEAD.unpack(rd.take(_BLOCK_HEAD.size))
    records = []
    for _ in range(count):
        roll = rd.take(rd.u16()).decode("utf-8")
        course = rd.take(rd.u16()).decode("utf-8")
        uploaded_by = rd.take(rd.u16()).decode("utf-8")
        credential_hash = rd.take(32)
        envelope = rd.take(rd.u64())
        records.append(LedgerRecord(roll, course, envelope, credential_hash, uploaded_by))
    if rd.pos != len(body):
        raise ValueError("trailing bytes after last record")
    return Block(index=index, timestamp=timestamp, prev_hash=prev_hash,
                 records=tuple(records),
                 block_hash=hashlib.sha256(body).digest())


class Ledger:
    """File-backed chain.  Appends serialize through one lock; reads hit the
    in-memory copy, except verify(), which goes to disk on purpose.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.sidecar = self.path.with_suffix(self.path.suffix + ".idx.json")
        self._lock = threading.Lock()
        self._blocks: list[Block] = []
        self._offsets: list[int] = []
        # latest (block, record position) per (roll, course)
        self._latest: dict[tuple[str, str], tuple[int, int]] = {}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.path.exists():
            self._load()

    # -- construction helpers -------------------------------------------------

    def _load(self) -> None:
        data = self.path.read_bytes()
        pos = 0
        while pos < len(data):
            if pos + 4 > len(data):
                raise PersistenceFailure(f"ledger file truncated at offset {pos}")
            (body_len,) = _U32.unpack_from(data, pos)
            end = pos + 4 + body_len + 32
            if end > len(data):
                raise PersistenceFailure(f"ledger file truncated at offset {pos}")
            body = data[pos + 4 : pos + 4 + body_len]
            try:
                block = _parse_body(body)
            except ValueError as err:
                raise PersistenceFailure(f"unreadable block at offset {pos}: {err}") from err
            self._offsets.append(pos)
            self._blocks.append(block)
            for ri, rec in enumerate(block.records):
                self._latest[(rec.roll, rec.course)] = (block.index, ri)
            pos = end
        self._write_sidecar()

    def _write_sidecar(self) -> None:
        payload = {
            "file_size": self.path.stat().st_size if self.path.exists() else 0,
            "offsets": self._offsets,
            "latest": {f"{r}\t{c}": list(v) for (r, c), v in self._latest.items()},
        }
        tmp = self.sidecar.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=0, sort_keys=True))
        os.replace(tmp, self.sidecar)

    # -- public API -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._blocks)

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(self._blocks)

    def append(self, records: list[LedgerRecord]) -> Block:
        """Persist a new block; the returned block is already durable."""
        for rec in records:
            if hashlib.sha256(rec.envelope_bytes).digest() != rec.credential_hash:
                raise RecordHashMismatch(
                    f"record ({rec.roll}, {rec.course}) hash does not match its bytes")
        with self._lock:
            index = len(self._blocks)
            prev = self._blocks[-1].block_hash if self._blocks else GENESIS_PREV
            body = block_body(index, int(time.time()), prev, tuple(records))
            block = _parse_body(body)
            frame = _U32.pack(len(body)) + body + block.block_hash
            offset = self.path.stat().st_size if self.path.exists() else 0
            try:
                with open(self.path, "ab") as fh:
                    fh.write(frame)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as err:
                raise PersistenceFailure(f"ledger append failed: {err}") from err
            self._offsets.append(offset)
            self._blocks.append(block)
            for ri, rec in enumerate(block.records):
                self._latest[(rec.roll, rec.course)] = (index, ri)
            self._write_sidecar()
            return block

    def latest(self, roll: str, course: str) -> LedgerRecord:
        try:
            bi, ri = self._latest[(roll, course)]
        except KeyError:
            raise NotFound(f"no ledger record for ({roll}, {course})") from None
        return self._blocks[bi].records[ri]

    def verify(self) -> tuple[bool, int | None]:
        """Re-read the file and check every hash and link.

        Returns (True, None) for an intact chain, else (False, i) with i the
        lowest block at which the recorded state stops being self-consistent.
        """
        try:
            data = self.path.read_bytes()
        except FileNotFoundError:
            data = b""
        pos = 0
        index = 0
        prev_recomputed: bytes | None = None
        while pos < len(data):
            if pos + 4 > len(data):
                return False, index
            (body_len,) = _U32.unpack_from(data, pos)
            end = pos + 4 + body_len + 32
            if end > len(data):
                return False, index
            body = data[pos + 4 : pos + 4 + body_len]
            stored_hash = data[pos + 4 + body_len : end]
            recomputed = hashlib.sha256(body).digest()
            if recomputed != stored_hash:
                return False, index
            try:
                block = _parse_body(body)
            except ValueError:
                return False, index
            if block.index != index:
                return False, index
            expected_prev = prev_recomputed if prev_recomputed is not None else GENESIS_PREV
            if block.prev_hash != expected_prev:
                return False, index
            for rec in block.records:
                if hashlib.sha256(rec.envelope_bytes).digest() != rec.credential_hash:
                    return False, index
            prev_recomputed = recomputed
            pos = end
            index += 1
        return True, None

    def to_json(self) -> list[dict]:
        """Chain as JSON-ready dicts (envelopes as hex) for the audit dump."""
        out = []
        for block in self._blocks:
            out.append({
                "index": block.index,
                "timestamp": block.timestamp,
                "prev_hash": block.prev_hash.hex(),
                "block_hash": block.block_hash.hex(),
                "records": [
                    {
                        "roll": r.roll,
                        "course": r.course,
                        "uploaded_by": r.uploaded_by,
                        "credential_hash": r.credential_hash.hex(),
                        "envelope_bytes": len(r.envelope_bytes),
                    }
                    for r in block.records
                ],
            })
        return out


def block_spans(path: str | Path) -> list[tuple[int, int]]:
    """(offset, length) of each framed block in the chain file.

    Maintenance/test helper for the tamper harness; not part of the ledger's
    public mutation-free interface.
    """
    data = Path(path).read_bytes()
    spans = []
    pos = 0
    while pos + 4 <= len(data):
        (body_len,) = _U32.unpack_from(data, pos)
        end = min(pos + 4 + body_len + 32, len(data))
        spans.append((pos, end - pos))
        pos = end
    return spans
