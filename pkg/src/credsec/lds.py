"""Mutable file store for envelopes, one file per (roll, course).

This store deliberately guarantees nothing about integrity; it returns
whatever bytes are on disk.  Detecting corruption is the verifier's job and
repairing it is the ledger's, which is exactly the division of trust the
recovery workflow exercises.
"""

from __future__ import annotations

import os
import re
import threading
from collections import defaultdict
from pathlib import Path

from .errors import NotFound, PersistenceFailure

_KEY_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


def _check_key_part(label: str, value: str) -> str:
    # keys become path components, so keep them boring
    if not _KEY_RE.match(value) or ".." in value:
        raise ValueError(f"{label} {value!r} is not a valid store key component")
    return value


class Lds:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: defaultdict[tuple[str, str], threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def path_for(self, roll: str, course: str) -> Path:
        return self.root / _check_key_part("roll", roll) / (
            _check_key_part("course", course) + ".cred")

    def _key_lock(self, roll: str, course: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[(roll, course)]

    def put(self, roll: str, course: str, data: bytes) -> None:
        """Durable latest-wins write: temp file in the same directory, then
        rename, so a crash leaves the old value or the new one, never a torn
        mix.
        """
        path = self.path_for(roll, course)
        with self._key_lock(roll, course):
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_name(path.name + ".tmp")
                with open(tmp, "wb") as fh:
                    fh.write(data)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp, path)
            except OSError as err:
                raise PersistenceFailure(f"store write for ({roll}, {course}) failed: {err}") from err

    def get(self, roll: str, course: str) -> bytes:
        path = self.path_for(roll, course)
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise NotFound(f"no stored credential for ({roll}, {course})") from None
        except OSError as err:
            raise PersistenceFailure(f"store read for ({roll}, {course}) failed: {err}") from err

    def exists(self, roll: str, course: str) -> bool:
        return self.path_for(roll, course).exists()

    def overwrite_raw(self, roll: str, course: str, data: bytes) -> None:
        """Adversary/test hook: scribble bytes straight into the entry's
        file, no temp-and-rename ceremony, no bookkeeping.
        """
        path = self.path_for(roll, course)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
