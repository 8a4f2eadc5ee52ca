"""Credential management service: accounts, sessions, upload, retrieval,
recovery.

The service is semi-trusted by design.  It never sees a decryption key or a
plaintext grade; it shuttles envelope bytes between clients, the mutable
store and the ledger.  Verification stays on the student's side, which is
what makes the tamper demonstration meaningful.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
from dataclasses import dataclass
from typing import Protocol

from .errors import AuthFailed, Forbidden, HashMismatch
from .ledger import Block, Ledger, make_record
from .lds import Lds

SCRYPT_N = 2 ** 14
SCRYPT_R = 8
SCRYPT_P = 1
SCRYPT_MAXMEM = 64 * 1024 * 1024
DIGEST_LEN = 32
SESSION_TTL = 3600.0
TOKEN_BYTES = 16


def hash_password(password: str, salt: bytes | None = None) -> tuple[bytes, bytes]:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode("utf-8"), salt=salt, n=SCRYPT_N,
                            r=SCRYPT_R, p=SCRYPT_P, maxmem=SCRYPT_MAXMEM,
                            dklen=DIGEST_LEN)
    return salt, digest


def check_password(password: str, salt: bytes, digest: bytes) -> bool:
    _, candidate = hash_password(password, salt)
    return hmac.compare_digest(candidate, digest)


class AuthorityDirectory(Protocol):
    """What the CMS needs from the authority, whether in-process or remote."""

    def check_nonce(self, ins_id: str, nonce: str, consume_registration: bool = False) -> bool: ...

    def student_public(self, roll: str) -> dict | None: ...


@dataclass
class AccountRecord:
    email: str
    role: str  # "instructor" | "student"
    ident: str  # instructor ID or student roll
    salt: bytes
    digest: bytes
    e: int | None = None
    N: int | None = None


@dataclass(frozen=True)
class Session:
    token: str
    email: str
    role: str
    ident: str
    expires_at: float


@dataclass
class _Forwarded:
    email: str
    e: int
    N: int


class Cms:
    def __init__(self, lds: Lds, ledger: Ledger, directory: AuthorityDirectory,
                 session_ttl: float = SESSION_TTL):
        self.lds = lds
        self.ledger = ledger
        self.directory = directory
        self.session_ttl = session_ttl
        self._accounts: dict[str, AccountRecord] = {}
        self._roll_to_email: dict[str, str] = {}
        self._sessions: dict[str, Session] = {}
        self._forwarded: dict[str, _Forwarded] = {}
        self._lock = threading.Lock()
        self._burn_material: tuple[bytes, bytes] | None = None

    # -- authority push path --------------------------------------------------

    def cta_forward(self, roll: str, email: str, e: int, N: int) -> None:
        """Receives the (e, email, roll) tuple the authority emits at student
        registration.  Pull via the directory covers deployments where this
        push never happens."""
        with self._lock:
            self._forwarded[roll] = _Forwarded(email=email, e=e, N=N)

    def _student_record(self, roll: str) -> _Forwarded | None:
        with self._lock:
            hit = self._forwarded.get(roll)
        if hit is not None:
            return hit
        pulled = self.directory.student_public(roll)
        if pulled is None:
            return None
        rec = _Forwarded(email=pulled["email"], e=int(pulled["e"]), N=int(pulled["N"]))
        with self._lock:
            self._forwarded[roll] = rec
        return rec

    # -- registration (b in {0,1} with a reason, never an exception) ----------

    def register_instructor(self, email: str, password: str, ins_id: str,
                            nonce: str) -> tuple[int, str | None]:
        with self._lock:
            if email in self._accounts:
                return 0, "duplicate-account"
        if not self.directory.check_nonce(ins_id, nonce, consume_registration=True):
            return 0, "nonce-rejected"
        salt, digest = hash_password(password)
        with self._lock:
            if email in self._accounts:
                return 0, "duplicate-account"
            self._accounts[email] = AccountRecord(email=email, role="instructor",
                                                  ident=ins_id, salt=salt, digest=digest)
        return 1, None

    def register_student(self, email: str, password: str, roll: str) -> tuple[int, str | None]:
        record = self._student_record(roll)
        if record is None or record.email != email:
            return 0, "cta-mismatch"
        with self._lock:
            if email in self._accounts or roll in self._roll_to_email:
                return 0, "duplicate-account"
        salt, digest = hash_password(password)
        with self._lock:
            if email in self._accounts or roll in self._roll_to_email:
                return 0, "duplicate-account"
            self._accounts[email] = AccountRecord(email=email, role="student", ident=roll,
                                                  salt=salt, digest=digest,
                                                  e=record.e, N=record.N)
            self._roll_to_email[roll] = email
        return 1, None

    # -- login / sessions -----------------------------------------------------

    def _burn(self, password: str) -> None:
        # unknown account: still run one scrypt so timing does not reveal
        # whether the email exists
        if self._burn_material is None:
            self._burn_material = hash_password("!")
        check_password(password, *self._burn_material)

    def _authenticate(self, email: str, password: str) -> AccountRecord:
        with self._lock:
            acct = self._accounts.get(email)
        if acct is None:
            self._burn(password)
            raise AuthFailed()
        if not check_password(password, acct.salt, acct.digest):
            raise AuthFailed()
        return acct

    def login(self, email: str, password: str, nonce: str | None = None) -> Session:
        """Password check for everyone; nonce second factor for instructors.
        All failures are the same AuthFailed."""
        acct = self._authenticate(email, password)
        if acct.role == "instructor":
            if not nonce or not self.directory.check_nonce(acct.ident, nonce):
                raise AuthFailed()
        session = Session(token=secrets.token_hex(TOKEN_BYTES), email=acct.email,
                          role=acct.role, ident=acct.ident,
                          expires_at=time.time() + self.session_ttl)
        with self._lock:
            self._sessions[session.token] = session
        return session

    def _session(self, token: str, role: str | None = None) -> Session:
        with self._lock:
            sess = self._sessions.get(token)
            if sess is None:
                raise AuthFailed()
            if sess.expires_at < time.time():
                del self._sessions[token]
                raise AuthFailed()
        if role is not None and sess.role != role:
            raise AuthFailed()
        return sess

    def logout(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)

    # -- credential flows -----------------------------------------------------

    def upload(self, token: str, roll: str, course: str, envelope_bytes: bytes,
               credential_hash: bytes) -> Block:
        """Store bytes in the mutable store, then the (bytes, hash) record in
        the ledger.  Returns only after both writes are durable."""
        sess = self._session(token, role="instructor")
        if hashlib.sha256(envelope_bytes).digest() != credential_hash:
            raise HashMismatch("uploaded hash does not match the uploaded bytes")
        record = make_record(roll, course, envelope_bytes, uploaded_by=sess.ident)
        self.lds.put(roll, course, envelope_bytes)
        return self.ledger.append([record])

    def retrieve(self, token: str, roll: str, course: str) -> tuple[bytes, bytes]:
        """(bytes from the mutable store, hash from the ledger).

        No verification here: the client recomputes the hash itself, so a
        lying store cannot be papered over by a lying service.
        """
        sess = self._session(token, role="student")
        if sess.ident != roll:
            raise Forbidden(f"session for roll {sess.ident!r} may not read {roll!r}")
        data = self.lds.get(roll, course)
        record = self.ledger.latest(roll, course)
        return data, record.credential_hash

    def recover(self, roll: str, course: str, email: str | None = None,
                password: str | None = None, token: str | None = None) -> bytes:
        """Replace the store copy with the ledger copy and return it.

        Accepts either a live session or email+password re-authentication.
        """
        if token is not None:
            sess = self._session(token, role="student")
            ident = sess.ident
        elif email is not None and password is not None:
            acct = self._authenticate(email, password)
            if acct.role != "student":
                raise AuthFailed()
            ident = acct.ident
        else:
            raise AuthFailed()
        if ident != roll:
            raise Forbidden(f"account for roll {ident!r} may not recover {roll!r}")
        record = self.ledger.latest(roll, course)
        self.lds.put(roll, course, record.envelope_bytes)
        return record.envelope_bytes
