"""Trusted authority: system setup, identity registration, key issuance.

Holds the RSA parameters, the dummy parameters (S, T) and the derived DNA
key; issues per-student exponent pairs and instructor nonces.  Email
verification is assumed done out of band; inputs arrive pre-verified.
"""

from __future__ import annotations

import hmac
import random
import secrets
import threading
from dataclasses import dataclass

from .dna import DnaKey, DnaParams, dna_keygen, floor_stable
from .errors import DuplicateInstructor, DuplicateStudent, NotFound
from .m2fe import DEFAULT_CHUNK_DIGITS
from .rsa import RsaParams, rsa_keygen, rsa_setup

NONCE_BYTES = 16


def fresh_nonce() -> str:
    """128-bit instructor nonce as 32 hex characters."""
    return secrets.token_hex(NONCE_BYTES)


def sample_dummy_params(K: int, rng: random.Random) -> tuple[int, int]:
    """Draw (S, T) with S > T >= 2 from a K-bit budget.

    Rejected draws: pairs whose DNA-key derivation lands within float noise
    of an integer (floor would be platform-dependent), and pairs whose
    equal-width dummy length (2S mod T) is zero, which would switch off the
    dummy-verification channel entirely.
    """
    if K < 3:
        raise ValueError("dummy parameter budget K must be at least 3 bits")
    upper = 1 << K
    while True:
        S = rng.randrange(3, upper)
        T = rng.randrange(2, S)
        if not floor_stable(S, T):
            continue
        if (2 * S) % T == 0:
            continue
        return S, T


@dataclass(frozen=True)
class KeyBundle:
    """Everything a client needs to run the cipher.

    Students receive the full bundle; instructors get d=None.  k is the
    plaintext chunk width, derived from N so chunks always stay below the
    modulus.
    """

    e: int
    N: int
    dk: DnaKey
    Y: int
    S: int
    T: int
    k: int
    d: int | None = None

    def public(self) -> "KeyBundle":
        return KeyBundle(e=self.e, N=self.N, dk=self.dk, Y=self.Y,
                         S=self.S, T=self.T, k=self.k, d=None)

    def to_json(self) -> dict:
        out = {
            "e": str(self.e),
            "N": str(self.N),
            "DK": self.dk.bits,
            "Y": self.Y,
            "S": self.S,
            "T": self.T,
            "k": self.k,
        }
        if self.d is not None:
            out["d"] = str(self.d)
        return out

    @classmethod
    def from_json(cls, blob: dict) -> "KeyBundle":
        return cls(e=int(blob["e"]), N=int(blob["N"]), dk=DnaKey(bits=blob["DK"]),
                   Y=int(blob["Y"]), S=int(blob["S"]), T=int(blob["T"]),
                   k=int(blob["k"]),
                   d=int(blob["d"]) if "d" in blob else None)


@dataclass
class _InstructorEntry:
    email: str
    nonce: str
    nonce_registered: bool = False  # consumed by a successful account creation


@dataclass
class _StudentEntry:
    email: str
    bundle: KeyBundle


class Cta:
    """In-process authority.  The HTTP layer wraps this 1:1."""

    def __init__(self, bits: int = 1024, K: int = 16,
                 rng: random.Random | None = None,
                 exponent_mode: str = "fixed",
                 chunk_digits: int = DEFAULT_CHUNK_DIGITS):
        self._rng = rng or random.SystemRandom()
        self.exponent_mode = exponent_mode
        self.params: RsaParams = rsa_setup(bits, self._rng)
        self.S, self.T = sample_dummy_params(K, self._rng)
        self.K = K
        self.dk: DnaKey = dna_keygen(DnaParams(S=self.S, T=self.T, K=K))
        # widest chunk that still decodes below N
        self.chunk_digits = min(chunk_digits, len(str(self.params.N)) - 1)
        self._instructors: dict[str, _InstructorEntry] = {}
        self._students: dict[str, _StudentEntry] = {}
        self._emails: set[str] = set()
        self._lock = threading.Lock()
        # optional push target; the CMS can also pull via student_public()
        self.cms_sink = None

    # -- registration ---------------------------------------------------------

    def register_instructor(self, email: str, ins_id: str) -> str:
        with self._lock:
            if ins_id in self._instructors or email in self._emails:
                raise DuplicateInstructor(f"instructor {ins_id!r} or email already registered")
            nonce = fresh_nonce()
            self._instructors[ins_id] = _InstructorEntry(email=email, nonce=nonce)
            self._emails.add(email)
            return nonce

    def register_student(self, email: str, roll: str) -> KeyBundle:
        with self._lock:
            if roll in self._students or email in self._emails:
                raise DuplicateStudent(f"roll {roll!r} or email already registered")
            keys = rsa_keygen(self.params, self._rng, exponent_mode=self.exponent_mode)
            bundle = KeyBundle(e=keys.e, N=self.params.N, dk=self.dk,
                               Y=self._rng.randrange(24), S=self.S, T=self.T,
                               k=self.chunk_digits, d=keys.d)
            self._students[roll] = _StudentEntry(email=email, bundle=bundle)
            self._emails.add(email)
            sink = self.cms_sink
        if sink is not None:
            sink(roll=roll, email=email, e=bundle.e, N=bundle.N)
        return bundle

    # -- lookups used by instructors and the CMS ------------------------------

    def encryption_bundle(self, roll: str) -> KeyBundle:
        """Public part of a student's bundle, for the instructor who grades
        that student."""
        with self._lock:
            try:
                return self._students[roll].bundle.public()
            except KeyError:
                raise NotFound(f"no registered student with roll {roll!r}") from None

    def student_public(self, roll: str) -> dict | None:
        with self._lock:
            entry = self._students.get(roll)
            if entry is None:
                return None
            return {"roll": roll, "email": entry.email,
                    "e": entry.bundle.e, "N": entry.bundle.N}

    def check_nonce(self, ins_id: str, nonce: str, consume_registration: bool = False) -> bool:
        """True iff the nonce matches the one issued to ins_id.

        A nonce authorizes account creation once; it stays valid as the
        login second factor afterwards.
        """
        with self._lock:
            entry = self._instructors.get(ins_id)
            if entry is None or not hmac.compare_digest(entry.nonce, nonce):
                return False
            if consume_registration:
                if entry.nonce_registered:
                    return False
                entry.nonce_registered = True
            return True
