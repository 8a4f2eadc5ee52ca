"""Textbook RSA over arbitrary-precision integers.

Raw RSA, deliberately: no padding scheme.  The digit-interleaving layer
downstream is the obfuscation mechanism; adding OAEP here would change the
ciphertext widths the rest of the pipeline depends on.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

from .errors import MessageTooLarge

MILLER_RABIN_ROUNDS = 40


@dataclass(frozen=True)
class RsaParams:
    p: int
    q: int
    N: int
    bits: int

    def __post_init__(self):
        if self.p == self.q:
            raise ValueError("p and q must differ")
        if self.N != self.p * self.q:
            raise ValueError("N != p*q")
        for prime in (self.p, self.q):
            if not is_probable_prime(prime):
                raise ValueError(f"{prime} failed primality test")


@dataclass(frozen=True)
class RsaKeys:
    e: int
    d: int


def is_probable_prime(n: int, rounds: int = MILLER_RABIN_ROUNDS,
                      rng: random.Random | None = None) -> bool:
    """Miller-Rabin with `rounds` random bases (error < 4^-rounds)."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    rng = rng or random
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def generate_prime(bits: int, rng: random.Random) -> int:
    """Random prime with exactly `bits` bits and the top two bits set.

    Keeping both high bits set guarantees the product of two such primes has
    the full 2*bits length, so a lambda-bit modulus really is lambda bits.
    """
    if bits < 8:
        raise ValueError("prime size below 8 bits is not useful even for tests")
    while True:
        cand = rng.randrange(3 << (bits - 2), 1 << bits) | 1
        if is_probable_prime(cand, rng=rng):
            return cand


def rsa_setup(bits: int = 1024, rng: random.Random | None = None) -> RsaParams:
    """Draw two distinct bits/2-bit primes and return (p, q, N).

    `bits` as low as 16 is allowed so tests can run with toy moduli.
    """
    if bits < 16:
        raise ValueError("security parameter must be at least 16 bits")
    rng = rng or random.SystemRandom()
    half = bits // 2
    p = generate_prime(half, rng)
    while True:
        q = generate_prime(half, rng)
        if q != p:
            break
    return RsaParams(p=p, q=q, N=p * q, bits=bits)


def rsa_keygen(params: RsaParams, rng: random.Random | None = None,
               exponent_mode: str = "fixed") -> RsaKeys:
    """Produce (e, d) with e*d = 1 mod lcm(p-1, q-1).

    exponent_mode "fixed" uses e=65537 (falling back to a small search in
    the unlikely coprimality failure); "random" draws a full-size uniform e,
    which makes encryption cost match decryption cost.
    """
    lam = math.lcm(params.p - 1, params.q - 1)
    rng = rng or random.SystemRandom()
    if exponent_mode == "fixed":
        e = 65537
        while math.gcd(e, lam) != 1:
            e += 2
    elif exponent_mode == "random":
        while True:
            e = rng.randrange(3, lam) | 1
            if math.gcd(e, lam) == 1:
                break
    else:
        raise ValueError(f"unknown exponent mode {exponent_mode!r}")
    d = pow(e, -1, lam)
    return RsaKeys(e=e, d=d)


def rsa_enc(m: int, e: int, N: int) -> int:
    if not 0 <= m < N:
        raise MessageTooLarge(f"plaintext {m} not in [0, N)")
    return pow(m, e, N)


def rsa_dec(c: int, d: int, N: int) -> int:
    if not 0 <= c < N:
        raise MessageTooLarge(f"ciphertext {c} not in [0, N)")
    return pow(c, d, N)


def mod_pow_counted(base: int, exponent: int, modulus: int,
                    count: Callable[[], None] | None = None) -> tuple[int, int]:
    """Square-and-multiply with a multiplication counter.

    Same result as pow(); exists so tests can assert the O(log exponent)
    bound directly instead of trusting the builtin.  Returns (result, mults).
    """
    if modulus == 1:
        return 0, 0
    result = 1
    base %= modulus
    mults = 0
    exp = exponent
    while exp:
        if exp & 1:
            result = result * base % modulus
            mults += 1
        base = base * base % modulus
        mults += 1
        exp >>= 1
    if count is not None:  # optional external tally hook
        for _ in range(mults):
            count()
    return result, mults


def serialize_keys(params: RsaParams | None, keys: RsaKeys | None,
                   include_private: bool = False) -> dict:
    """Key material as a JSON-ready dict of decimal strings.

    The full set {p,q,N,e,d} is authority-side; distributed parties get
    {N,e} or {N,e,d} depending on `include_private`.
    """
    out: dict[str, str] = {}
    if params is not None:
        out["N"] = str(params.N)
        if include_private:
            out["p"] = str(params.p)
            out["q"] = str(params.q)
    if keys is not None:
        out["e"] = str(keys.e)
        if include_private:
            out["d"] = str(keys.d)
    return out


def deserialize_keys(blob: dict) -> dict[str, int]:
    """Parse decimal-string key fields back to ints; unknown keys ignored."""
    return {k: int(blob[k]) for k in ("p", "q", "N", "e", "d") if k in blob}
