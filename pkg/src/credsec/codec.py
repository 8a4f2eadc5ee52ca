"""Character <-> two-digit integer codec for the 95-character credential alphabet.

Each printable character maps to a zero-padded code in 01..95, so encoded
text is exactly twice as long as the input (versus three digits per
character for an ASCII-decimal baseline).
"""

from __future__ import annotations

import string

from .errors import CodeOutOfRange, OddLength, UnknownCharacter

# Canonical table: digits, upper, lower, space, then punctuation.  Codes 63
# (space) and 94 ('|') are our convention; they are the only printable
# characters not claimed by another row.
ALPHABET = (
    string.digits
    + string.ascii_uppercase
    + string.ascii_lowercase
    + " "
    + "!\"#%&'()*+,-./:;<=>?@$^_[\\]`~{|}"
)

assert len(ALPHABET) == 95

CHAR_TO_CODE = {ch: i + 1 for i, ch in enumerate(ALPHABET)}
CODE_TO_CHAR = {i + 1: ch for i, ch in enumerate(ALPHABET)}

# str.translate wants ordinals on the left; it maps each character to its
# two-digit code in a single C-level pass.
_ENCODE_TABLE = {ord(ch): "%02d" % code for ch, code in CHAR_TO_CODE.items()}
_DECODE_TABLE = {"%02d" % code: ch for code, ch in CODE_TO_CHAR.items()}


def c2i_encode(text: str) -> str:
    """Encode ``text`` as a digit string, two digits per character.

    Raises UnknownCharacter for anything outside the alphabet; nothing is
    ever substituted silently.
    """
    try:
        out = text.translate(_ENCODE_TABLE)
    except TypeError:  # pragma: no cover - non-str input
        raise TypeError("c2i_encode expects str")
    # translate() passes unknown characters through unchanged, so a length
    # check is enough to detect them; only then walk to find the culprit.
    if len(out) != 2 * len(text):
        for pos, ch in enumerate(text):
            if ch not in CHAR_TO_CODE:
                raise UnknownCharacter(pos, ch)
    return out


def c2i_decode(digits: str) -> str:
    """Inverse of :func:`c2i_encode`.

    Raises OddLength if the string cannot be split into pairs, and
    CodeOutOfRange for any pair outside 01..95 (including non-digit pairs).
    """
    if len(digits) % 2:
        raise OddLength(f"digit string length {len(digits)} is odd")
    table = _DECODE_TABLE
    try:
        return "".join(table[digits[i : i + 2]] for i in range(0, len(digits), 2))
    except KeyError:
        # Rare path: locate the offending group for the error message.
        for group in range(len(digits) // 2):
            pair = digits[2 * group : 2 * group + 2]
            if pair not in table:
                raise CodeOutOfRange(group, pair) from None
        raise  # pragma: no cover - unreachable


def table_rows() -> list[tuple[str, int]]:
    """The full table as (character, code) rows, in code order, for audit."""
    return [(ch, i + 1) for i, ch in enumerate(ALPHABET)]
