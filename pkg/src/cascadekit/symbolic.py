"""Words over a finite alphabet and the ultrametric on their cylinders.

Points of the symbolic space are only ever represented by finite prefixes,
so a *word* here is a plain tuple of ints.  The :class:`Alphabet` carries the
size ``b`` and does the validation.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError

Word = tuple  # tuple[int, ...]

_DIGITS = string.digits + string.ascii_lowercase


@dataclass(frozen=True)
class Alphabet:
    """The symbol set ``{0, ..., b-1}``."""

    b: int

    def __post_init__(self):
        if not isinstance(self.b, int) or isinstance(self.b, bool) or self.b < 2:
            raise InputError(f"alphabet size must be an integer >= 2, got {self.b!r}")

    def check_symbol(self, j) -> int:
        j = int(j)
        if not 0 <= j < self.b:
            raise InputError(f"symbol {j} out of range for alphabet of size {self.b}")
        return j

    def word(self, symbols: Iterable[int] | str = ()) -> Word:
        """Build a validated word from ints or from a digit string like ``"0101"``."""
        if isinstance(symbols, str):
            return parse_word(symbols, self.b)
        return tuple(self.check_symbol(j) for j in symbols)

    def child(self, u: Sequence[int], j: int) -> Word:
        """Concatenate one symbol: returns ``u·j``."""
        return tuple(u) + (self.check_symbol(j),)

    def words(self, n: int):
        """All words of length ``n`` in lexicographic order."""
        from itertools import product

        return product(range(self.b), repeat=n)


def child(u: Sequence[int], j: int, b: int) -> Word:
    return Alphabet(b).child(u, j)


def ultrametric_distance(x: Sequence[int], y: Sequence[int]) -> float:
    """``exp(-k)`` with ``k`` the 1-based index of the first disagreement.

    Equal prefixes give 0: the two points are closer than the working
    resolution.
    """
    if len(x) != len(y):
        raise InputError(f"words must have equal length, got {len(x)} and {len(y)}")
    if len(x) == 0:
        raise InputError("distance needs words of length >= 1")
    for k, (a, c) in enumerate(zip(x, y), start=1):
        if a != c:
            return math.exp(-k)
    return 0.0


def parse_word(text: str, b: int) -> Word:
    """Parse base-``b`` digit characters (``b <= 36``); the empty string is the empty word."""
    if b > len(_DIGITS):
        raise InputError(f"string form of words only supports b <= {len(_DIGITS)}")
    alphabet = Alphabet(b)
    out = []
    for ch in text.strip().lower():
        k = _DIGITS.find(ch)
        if k < 0:
            raise InputError(f"invalid digit {ch!r} in word {text!r}")
        out.append(alphabet.check_symbol(k))
    return tuple(out)


def format_word(u: Sequence[int]) -> str:
    return "".join(_DIGITS[j] for j in u)
