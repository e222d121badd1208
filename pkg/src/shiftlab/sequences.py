"""Lazily evaluated symbol sequences and p-adic digit streams.

Points of the shift spaces handled by this package are infinite objects:
bilateral symbol sequences and p-adic integers.  Truncating them to fixed
windows would break invertibility of the dynamics, so instead every point
carries a finite description that can produce any requested coordinate
exactly (periodic words, scheduled transitive words, digit streams of
rationals, translated or re-indexed streams).  All objects here are
immutable after construction.
"""

from __future__ import annotations

import bisect
from fractions import Fraction
from typing import Sequence


class BilateralWord:
    """A two-sided infinite symbol sequence, evaluable at any index."""

    def at(self, m: int) -> int:
        raise NotImplementedError

    def window(self, lo: int, hi: int) -> tuple[int, ...]:
        """Letters at positions lo, lo+1, ..., hi-1."""
        return tuple(self.at(m) for m in range(lo, hi))


class ConstantWord(BilateralWord):
    def __init__(self, letter: int):
        self.letter = int(letter)

    def at(self, m: int) -> int:
        return self.letter

    def __repr__(self):
        return f"ConstantWord({self.letter})"


class PeriodicWord(BilateralWord):
    """The periodic sequence ...www... with w repeated at every index."""

    def __init__(self, word: Sequence[int], phase: int = 0):
        if not word:
            raise ValueError("period must be nonempty")
        self.word = tuple(int(a) for a in word)
        self.phase = int(phase) % len(self.word)

    def at(self, m: int) -> int:
        return self.word[(m + self.phase) % len(self.word)]

    def least_period(self) -> int:
        n = len(self.word)
        for d in range(1, n + 1):
            if n % d == 0 and all(self.word[i] == self.word[i % d] for i in range(n)):
                return d
        return n

    def __repr__(self):
        return f"PeriodicWord({self.word}, phase={self.phase})"


class ScheduledWord(BilateralWord):
    """A word with prescribed finite segments and a constant filler letter.

    Segments are (start, letters) with pairwise disjoint index ranges
    [start, start+len).  Everything outside the segments is the filler.
    """

    def __init__(self, segments: Sequence[tuple[int, tuple[int, ...]]], filler: int = 0):
        segs = sorted(segments)
        for (s0, w0), (s1, _w1) in zip(segs, segs[1:]):
            if s0 + len(w0) > s1:
                raise ValueError(f"overlapping segments at {s0} and {s1}")
        self._starts = [s for s, _ in segs]
        self._words = [w for _, w in segs]
        self.filler = int(filler)

    def at(self, m: int) -> int:
        j = bisect.bisect_right(self._starts, m) - 1
        if j >= 0:
            s, w = self._starts[j], self._words[j]
            if m < s + len(w):
                return w[m - s]
        return self.filler

    @property
    def extent(self) -> tuple[int, int]:
        """Smallest index range [lo, hi) containing every segment."""
        if not self._starts:
            return (0, 0)
        return (self._starts[0], self._starts[-1] + len(self._words[-1]))

    def segments(self) -> list[tuple[int, tuple[int, ...]]]:
        return list(zip(self._starts, self._words))


class SymbolPoint:
    """A point of a bilateral shift space: a word viewed from an offset.

    The shift acts by moving the offset, so iterates are O(1) and exact.
    """

    __slots__ = ("word", "offset")

    def __init__(self, word: BilateralWord, offset: int = 0):
        self.word = word
        self.offset = int(offset)

    def shifted(self, k: int) -> "SymbolPoint":
        return SymbolPoint(self.word, self.offset + k)

    def window(self, lo: int, hi: int) -> tuple[int, ...]:
        return self.word.window(self.offset + lo, self.offset + hi)

    def letter(self, m: int) -> int:
        return self.word.at(self.offset + m)

    def agrees(self, other: "SymbolPoint", radius: int) -> bool:
        return self.window(-radius, radius + 1) == other.window(-radius, radius + 1)

    def __repr__(self):
        return f"SymbolPoint({self.word!r}, offset={self.offset})"


# ---------------------------------------------------------------------------
# Interleaving between one-sided digit indices and bilateral positions.
# Digit index i >= 0 maps to bilateral position 0, 1, -1, 2, -2, ...

def bilateral_position(i: int) -> int:
    if i < 0:
        raise ValueError("digit index must be nonnegative")
    if i == 0:
        return 0
    if i % 2 == 1:
        return (i + 1) // 2
    return -(i // 2)


def digit_index(k: int) -> int:
    if k == 0:
        return 0
    if k > 0:
        return 2 * k - 1
    return -2 * k


# ---------------------------------------------------------------------------
# p-adic digit streams.

class PadicStream:
    """A p-adic integer presented as its digit stream (little-endian)."""

    def __init__(self, p: int):
        if p < 2:
            raise ValueError("base must be >= 2")
        self.p = int(p)

    def digit(self, i: int) -> int:
        raise NotImplementedError

    def prefix_int(self, depth: int) -> int:
        """The integer with the first `depth` digits, i.e. the value mod p^depth."""
        v = 0
        for i in reversed(range(depth)):
            v = v * self.p + self.digit(i)
        return v

    def digits(self, depth: int) -> tuple[int, ...]:
        return tuple(self.digit(i) for i in range(depth))


class RationalPadic(PadicStream):
    """Digit stream of a rational a/b with b invertible mod p.

    Integers are the common case; eventually periodic streams are exactly
    the rationals with denominator coprime to p.
    """

    def __init__(self, p: int, value):
        super().__init__(p)
        self.value = Fraction(value)
        if self.value.denominator % p == 0:
            raise ValueError("denominator must be invertible in the p-adics")
        self._prefix_cache: dict[int, int] = {}

    def prefix_int(self, depth: int) -> int:
        got = self._prefix_cache.get(depth)
        if got is None:
            mod = self.p ** depth
            num = self.value.numerator % mod
            den = self.value.denominator % mod
            got = (num * pow(den, -1, mod)) % mod
            self._prefix_cache[depth] = got
        return got

    def digit(self, i: int) -> int:
        return (self.prefix_int(i + 1) - self.prefix_int(i)) // (self.p ** i)


class TranslatedPadic(PadicStream):
    """base + delta, computed prefix-by-prefix (carries stay below depth)."""

    def __init__(self, base: PadicStream, delta: int):
        super().__init__(base.p)
        self.base = base
        self.delta = int(delta)

    def prefix_int(self, depth: int) -> int:
        return (self.base.prefix_int(depth) + self.delta) % (self.p ** depth)

    def digit(self, i: int) -> int:
        return (self.prefix_int(i + 1) - self.prefix_int(i)) // (self.p ** i)


class InterleavedPadic(PadicStream):
    """Pullback of a bilateral word through the digit interleaving."""

    def __init__(self, p: int, point: SymbolPoint):
        super().__init__(p)
        self.point = point

    def digit(self, i: int) -> int:
        d = self.point.letter(bilateral_position(i))
        if not 0 <= d < self.p:
            raise ValueError(f"letter {d} out of digit range for base {self.p}")
        return d


class ReindexedPadic(PadicStream):
    """Digits pulled from `base` through the interleaved shift by k steps.

    digit(i) = base.digit at the index whose bilateral position is
    position(i) + k.  This realizes the bilateral shift transported to
    digit streams; iterates compose by adding k.
    """

    def __init__(self, base: PadicStream, k: int):
        super().__init__(base.p)
        if isinstance(base, ReindexedPadic):
            self.base = base.base
            self.k = base.k + int(k)
        else:
            self.base = base
            self.k = int(k)

    def digit(self, i: int) -> int:
        return self.base.digit(digit_index(bilateral_position(i) + self.k))


def padic_view(stream: PadicStream) -> SymbolPoint:
    """Bilateral view of a digit stream through the interleaving."""
    return SymbolPoint(_StreamWord(stream), 0)


class _StreamWord(BilateralWord):
    def __init__(self, stream: PadicStream):
        self.stream = stream

    def at(self, m: int) -> int:
        return self.stream.digit(digit_index(m))


def digits_to_int(digits: Sequence[int], p: int) -> int:
    v = 0
    for d in reversed(list(digits)):
        if not 0 <= d < p:
            raise ValueError(f"digit {d} out of range for base {p}")
        v = v * p + int(d)
    return v


def int_to_digits(value: int, p: int, depth: int) -> tuple[int, ...]:
    v = value % (p ** depth)
    out = []
    for _ in range(depth):
        out.append(v % p)
        v //= p
    return tuple(out)
