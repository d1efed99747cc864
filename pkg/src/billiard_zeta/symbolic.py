"""Admissible periodic itineraries over ``r`` obstacles.

A periodic ray is coded by a cyclic word over ``{1..r}`` in which no two
cyclically adjacent letters agree.  Oriented rays correspond to classes
under rotation only, so a word and its reversal are different rays unless
the class is reversal invariant (``12``, ``1213``, ...).
"""

from __future__ import annotations

from dataclasses import dataclass


def least_rotation(seq) -> tuple[int, ...]:
    """Lexicographically least rotation (Booth's algorithm)."""
    s = tuple(seq)
    n = len(s)
    if n == 0:
        return s
    ss = s + s
    f = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        sj = ss[j]
        i = f[j - k - 1]
        while i != -1 and sj != ss[k + i + 1]:
            if sj < ss[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != ss[k + i + 1]:
            if sj < ss[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return ss[k:k + n]


def primitive_period(seq) -> int:
    """Length of the shortest block whose repetition gives ``seq``."""
    s = tuple(seq)
    n = len(s)
    # failure function of the prefix automaton
    fail = [0] * n
    k = 0
    for i in range(1, n):
        while k and s[i] != s[k]:
            k = fail[k - 1]
        if s[i] == s[k]:
            k += 1
        fail[i] = k
    p = n - fail[-1]
    return p if n % p == 0 else n


@dataclass(frozen=True, order=True)
class Word:
    """A canonical cyclic itinerary (least rotation, 1-based symbols)."""

    symbols: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(v) for v in self.symbols)
        if len(s) < 2:
            raise ValueError("a periodic itinerary needs at least two reflections")
        if any(a == b for a, b in zip(s, s[1:] + s[:1])):
            raise ValueError(f"inadmissible itinerary {s}: repeated adjacent symbol")
        if min(s) < 1:
            raise ValueError("symbols are 1-based")
        object.__setattr__(self, "symbols", least_rotation(s))

    @classmethod
    def _trusted(cls, symbols: tuple[int, ...]) -> Word:
        # caller guarantees an admissible least rotation
        w = object.__new__(cls)
        object.__setattr__(w, "symbols", symbols)
        return w

    @classmethod
    def parse(cls, text: str) -> Word:
        return cls(tuple(int(ch) for ch in text.strip()))

    def __str__(self) -> str:
        if max(self.symbols) > 9:
            raise ValueError("digit-string serialization supports at most 9 obstacles")
        return "".join(map(str, self.symbols))

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    @property
    def m(self) -> int:
        return len(self.symbols)

    def reversed(self) -> Word:
        return Word(self.symbols[::-1])

    @property
    def is_primitive(self) -> bool:
        return primitive_period(self.symbols) == len(self.symbols)


@dataclass(frozen=True)
class PrimitiveDecomposition:
    primitive: Word
    repetition: int


def primitive_decomposition(w) -> PrimitiveDecomposition:
    w = w if isinstance(w, Word) else Word(w)
    p = primitive_period(w.symbols)
    return PrimitiveDecomposition(Word(w.symbols[:p]), len(w) // p)


def iter_necklaces(r: int, m: int, with_period: bool = False):
    """Yield canonical admissible classes of length exactly ``m`` as tuples.

    Iterative prenecklace search (Fredricksen-Kessler-Maiorana) with the
    no-repeat constraint pruned during the descent; the constraint is prefix
    closed, so no class is lost.  Output is in lexicographic order.  With
    ``with_period`` each item is ``(symbols, primitive_period)``.
    """
    if m < 2 or r < 2:
        return
    a = [0] * (m + 1)
    a[0] = -1
    pp = [0] * (m + 1)  # period of the prefix a[1..t]
    a[1] = 1
    pp[1] = 1
    t = 1
    while True:
        if t == m:
            p = pp[m]
            if m % p == 0 and a[m] != a[1]:
                yield (tuple(a[1:]), p) if with_period else tuple(a[1:])
        else:
            period = pp[t]
            start = a[t + 1 - period]
            if start != a[t]:
                t += 1
                a[t] = start
                pp[t] = period
                continue
            if start < r:
                t += 1
                a[t] = start + 1
                pp[t] = t
                continue
        # next sibling, backtracking as needed
        while t >= 1:
            j = a[t] + 1
            if j == a[t - 1]:
                j += 1
            if j <= r:
                a[t] = j
                pp[t] = t
                break
            t -= 1
        else:
            return


def enumerate_words(r: int, m_max: int, m_min: int = 2) -> list[Word]:
    """Every canonical admissible class with ``m_min <= length <= m_max``.

    Sorted by length, then lexicographically.  Reversed classes are kept as
    separate entries (distinct orientations).
    """
    if r < 3:
        raise ValueError(f"need r >= 3, got {r}")
    if m_max < 2:
        raise ValueError(f"need m_max >= 2, got {m_max}")
    out = []
    for m in range(max(2, m_min), m_max + 1):
        out.extend(Word._trusted(s) for s in iter_necklaces(r, m))
    return out


def count_periodic_points(r: int, m: int) -> int:
    """``trace(A^m)`` for the ``r x r`` all-ones-off-diagonal matrix.

    Equals ``(r - 1)^m + (r - 1)(-1)^m``; Python integers never overflow.
    """
    if r < 2 or m < 1:
        raise ValueError("need r >= 2 and m >= 1")
    return (r - 1) ** m + (r - 1) * (-1) ** m


def class_point_count(r: int, m: int) -> int:
    """Number of admissible linear words of length ``m`` read cyclically,
    obtained from the enumerated classes (each contributes its primitive
    period's worth of distinct rotations)."""
    return sum(p for _, p in iter_necklaces(r, m, with_period=True))
