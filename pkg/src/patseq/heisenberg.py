"""Pattern counts as entries of unitriangular matrix products.

Two generators of dimension d share the superdiagonal: a mask assigns
each superdiagonal slot to one generator (bit 1) or the other (bit 0).
The product of generators along a binary word X then carries subsequence
counts of the mask's prefixes in its first row, and every such product is
totally nonnegative.  Arithmetic is exact (Python integers) so minors are
sign-exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .patterns import count_pattern
from .words import check_word

MAX_MINOR_DIM = 8


@dataclass(frozen=True)
class GeneratorSpec:
    """Dimension d plus the superdiagonal mask (one bit per slot)."""

    d: int
    mask: tuple[int, ...]

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("dimension must be at least 2")
        if len(self.mask) != self.d - 1:
            raise ValueError(f"mask must have {self.d - 1} bits, got {len(self.mask)}")
        if any(b not in (0, 1) for b in self.mask):
            raise ValueError("mask bits must be 0 or 1")
        object.__setattr__(self, "mask", tuple(int(b) for b in self.mask))

    @classmethod
    def from_string(cls, mask: str) -> "GeneratorSpec":
        check_word(mask, "mask")
        return cls(d=len(mask) + 1, mask=tuple(int(b) for b in mask))

    def generator(self, symbol: int) -> list[list[int]]:
        """The matrix applied for one input symbol (identity plus the
        superdiagonal slots assigned to that symbol)."""
        m = identity(self.d)
        for i, bit in enumerate(self.mask):
            if bit == symbol:
                m[i][i + 1] = 1
        return m

    def prefix_patterns(self) -> list[str]:
        """Patterns counted along the first row: mask prefixes."""
        return ["".join(map(str, self.mask[:j])) for j in range(1, self.d)]


def identity(d: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(d)] for i in range(d)]


def mat_mult(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    d = len(a)
    out = [[0] * d for _ in range(d)]
    for i in range(d):
        ai = a[i]
        for kk in range(d):
            f = ai[kk]
            if f:
                bk = b[kk]
                oi = out[i]
                for j in range(d):
                    oi[j] += f * bk[j]
    return out


def matrix_of_word(spec: GeneratorSpec, host: str) -> list[list[int]]:
    """Product of generators along the host word (exact integers)."""
    check_word(host, "host")
    m = identity(spec.d)
    for ch in host:
        m = mat_mult(m, spec.generator(int(ch)))
    return m


@dataclass
class FirstRowCheck:
    spec: GeneratorSpec
    host: str
    first_row: list[int]
    expected: list[int]

    @property
    def passed(self) -> bool:
        return self.first_row == self.expected


def first_row_equals_counts(spec: GeneratorSpec, host: str) -> FirstRowCheck:
    """First row of the product vs (1, N_{m1}, N_{m1 m2}, ...)."""
    m = matrix_of_word(spec, host)
    expected = [1] + [count_pattern(p, host) if host else (1 if not p else 0)
                      for p in spec.prefix_patterns()]
    if not host:
        expected = [1] + [0] * (spec.d - 1)
    return FirstRowCheck(spec=spec, host=host, first_row=m[0], expected=expected)


def det_bareiss(mat: list[list[int]]) -> int:
    """Exact integer determinant by fraction-free Gaussian elimination."""
    a = [row[:] for row in mat]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def minors(m: list[list[int]], order: int):
    """All order x order minors as ((rows, cols), determinant) pairs."""
    d = len(m)
    if not 1 <= order <= d:
        raise ValueError(f"minor order must lie in [1, {d}], got {order}")
    if d > MAX_MINOR_DIM:
        raise ValueError(f"minor enumeration capped at dimension {MAX_MINOR_DIM}")
    for rows in combinations(range(d), order):
        for cols in combinations(range(d), order):
            sub = [[m[r][c] for c in cols] for r in rows]
            yield (rows, cols), det_bareiss(sub)


def min_minor(m: list[list[int]], order: int) -> int:
    """Minimum over all order x order minors (exact)."""
    return min(det for _, det in minors(m, order))
