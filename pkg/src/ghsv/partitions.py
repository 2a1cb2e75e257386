"""Set partitions of {1..n}, s-paths and exhaustive enumeration for small n."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Partition",
    "SPath",
    "EnumerationGuardError",
    "validate_spath",
    "partition_to_spath",
    "enumerate_partitions",
    "enumerate_spaths",
    "spath_multiplicity",
    "bell_number",
    "catalan_number",
]

MAX_PARTITION_N = 10
MAX_SPATH_N = 12


class EnumerationGuardError(ValueError):
    """Requested enumeration is too large for exhaustive treatment."""


class Partition:
    """Partition of ``{1..n}`` in canonical form (cells sorted, ordered by minimum)."""

    __slots__ = ("cells", "n")

    def __init__(self, cells: Iterable[Iterable[int]], n: int | None = None):
        cs = [tuple(sorted(int(i) for i in c)) for c in cells]
        if any(len(c) == 0 for c in cs):
            raise ValueError("cells must be non-empty")
        cs.sort(key=lambda c: c[0])
        flat = [i for c in cs for i in c]
        n = len(flat) if n is None else int(n)
        if sorted(flat) != list(range(1, n + 1)):
            raise ValueError(f"cells do not form a disjoint cover of 1..{n}")
        self.cells = tuple(cs)
        self.n = n

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """From per-index labels (any hashable values)."""
        groups: dict = {}
        for i, lab in enumerate(labels, start=1):
            groups.setdefault(lab, []).append(i)
        return cls(groups.values(), len(labels))

    def labels(self) -> np.ndarray:
        """0-based cell index for every element."""
        out = np.empty(self.n, dtype=np.int64)
        for j, c in enumerate(self.cells):
            out[np.asarray(c) - 1] = j
        return out

    @property
    def sizes(self) -> tuple:
        return tuple(len(c) for c in self.cells)

    @property
    def i_stars(self) -> tuple:
        return tuple(c[0] for c in self.cells)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __eq__(self, other):
        return isinstance(other, Partition) and self.cells == other.cells

    def __hash__(self):
        return hash(self.cells)

    def __repr__(self):
        inner = ", ".join("{" + ",".join(map(str, c)) + "}" for c in self.cells)
        return f"Partition({inner})"


class SPath(tuple):
    """``m = (m_1..m_n)``: ``m_i`` is the size of the cell whose minimum is ``i``."""

    def __new__(cls, m: Iterable[int]):
        return super().__new__(cls, (int(v) for v in m))

    @property
    def n(self) -> int:
        return len(self)

    @property
    def xi(self) -> tuple:
        return tuple(int(v > 0) for v in self)

    def is_valid(self) -> bool:
        return validate_spath(self)


def validate_spath(m: Sequence[int]) -> bool:
    """Prefix sums ``S_j >= j`` for ``j < n`` and ``S_n = n``, all entries >= 0."""
    n = len(m)
    if n < 1:
        raise ValueError("s-path must have length >= 1")
    if any(int(v) != v or v < 0 for v in m):
        return False
    s = np.cumsum(m)
    if s[-1] != n:
        return False
    return bool(np.all(s[:-1] >= np.arange(1, n)))


def partition_to_spath(p: Partition) -> SPath:
    m = [0] * p.n
    for c in p.cells:
        m[c[0] - 1] = len(c)
    return SPath(m)


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def catalan_number(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def _restricted_growth(n):
    a = [0] * n
    yield tuple(a)
    while True:
        # increment the rightmost position that can grow
        i = n - 1
        while i > 0 and a[i] > max(a[:i]):
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, n):
            a[j] = 0
        yield tuple(a)


def enumerate_partitions(n: int) -> list:
    """All ``Bell(n)`` partitions of ``{1..n}``; ``n <= 10``."""
    if n > MAX_PARTITION_N:
        raise EnumerationGuardError(f"n={n} exceeds the enumeration guard {MAX_PARTITION_N}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return [Partition.from_labels(rg) for rg in _restricted_growth(n)]


@lru_cache(maxsize=None)
def _spaths(n):
    out = []

    def rec(prefix, total):
        j = len(prefix)
        if j == n:
            if total == n:
                out.append(SPath(prefix))
            return
        # after position j+1 the prefix sum must reach j+1 (or n at the end)
        need = (j + 1) if j + 1 < n else n
        for v in range(max(0, need - total), n - total + 1):
            rec(prefix + (v,), total + v)

    rec((), 0)
    return tuple(out)


def enumerate_spaths(n: int) -> list:
    """All members of the s-path space for ``n <= 12``."""
    if n > MAX_SPATH_N:
        raise EnumerationGuardError(f"n={n} exceeds the enumeration guard {MAX_SPATH_N}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return list(_spaths(n))


def log_spath_multiplicity(m: Sequence[int]) -> float:
    """``log`` of the number of partitions mapping onto ``m``.

    Index ``j`` with ``m_j = 0`` joins one of the ``S_{j-1} - (j-1)`` open
    slots; slots inside a cell are exchangeable, hence the factorials.
    """
    s = 0
    out = 0.0
    for j, v in enumerate(m, start=1):
        if v == 0:
            free = s - (j - 1)
            if free <= 0:
                return -math.inf
            out += math.log(free)
        else:
            out -= math.lgamma(v)
        s += v
    return out


def spath_multiplicity(m: Sequence[int]) -> int:
    return int(round(math.exp(log_spath_multiplicity(m))))
