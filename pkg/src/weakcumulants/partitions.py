"""Set partitions and the cumulant / anticumulant transforms.

Everything here works on an abstract *moment functional*: a map from
non-empty subsets of ``{1..n}`` (stored as ascending tuples) to complex
numbers. The same algebra therefore serves joint pointer moments and
arrow-ordered sequential weak values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Iterable, Mapping

from .errors import SizeError

MAX_N = 12

Subset = tuple[int, ...]


@dataclass(frozen=True)
class Partition:
    """A set partition of ``{1..n}``; blocks are ascending tuples."""

    n: int
    blocks: tuple[Subset, ...]

    def __post_init__(self):
        seen = sorted(i for b in self.blocks for i in b)
        if seen != list(range(1, self.n + 1)):
            raise ValueError(f"blocks {self.blocks} do not partition 1..{self.n}")
        for b in self.blocks:
            if not b or any(x >= y for x, y in zip(b, b[1:])):
                raise ValueError(f"block {b} must be non-empty and strictly ascending")

    def __len__(self):
        return len(self.blocks)


def _restricted_growth_strings(n: int):
    # a[0] = 0, a[i] <= 1 + max(a[:i]); lexicographic order
    a = [0] * n
    m = [0] * n

    def rec(i):
        if i == n:
            yield tuple(a)
            return
        for v in range(m[i - 1] + 2):
            a[i] = v
            m[i] = max(m[i - 1], v)
            yield from rec(i + 1)

    yield from rec(1)


@lru_cache(maxsize=None)
def _partitions_cached(n: int) -> tuple[Partition, ...]:
    out = []
    for rgs in _restricted_growth_strings(n):
        k = max(rgs) + 1
        blocks = [[] for _ in range(k)]
        for idx, label in enumerate(rgs, start=1):
            blocks[label].append(idx)
        out.append(Partition(n, tuple(tuple(b) for b in blocks)))
    return tuple(out)


def enumerate_partitions(n: int) -> list[Partition]:
    """All set partitions of ``{1..n}`` in restricted-growth-string order.

    The count is the Bell number ``B_n``.
    """
    if not isinstance(n, int) or not 1 <= n <= MAX_N:
        raise SizeError(f"partition ground set size must be in 1..{MAX_N}, got {n!r}")
    return list(_partitions_cached(n))


def cumulant_coefficient(k: int) -> int:
    """Weight ``(k-1)! (-1)^(k-1)`` of a k-block partition."""
    if k < 1:
        raise ValueError("k must be positive")
    return math.factorial(k - 1) * (-1) ** (k - 1)


class MomentFunctional:
    """Map from non-empty subsets of ``{1..n}`` to complex numbers.

    ``source`` is either a callable taking an ascending tuple of labels, or
    a mapping keyed by such tuples. Values are cached on first use.
    """

    def __init__(self, n: int, source: Callable[[Subset], complex] | Mapping[Subset, complex]):
        if n < 1:
            raise SizeError("moment functional needs n >= 1")
        self.n = n
        if callable(source):
            self._fn = source
        else:
            table = {tuple(sorted(k)): complex(v) for k, v in source.items()}
            missing = [s for s in all_subsets(n) if s not in table]
            if missing:
                raise ValueError(f"moment table is missing subsets {missing[:4]}...")
            self._fn = table.__getitem__
        self._cache: dict[Subset, complex] = {}

    def __call__(self, subset: Iterable[int]) -> complex:
        key = tuple(sorted(subset))
        if not key or key[0] < 1 or key[-1] > self.n:
            raise ValueError(f"subset {key} is not a non-empty subset of 1..{self.n}")
        if key not in self._cache:
            self._cache[key] = complex(self._fn(key))
        return self._cache[key]

    def table(self) -> dict[Subset, complex]:
        return {s: self(s) for s in all_subsets(self.n)}

    def scale(self) -> float:
        """Largest ``|m(S)|``, used to normalize tolerances."""
        return max(abs(v) for v in self.table().values())

    def restrict(self, subset: Iterable[int]) -> "MomentFunctional":
        """The functional on ``{1..|subset|}`` obtained by relabeling ``subset``."""
        labels = tuple(sorted(subset))
        return MomentFunctional(len(labels), lambda s: self(tuple(labels[i - 1] for i in s)))


def all_subsets(n: int) -> list[Subset]:
    """Non-empty subsets of ``{1..n}``, by size then lexicographically."""
    return [c for k in range(1, n + 1) for c in combinations(range(1, n + 1), k)]


def _partition_sum(m: MomentFunctional, weighted: bool) -> complex:
    total = 0j
    for part in enumerate_partitions(m.n):
        term = complex(cumulant_coefficient(len(part))) if weighted else 1 + 0j
        for block in part.blocks:
            term *= m(block)
        total += term
    return total


def cumulant(m: MomentFunctional) -> complex:
    """Joint cumulant: partition sum of block-moment products weighted by ``a_k``."""
    return _partition_sum(m, weighted=True)


def moments_from_cumulants(c: MomentFunctional) -> complex:
    """Inverse transform: the full moment as the unweighted partition sum of cumulants."""
    return _partition_sum(c, weighted=False)


def cumulant_table(m: MomentFunctional) -> dict[Subset, complex]:
    """Cumulant of every sub-collection ``S``, keyed by ``S``."""
    return {s: cumulant(m.restrict(s)) for s in all_subsets(m.n)}


def covariance(m: MomentFunctional) -> complex:
    """``<prod_i (q_i - <q_i>)>`` expanded in terms of the moments, for n in 2..4."""
    if m.n not in (2, 3, 4):
        raise SizeError(f"covariance is supported for n in 2..4, got n={m.n}")
    total = 0j
    full = set(range(1, m.n + 1))
    for k in range(0, m.n + 1):
        for s in combinations(range(1, m.n + 1), k):
            term = m(s) if s else 1 + 0j
            for i in full.difference(s):
                term *= -m((i,))
            total += term
    return total


def _check_split(n: int, s1: Iterable[int], s2: Iterable[int]) -> tuple[Subset, Subset]:
    a, b = tuple(sorted(set(s1))), tuple(sorted(set(s2)))
    if not a or not b:
        raise ValueError("both halves of the split must be non-empty")
    if set(a) & set(b):
        raise ValueError(f"subsets {a} and {b} overlap")
    if set(a) | set(b) != set(range(1, n + 1)):
        raise ValueError(f"subsets {a} and {b} do not cover 1..{n}")
    return a, b


def is_independent(m: MomentFunctional, s1: Iterable[int], s2: Iterable[int], tol: float = 1e-10) -> bool:
    """True if ``m`` factorizes across the split ``s1 | s2``.

    Every pair of non-empty ``S1' <= s1``, ``S2' <= s2`` must satisfy
    ``|m(S1' u S2') - m(S1') m(S2')| <= tol * scale`` with ``scale`` the
    largest ``|m(S)|`` (or 1 if that is zero).
    """
    a, b = _check_split(m.n, s1, s2)
    scale = m.scale() or 1.0
    for ka in range(1, len(a) + 1):
        for sa in combinations(a, ka):
            for kb in range(1, len(b) + 1):
                for sb in combinations(b, kb):
                    if abs(m(sa + sb) - m(sa) * m(sb)) > tol * scale:
                        return False
    return True
