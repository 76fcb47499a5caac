"""Exact crater/mound combinatorics on permutation windows.

Crater at a site corresponds to a peak of the last-hit rank permutation
(``a[j-1] < a[j] > a[j+1]``), a mound to a valley.  Positions 0 and
``m-1`` of a window are never classified.

Everything here is an exact :class:`fractions.Fraction`.  Brute-force
window enumeration is the independent check on the closed forms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from ._backend import kernels
from .errors import BudgetError, ValidationError

ExactProb = Fraction

MAX_WINDOW = 12


def peak_set(perm: Sequence[int]) -> frozenset[int]:
    return frozenset(i for i in range(1, len(perm) - 1) if perm[i - 1] < perm[i] > perm[i + 1])


def valley_set(perm: Sequence[int]) -> frozenset[int]:
    return frozenset(i for i in range(1, len(perm) - 1) if perm[i - 1] > perm[i] < perm[i + 1])


def _mask_sets(mask: int, m: int) -> tuple[frozenset[int], frozenset[int]]:
    """Peak and valley positions of any permutation with descent mask ``mask``."""
    desc = [(mask >> t) & 1 for t in range(m - 1)]
    peaks = frozenset(i for i in range(1, m - 1) if not desc[i - 1] and desc[i])
    valleys = frozenset(i for i in range(1, m - 1) if desc[i - 1] and not desc[i])
    return peaks, valleys


class ShapePredicate:
    """Predicate on a window that depends only on its peak and valley positions.

    ``peaks``/``valleys`` given as sets mean "exactly these"; ``None``
    leaves that side unconstrained.  ``test`` is an optional extra
    callable ``(peaks, valleys) -> bool``.
    """

    def __init__(self, m: int, peaks: Iterable[int] | None = None,
                 valleys: Iterable[int] | None = None,
                 test: Callable[[frozenset, frozenset], bool] | None = None):
        self.m = m
        self.peaks = None if peaks is None else frozenset(peaks)
        self.valleys = None if valleys is None else frozenset(valleys)
        self.test = test

    def _ok(self, peaks, valleys) -> bool:
        if self.peaks is not None and peaks != self.peaks:
            return False
        if self.valleys is not None and valleys != self.valleys:
            return False
        return self.test is None or self.test(peaks, valleys)

    def __call__(self, perm: Sequence[int]) -> bool:
        return self._ok(peak_set(perm), valley_set(perm))

    def accepts_mask(self, mask: int) -> bool:
        return self._ok(*_mask_sets(mask, self.m))


_DESCENT_CACHE: dict[int, tuple[int, ...]] = {}


def descent_histogram(m: int) -> tuple[int, ...]:
    """Counts of all ``m!`` permutations by descent mask, by full enumeration."""
    if m > MAX_WINDOW:
        raise BudgetError(f"window length {m} exceeds enumeration cap {MAX_WINDOW}")
    if m not in _DESCENT_CACHE:
        _DESCENT_CACHE[m] = tuple(int(c) for c in kernels.descent_counts(m))
    return _DESCENT_CACHE[m]


def _dfs_count(m: int, pred, prefix_ok) -> int:
    count = 0
    used = [False] * m
    prefix: list[int] = []

    def rec():
        nonlocal count
        if len(prefix) == m:
            if pred(tuple(prefix)):
                count += 1
            return
        for x in range(m):
            if not used[x]:
                used[x] = True
                prefix.append(x)
                if prefix_ok(prefix):
                    rec()
                prefix.pop()
                used[x] = False

    rec()
    return count


def enumerate_window_probability(m: int, predicate, max_window: int = MAX_WINDOW) -> Fraction:
    """Fraction of the ``m!`` permutations of a window satisfying ``predicate``.

    :class:`ShapePredicate` instances are resolved through the compiled
    enumeration of ``S_m`` by descent mask.  Other predicates are called
    on every permutation, skipping subtrees whose prefix fails
    ``predicate.prefix_ok`` when that method exists.
    """
    if m < 1:
        raise ValidationError("window length must be positive")
    if m > max_window:
        raise BudgetError(f"window length {m} exceeds enumeration cap {max_window}")
    total = math.factorial(m)
    if isinstance(predicate, ShapePredicate):
        if predicate.m != m:
            raise ValidationError("predicate built for a different window length")
        hist = descent_histogram(m)
        hits = sum(c for mask, c in enumerate(hist) if c and predicate.accepts_mask(mask))
        return Fraction(hits, total)
    prefix_ok = getattr(predicate, "prefix_ok", None)
    if prefix_ok is not None:
        return Fraction(_dfs_count(m, predicate, prefix_ok), total)
    hits = sum(1 for p in itertools.permutations(range(m)) if predicate(p))
    return Fraction(hits, total)


# Closed forms ------------------------------------------------------------

P0 = Fraction(1, 3)


def closed_p(n: int) -> Fraction:
    """Probability that a crater is followed by exactly ``n`` non-craters: ``n(n+3)2^(n+1)/(n+4)!``."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if n == 0:
        return P0
    return Fraction(n * (n + 3) * 2 ** (n + 1), math.factorial(n + 4))


def closed_phat(n: int) -> Fraction:
    """Probability that ``n`` given consecutive sites are all non-craters: ``2^(n+1)/(n+2)!``."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    return Fraction(2 ** (n + 1), math.factorial(n + 2))


def closed_A(i: int, j: int) -> Fraction:
    """Crater followed by gaps of exactly ``i`` then ``j`` non-craters."""
    if i < 1 or j < 1:
        raise ValidationError("i and j must be >= 1")
    s = i + j
    C = math.comb
    bracket = (s + 4) * (j * C(s + 1, i - 1) + (j + 1) * C(s + 1, i) + (i + 1) * C(s + 1, i + 1)
                         + i * C(s + 1, i + 2) - 2 * (s + 1)) + i * j * C(s + 4, i + 2)
    return Fraction(2 ** s * bracket, math.factorial(s + 5))


def closed_B_literal(i: int, j: int) -> Fraction:
    """``2(i+j+4)/(i+j+5)! [C(i+j+1, i+1) + (i+1) C(i+j+2, i+2)]`` taken verbatim.

    Not symmetric in ``(i, j)`` and disagrees with enumeration off the
    diagonal; its row sums over ``i + j = n - 1`` still equal ``closed_p(n)``.
    :func:`closed_B` is the corrected form.
    """
    if i < 0 or j < 0:
        raise ValidationError("i and j must be >= 0")
    s = i + j
    return Fraction(2 * (s + 4) * (math.comb(s + 1, i + 1) + (i + 1) * math.comb(s + 2, i + 2)),
                    math.factorial(s + 5))


def closed_B(i: int, j: int) -> Fraction:
    """Crater, ``i`` plain sites, mound, ``j`` plain sites, crater.

    Equal to the mean of :func:`closed_B_literal` at ``(i, j)`` and
    ``(j, i)``; this matches enumeration exactly.
    """
    return (closed_B_literal(i, j) + closed_B_literal(j, i)) / 2


def series_partial_sums(N: int) -> tuple[Fraction, Fraction]:
    """``(p_0 + sum_{n<=N} p_n, sum_{n<=N} n p_n)``; both tend to 2/3."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    ps = [closed_p(n) for n in range(1, N + 1)]
    return P0 + sum(ps, Fraction(0)), sum((n * p for n, p in enumerate(ps, start=1)), Fraction(0))


# Window events as predicates ----------------------------------------------

def run_event(n: int) -> ShapePredicate:
    """Window of length ``n+4``: craters at 1 and ``n+2``, none in between."""
    if n == 0:
        return ShapePredicate(3, peaks={1})
    return ShapePredicate(n + 4, peaks={1, n + 2})


def nonpeak_event(n: int) -> ShapePredicate:
    """Window of length ``n+2`` with no interior peak."""
    return ShapePredicate(n + 2, peaks=())


def a_event(i: int, j: int) -> ShapePredicate:
    return ShapePredicate(i + j + 5, peaks={1, i + 2, i + j + 3})


def b_event(i: int, j: int) -> ShapePredicate:
    return ShapePredicate(i + j + 5, peaks={1, i + j + 3}, valleys={i + 2})


# Pattern families and CLT parameters --------------------------------------

def _ranks(w: Sequence[int]) -> tuple[int, ...]:
    order = sorted(range(len(w)), key=w.__getitem__)
    r = [0] * len(w)
    for rank, idx in enumerate(order):
        r[idx] = rank
    return tuple(r)


@dataclass(frozen=True)
class PatternSpec:
    """Family of relative-order patterns; occurrence at ``j`` when the window from ``j`` matches one."""

    patterns: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        norm = []
        for p in self.patterns:
            p = tuple(int(x) for x in p)
            if not p or len(set(p)) != len(p):
                raise ValidationError(f"pattern {p} must be nonempty with distinct entries")
            if len(p) > MAX_WINDOW:
                raise BudgetError(f"pattern length {len(p)} exceeds {MAX_WINDOW}")
            norm.append(_ranks(p))
        object.__setattr__(self, "patterns", tuple(sorted(set(norm))))

    @property
    def max_len(self) -> int:
        return max((len(p) for p in self.patterns), default=0)

    def occurs_at(self, seq: Sequence, j: int) -> bool:
        for p in self.patterns:
            w = seq[j:j + len(p)]
            if len(w) == len(p) and _ranks(w) == p:
                return True
        return False

    def prefix_consistent(self, seq: Sequence, j: int) -> bool:
        """Could the partial window starting at ``j`` still complete to a match?"""
        for p in self.patterns:
            w = seq[j:j + len(p)]
            if _ranks(w) == _ranks(p[:len(w)]):
                return True
        return False


CRATER_SPEC = PatternSpec(((0, 2, 1), (1, 2, 0)))
MOUND_SPEC = PatternSpec(((1, 0, 2), (2, 0, 1)))


class _JointOccurrence:
    """Pattern occurs at every start in ``starts`` of a window of length ``m``."""

    def __init__(self, spec: PatternSpec, starts: Sequence[int]):
        self.spec = spec
        self.starts = tuple(starts)

    def __call__(self, perm) -> bool:
        return all(self.spec.occurs_at(perm, s) for s in self.starts)

    def prefix_ok(self, prefix) -> bool:
        return all(self.spec.prefix_consistent(prefix, s) for s in self.starts if s < len(prefix))


@dataclass(frozen=True)
class CLTParams:
    mu: Fraction
    sigma2: Fraction
    covariances: tuple[Fraction, ...]

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def clt_params(spec: PatternSpec, max_window: int = MAX_WINDOW) -> CLTParams:
    """Mean and asymptotic variance per site of the pattern-occurrence count.

    ``sigma2 = Var xi_1 + 2 sum_{lag=1..b} Cov(xi_1, xi_{1+lag})`` with
    every joint probability from window enumeration.
    """
    b = spec.max_len
    if b == 0:
        return CLTParams(Fraction(0), Fraction(0), ())
    if 2 * b > max_window:
        raise BudgetError(f"pattern length {b} needs windows of {2 * b} > {max_window}")
    mu = enumerate_window_probability(b, _JointOccurrence(spec, (0,)), max_window)
    covs = []
    for lag in range(1, b + 1):
        joint = enumerate_window_probability(b + lag, _JointOccurrence(spec, (0, lag)), max_window)
        covs.append(joint - mu * mu)
    sigma2 = mu * (1 - mu) + 2 * sum(covs, Fraction(0))
    return CLTParams(mu, sigma2, tuple(covs))


def probability_table(p_range: Iterable[int] = (), phat_range: Iterable[int] = (),
                      a_pairs: Iterable[tuple[int, int]] = (),
                      b_pairs: Iterable[tuple[int, int]] = ()) -> list[dict]:
    """Rows ``{quantity, i, j, fraction, decimal}`` for the oracle CLI."""
    rows = []

    def add(q, i, j, val):
        rows.append({"quantity": q, "i": i, "j": j, "fraction": str(val), "decimal": float(val)})

    for n in p_range:
        add("p", n, None, closed_p(n))
    for n in phat_range:
        add("phat", n, None, closed_phat(n))
    for i, j in a_pairs:
        add("A", i, j, closed_A(i, j))
    for i, j in b_pairs:
        add("B", i, j, closed_B(i, j))
    return rows
