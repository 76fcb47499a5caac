import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from meteor.errors import BudgetError, ValidationError
from meteor.oracle import (CRATER_SPEC, MOUND_SPEC, PatternSpec, ShapePredicate, a_event, b_event,
                           clt_params, closed_A, closed_B, closed_B_literal, closed_p, closed_phat,
                           descent_histogram, enumerate_window_probability, nonpeak_event, peak_set,
                           probability_table, run_event, series_partial_sums, valley_set)


def brute(m, pred):
    perms = list(itertools.permutations(range(m)))
    return Fraction(sum(1 for p in perms if pred(p)), len(perms))


def test_peak_and_valley_sets_interior_only():
    assert peak_set((0, 2, 1, 4, 3)) == {1, 3}
    assert valley_set((0, 2, 1, 4, 3)) == {2}
    assert peak_set((3, 0, 1, 2)) == frozenset()


def test_enumeration_examples():
    assert enumerate_window_probability(3, ShapePredicate(3, peaks={1})) == Fraction(1, 3)
    # peaks exactly at positions 2 and 4 (1-based)
    assert enumerate_window_probability(5, ShapePredicate(5, peaks={1, 3})) == Fraction(16, 120)
    assert enumerate_window_probability(1, lambda p: True) == 1


def test_shape_path_matches_brute_force():
    for m in range(3, 8):
        for pred in (ShapePredicate(m, peaks={1}), ShapePredicate(m, valleys={m - 2}),
                     ShapePredicate(m, peaks=(), valleys=None)):
            assert enumerate_window_probability(m, pred) == brute(m, pred)


def test_descent_histogram_sums_to_factorial():
    for m in range(1, 10):
        assert sum(descent_histogram(m)) == math.factorial(m)
    # Eulerian numbers for m = 4 grouped by descent count
    h = descent_histogram(4)
    by_count = [0] * 4
    for mask, c in enumerate(h):
        by_count[bin(mask).count("1")] += c
    assert by_count == [1, 11, 11, 1]


def test_enumeration_budget():
    with pytest.raises(BudgetError):
        enumerate_window_probability(13, ShapePredicate(13, peaks={1}))
    with pytest.raises(BudgetError):
        enumerate_window_probability(6, lambda p: True, max_window=5)
    with pytest.raises(ValidationError):
        enumerate_window_probability(0, lambda p: True)


def test_closed_p_values():
    assert closed_p(0) == Fraction(1, 3)
    assert closed_p(1) == Fraction(2, 15)
    assert closed_p(2) == Fraction(1, 9)
    for n in range(1, 7):
        assert closed_p(n) == enumerate_window_probability(n + 4, run_event(n))


def test_closed_p_super_exponential_decay():
    for n in range(4, 40):
        assert closed_p(n + 1) / closed_p(n) < Fraction(2, n + 1)
    # successive ratios go to zero, so no geometric rate can dominate
    ratios = [float(closed_p(n + 1) / closed_p(n)) for n in (10, 100, 1000)]
    assert ratios[0] > ratios[1] > ratios[2] and ratios[2] < 0.003


def test_closed_phat_values():
    assert closed_phat(1) == Fraction(2, 3) == 1 - closed_p(0)
    assert closed_phat(2) == Fraction(1, 3)
    for n in range(1, 7):
        assert closed_phat(n) == enumerate_window_probability(n + 2, nonpeak_event(n))


def test_p_phat_identity():
    for n in range(1, 31):
        assert closed_p(n) == closed_phat(n) - 2 * closed_phat(n + 1) + closed_phat(n + 2)


def test_closed_A():
    assert closed_A(1, 1) == Fraction(17, 315)
    for i in range(1, 5):
        for j in range(1, 6 - i):
            assert closed_A(i, j) == enumerate_window_probability(i + j + 5, a_event(i, j))


def test_gap_independence_only_at_two():
    p0 = closed_p(0)
    for j in range(1, 11):
        assert closed_A(2, j) / p0 == (closed_p(2) / p0) * (closed_p(j) / p0)
    for i in (1, 3):
        assert any(closed_A(i, j) / p0 != (closed_p(i) / p0) * (closed_p(j) / p0) for j in range(1, 11))


def test_closed_B():
    assert closed_B(0, 0) == Fraction(2, 15)
    for i in range(0, 6):
        for j in range(0, 6 - i):
            assert closed_B(i, j) == enumerate_window_probability(i + j + 5, b_event(i, j))
    for i in range(9):
        for j in range(9):
            assert closed_B(i, j) == closed_B(j, i)


def test_closed_B_sums_to_run_probability():
    for n in range(1, 9):
        assert sum(closed_B(i, n - 1 - i) for i in range(n)) == closed_p(n)


def test_literal_B_is_asymmetric_and_symmetrized_average():
    assert closed_B_literal(0, 1) != closed_B_literal(1, 0)
    for i in range(5):
        for j in range(5):
            assert closed_B(i, j) == (closed_B_literal(i, j) + closed_B_literal(j, i)) / 2


def test_series_partial_sums():
    s0, s1 = series_partial_sums(1)
    assert s0 == Fraction(7, 15)
    assert s1 == Fraction(2, 15)
    s0, s1 = series_partial_sums(30)
    assert abs(float(s0) - 2 / 3) < 1e-12
    assert abs(float(s1) - 2 / 3) < 1e-12


def test_pattern_spec_normalizes_and_validates():
    assert PatternSpec(((10, 30, 20),)).patterns == ((0, 2, 1),)
    with pytest.raises(ValidationError):
        PatternSpec(((1, 1, 2),))
    with pytest.raises(ValidationError):
        PatternSpec(((),))
    with pytest.raises(BudgetError):
        PatternSpec((tuple(range(13)),))
    assert CRATER_SPEC.occurs_at((0, 5, 2, 1), 0)
    assert not CRATER_SPEC.occurs_at((0, 5, 2, 1), 1)


def test_crater_clt_constants():
    par = clt_params(CRATER_SPEC)
    assert par.mu == Fraction(1, 3)
    assert par.sigma2 == Fraction(2, 45)
    assert par.covariances == (Fraction(-1, 9), Fraction(1, 45), Fraction(0))
    assert clt_params(MOUND_SPEC).sigma2 == Fraction(2, 45)


def test_clt_budget():
    with pytest.raises(BudgetError):
        clt_params(PatternSpec((tuple(range(7)),)))


def test_probability_table_rows():
    rows = probability_table([1], [2], [(1, 1)], [(0, 0)])
    assert [(r["quantity"], r["fraction"]) for r in rows] == [
        ("p", "2/15"), ("phat", "1/3"), ("A", "17/315"), ("B", "2/15")]


@given(st.lists(st.permutations(range(4)), min_size=1, max_size=3, unique_by=tuple))
def test_clt_variance_nonnegative(pats):
    par = clt_params(PatternSpec(tuple(tuple(p) for p in pats)))
    assert par.sigma2 >= 0
    assert 0 <= par.mu <= 1


@given(st.integers(0, 40))
def test_outputs_are_probabilities(n):
    for v in (closed_p(n), closed_phat(max(n, 1)), closed_B(n % 7, n // 7)):
        assert 0 <= v <= 1


@given(st.integers(6, 30))
def test_tail_ratio_bound(N):
    tail = Fraction(2, 3) - series_partial_sums(N)[0]
    assert float(tail) < 2 * float(closed_p(N))
