import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from meteor.stats import (Estimate, batch_means, chi_square_uniform, combined_stderr, exact, iid_estimate,
                          ks_distance, ks_pvalue, ratio_batch_means, wilson_interval)


def test_iid_estimate_known_values():
    e = iid_estimate([1.0, 2.0, 3.0, 4.0])
    assert e.mean == 2.5
    assert e.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert e.n_samples == 4
    assert math.isnan(iid_estimate([]).mean)
    assert iid_estimate([5.0]).stderr == math.inf


def test_exact_estimate():
    e = exact(0.25)
    assert e.stderr == 0.0 and e.method == "exact"
    assert e.within(0.25) and not e.within(0.2500001)
    assert e.as_dict()["mean"] == 0.25


def test_batch_means_covers_truth_for_ar1():
    rng = np.random.default_rng(1)
    hits = 0
    for _ in range(100):
        eps = rng.standard_normal(20_000)
        x = np.empty_like(eps)
        x[0] = eps[0]
        for i in range(1, len(x)):
            x[i] = 0.9 * x[i - 1] + eps[i]
        hits += batch_means(x).within(0.0, 2.0)
    assert hits >= 85


def test_batch_means_short_series():
    assert batch_means([1.0]).stderr == math.inf
    e = batch_means(np.arange(41.0))
    assert e.mean == 20.0 and e.n_samples == 41


def test_ratio_batch_means():
    num = np.arange(1, 101, dtype=float)
    e = ratio_batch_means(num, 2 * num)
    assert e.mean == 0.5 and e.stderr == pytest.approx(0.0, abs=1e-15)


@given(st.integers(0, 200), st.integers(1, 200))
def test_wilson_interval_contains_point(s, n):
    s = min(s, n)
    lo, hi = wilson_interval(s, n)
    assert 0.0 <= lo <= s / n <= hi <= 1.0


def test_wilson_empty():
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_ks_helpers():
    x = np.random.default_rng(2).exponential(size=5000)
    assert ks_distance(x, "expon") < 0.03
    assert ks_pvalue(x, "expon") > 0.01
    assert ks_pvalue(x + 0.2, "expon") < 1e-6
    assert ks_distance(x, sps.expon.cdf) == ks_distance(x, "expon")


def test_chi_square_and_combined():
    assert chi_square_uniform([100, 100, 100]) == 1.0
    assert chi_square_uniform([300, 0, 0]) < 1e-10
    a, b = Estimate(0, 3.0, 10), Estimate(0, 4.0, 10)
    assert combined_stderr(a, b) == 5.0
