import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from edr import sorting
from edr.reward import DiscountSpec

import oracles

LN2 = math.log(2)


def test_mergesort_costs_small():
    assert [sorting.mergesort_cost(n) for n in range(1, 9)] == [0, 2, 5, 8, 12, 16, 20, 24]


@pytest.mark.parametrize("n", range(0, 300))
def test_mergesort_cost_matches_recursion(n):
    assert sorting.mergesort_cost(n) == oracles.mergesort_cost_recursive(n)


def test_quicksort_costs_s3():
    costs = dict(zip(itertools.permutations((1, 2, 3)), sorting.all_costs("quicksort", 3)))
    assert costs[(1, 2, 3)] == 9 and costs[(2, 1, 3)] == 8
    assert sorted(costs.values()) == [8, 8, 9, 9, 9, 9]


@pytest.mark.parametrize("n", range(0, 8))
def test_instrumented_costs_match_oracles(n):
    perms = list(itertools.permutations(range(1, n + 1)))
    assert sorting.all_costs("quicksort", n) == [oracles.quicksort_cost(p) for p in perms]
    assert sorting.all_costs("mergesort", n) == [oracles.mergesort_perm_cost(p) for p in perms]


def test_q3_closed_form():
    lam = 0.5
    expected = (2 * math.exp(-4.5) + math.exp(-4.0)) / 3
    assert sorting.quicksort_score_table(3, lam).value(3) == pytest.approx(expected, rel=1e-15)


def test_quicksort_at_ln2_is_4_pow_minus_n_over_factorial():
    table = sorting.quicksort_score_table(30, LN2)
    for n in range(31):
        expected = -n * math.log(4) - sorting.log_factorial(n)
        assert table.log_value(n) == pytest.approx(expected, rel=1e-13, abs=1e-13)


def test_average_cost():
    assert sorting.quicksort_avg_cost(3, exact=True) == Fraction(26, 3)
    assert sorting.quicksort_avg_cost(3, exact=True) == Fraction(sum(sorting.all_costs("quicksort", 3)), 6)
    assert sorting.harmonic(4, exact=True) == Fraction(25, 12)


def test_large_n_stays_finite():
    table = sorting.quicksort_score_table(2000, 0.3)
    assert math.isfinite(table.log_value(2000)) and table.value(2000) == 0.0
    assert sorting.exact_log_score("mergesort", 10 ** 6, 0.3) < -1e6


def test_rejects_non_permutation():
    with pytest.raises(ValueError):
        sorting.run_instrumented_sort("quicksort", [1, 1, 2])
    with pytest.raises(ValueError):
        sorting.run_instrumented_sort("heapsort", [1])


def test_enumeration_limit():
    with pytest.raises(ValueError):
        sorting.all_costs("quicksort", sorting.BRUTE_FORCE_MAX_N + 1)


def test_bounds_domain():
    with pytest.raises(ValueError):
        sorting.closed_form_bounds("quicksort", 5, 1.0)
    with pytest.raises(ValueError):
        sorting.closed_form_bounds("mergesort", 0, 0.3)


def test_spec_or_float_rate():
    spec = DiscountSpec.exponential(0.3)
    assert sorting.exact_log_score("quicksort", 7, spec) == sorting.exact_log_score("quicksort", 7, 0.3)


@given(st.permutations(list(range(1, 8))))
def test_mergesort_never_costs_more(perm):
    m = sorting.run_instrumented_sort("mergesort", perm).steps
    q = sorting.run_instrumented_sort("quicksort", perm).steps
    assert m <= q


@given(st.integers(1, 60), st.floats(0.01, LN2))
def test_bounds_sandwich_property(n, lam):
    for alg in sorting.ALGORITHMS:
        lo, hi = sorting.closed_form_log_bounds(alg, n, lam)
        exact = sorting.exact_log_score(alg, n, lam)
        slack = 1e-12 * max(1.0, abs(exact))
        assert lo - slack <= exact <= hi + slack
