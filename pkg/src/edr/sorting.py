"""Scores of mergesort (M) and quicksort (Q) under uniformly random permutations.

Cost model (comparisons only):

* mergesort splits ceil/floor and merges with sentinels, so a merge of
  runs of sizes a and b makes exactly a + b comparisons;
* quicksort takes the first element as pivot and a call on a subarray of
  size n >= 1 is charged n + 1 comparisons (the n - 1 pivot comparisons of
  the partition plus the two sentinel-stopped scan comparisons of the
  textbook partitioning loop); an empty call is free.

With these rules m_n = exp(-lam * c_M(n)) where
c_M(n) = n*ceil(lg n) + n - 2**ceil(lg n), and
q_n = exp(-lam (n+1)) / n * sum_k q_{k-1} q_{n-k}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .reward import CostOutcome, DiscountSpec, logsumexp

EULER_GAMMA = 0.57721566490153286060651209008240243
LN2 = math.log(2.0)

MERGESORT = "mergesort"
QUICKSORT = "quicksort"
ALGORITHMS = (MERGESORT, QUICKSORT)

BRUTE_FORCE_MAX_N = 9


def _check_alg(alg: str) -> None:
    if alg not in ALGORITHMS:
        raise ValueError(f"unknown sorting algorithm {alg!r}; expected one of {ALGORITHMS}")


def _rate(spec) -> float:
    if isinstance(spec, DiscountSpec):
        return spec.rate
    rate = float(spec)
    if not rate > 0:
        raise ValueError("discount rate must be positive")
    return rate


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def ceil_lg(n: int) -> int:
    return (n - 1).bit_length() if n >= 1 else 0


def mergesort_cost(n: int) -> int:
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n <= 1:
        return 0
    k = ceil_lg(n)
    return n * k + n - (1 << k)


def mergesort_cost_sum(n: int) -> int:
    """sum_{k=1}^{n-1} (floor(lg k) + 2)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return sum(k.bit_length() + 1 for k in range(1, n))


def mergesort_cost_sum_table(n_max: int) -> list:
    """``mergesort_cost_sum(n)`` for n = 0..n_max by running sums."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    out = [0] * (n_max + 1)
    for n in range(2, n_max + 1):
        out[n] = out[n - 1] + (n - 1).bit_length() + 1
    return out


def mergesort_log_score(n: int, spec) -> float:
    return -_rate(spec) * mergesort_cost(n)


def mergesort_score(n: int, spec) -> float:
    return math.exp(mergesort_log_score(n, spec))


def harmonic(n: int, exact: bool = False):
    """H_n by direct summation."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if exact:
        return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))
    return math.fsum(1.0 / k for k in range(1, n + 1))


def quicksort_avg_cost(n: int, exact: bool = False):
    """E[c_Q(Pi_n)] = 2 (n+1) (H_{n+1} - 1)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return 2 * (n + 1) * (harmonic(n + 1, exact) - 1)


def log_factorial(n: int) -> float:
    if n < 0:
        raise ValueError("n must be nonnegative")
    return math.fsum(math.log(k) for k in range(2, n + 1))


# ---------------------------------------------------------------------------
# quicksort recurrence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreTable:
    alg: str
    rate: float
    log_values: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.log_values) - 1

    def log_value(self, n: int) -> float:
        return float(self.log_values[n])

    def value(self, n: int) -> float:
        return math.exp(self.log_values[n])


def quicksort_score_table(n_max: int, spec) -> ScoreTable:
    """log q_0 .. log q_{n_max} from the recurrence, O(n_max**2)."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    lam = _rate(spec)
    logs = np.zeros(n_max + 1)
    for n in range(1, n_max + 1):
        pair = logs[:n] + logs[n - 1::-1]
        top = pair.max()
        lse = top + math.log(math.fsum(np.exp(pair - top)))
        logs[n] = -lam * (n + 1) - math.log(n) + lse
    logs.setflags(write=False)
    return ScoreTable(QUICKSORT, lam, logs)


def mergesort_score_table(n_max: int, spec) -> ScoreTable:
    lam = _rate(spec)
    logs = np.array([-lam * mergesort_cost(n) for n in range(n_max + 1)], dtype=float)
    logs.setflags(write=False)
    return ScoreTable(MERGESORT, lam, logs)


def score_table(alg: str, n_max: int, spec) -> ScoreTable:
    _check_alg(alg)
    if alg == MERGESORT:
        return mergesort_score_table(n_max, spec)
    return quicksort_score_table(n_max, spec)


# ---------------------------------------------------------------------------
# instrumented sorts
# ---------------------------------------------------------------------------

class _Counter:
    __slots__ = ("count",)

    def __init__(self):
        self.count = 0


def _mergesort(a: list, ctr: _Counter) -> list:
    n = len(a)
    if n <= 1:
        return list(a)
    mid = (n + 1) // 2
    left = _mergesort(a[:mid], ctr) + [math.inf]
    right = _mergesort(a[mid:], ctr) + [math.inf]
    out = []
    i = j = 0
    for _ in range(n):
        ctr.count += 1
        if left[i] <= right[j]:
            out.append(left[i])
            i += 1
        else:
            out.append(right[j])
            j += 1
    return out


def _quicksort(a: list, ctr: _Counter) -> list:
    n = len(a)
    if n == 0:
        return []
    pivot = a[0]
    less, greater = [], []
    for x in a[1:]:
        ctr.count += 1
        (less if x < pivot else greater).append(x)
    ctr.count += 2  # sentinel-stopped scan overhead
    return _quicksort(less, ctr) + [pivot] + _quicksort(greater, ctr)


def _check_permutation(perm: Sequence[int]) -> list:
    a = list(perm)
    if sorted(a) != list(range(1, len(a) + 1)):
        raise ValueError(f"input is not a permutation of 1..{len(a)}: {perm!r}")
    return a


def run_instrumented_sort(alg: str, perm: Sequence[int]) -> CostOutcome:
    _check_alg(alg)
    a = _check_permutation(perm)
    ctr = _Counter()
    out = (_mergesort if alg == MERGESORT else _quicksort)(a, ctr)
    assert out == sorted(a), "instrumented sort produced unsorted output"
    return CostOutcome.halted(ctr.count)


def all_costs(alg: str, n: int) -> list[int]:
    """Cost of every permutation of 1..n, in lexicographic permutation order."""
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"n={n} too large for enumeration (max {BRUTE_FORCE_MAX_N})")
    return [
        run_instrumented_sort(alg, perm).steps
        for perm in itertools.permutations(range(1, n + 1))
    ]


def score_bruteforce(alg: str, n: int, spec) -> float:
    """(1/n!) sum over S_n of exp(-lam c(pi)), by running every permutation."""
    lam = _rate(spec)
    costs = all_costs(alg, n)
    log_terms = [-lam * c for c in costs]
    return math.exp(logsumexp(log_terms) - log_factorial(n))


def quicksort_score_bruteforce(n: int, spec) -> float:
    return score_bruteforce(QUICKSORT, n, spec)


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def closed_form_log_bounds(alg: str, n: int, spec) -> tuple[float, float]:
    """Log of the closed-form lower/upper bounds on m_n or q_n."""
    _check_alg(alg)
    lam = _rate(spec)
    if alg == MERGESORT:
        if n < 1:
            raise ValueError("mergesort bounds need n >= 1")
        lf = (lam / LN2) * log_factorial(n - 1)
        return -2 * lam * (n - 1) - lf, -lam * (n - 1) - lf
    if n < 0:
        raise ValueError("n must be nonnegative")
    if lam > LN2:
        raise ValueError(f"quicksort bounds need 0 < lambda <= ln 2, got {lam!r}")
    lower = (
        -2 * EULER_GAMMA * lam * (n + 1)
        - lam
        + lam * math.log(2 * math.pi * (n + 1))
        - 2 * lam * log_factorial(n + 1)
    )
    upper = -2 * lam * n - (lam / LN2) * log_factorial(n)
    return lower, upper


def closed_form_bounds(alg: str, n: int, spec) -> tuple[float, float]:
    lo, hi = closed_form_log_bounds(alg, n, spec)
    return math.exp(lo), math.exp(hi)


def exact_log_score(alg: str, n: int, spec) -> float:
    _check_alg(alg)
    if alg == MERGESORT:
        return mergesort_log_score(n, spec)
    return quicksort_score_table(n, spec).log_value(n)
