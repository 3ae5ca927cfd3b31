"""Expected discounted reward: discounts, input models, certified score intervals.

The score of an algorithm A under an input measure P is

    S(A) = sum_w P(w) r(w) D(c_A(w))

with D(c) = exp(-lam * c) (or rho**c for a rational base), D(inf) = 0.
Float scores are carried in the log domain so that factorially small
values stay distinguishable; exact scores use ``fractions.Fraction``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Mapping, Optional, Union

PROB_TOLERANCE = 1e-12

Real = Union[float, Fraction, int]


class ModeError(ValueError):
    """Raised when float and exact-rational quantities are mixed."""


# ---------------------------------------------------------------------------
# log-domain helpers
# ---------------------------------------------------------------------------

def log_of(value: Real) -> float:
    """Natural log that maps 0 to -inf and handles huge Fractions."""
    if value < 0:
        raise ValueError(f"log of negative value {value}")
    if value == 0:
        return -math.inf
    if isinstance(value, Fraction):
        return math.log(value.numerator) - math.log(value.denominator)
    return math.log(value)


def logsumexp(terms) -> float:
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


# ---------------------------------------------------------------------------
# costs and discounts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostOutcome:
    """Step count of one run; ``steps is None`` means the run never halts."""

    steps: Optional[int]

    def __post_init__(self):
        if self.steps is not None and self.steps < 0:
            raise ValueError("step count must be nonnegative")

    @property
    def diverged(self) -> bool:
        return self.steps is None

    @classmethod
    def halted(cls, steps: int) -> "CostOutcome":
        return cls(int(steps))


DIVERGED = CostOutcome(None)


def as_cost(c: Union[CostOutcome, int, None]) -> CostOutcome:
    if isinstance(c, CostOutcome):
        return c
    if c is None or c == math.inf:
        return DIVERGED
    return CostOutcome(int(c))


class DiscountKind(enum.Enum):
    EXPONENTIAL = "exponential"
    RATIONAL_BASE = "rational-base"


@dataclass(frozen=True)
class DiscountSpec:
    """Exponential discount exp(-rate*c), or rho**c with rational rho in (0, 1).

    Use the :meth:`exponential` and :meth:`rational_base` constructors.
    """

    kind: DiscountKind
    rate: float
    base: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind is DiscountKind.EXPONENTIAL:
            if not (self.rate > 0 and math.isfinite(self.rate)):
                raise ValueError(f"discount rate must be a positive real, got {self.rate}")
        else:
            if self.base is None or not (0 < self.base < 1):
                raise ValueError(f"rational base must lie in (0, 1), got {self.base}")

    @classmethod
    def exponential(cls, rate: float) -> "DiscountSpec":
        return cls(DiscountKind.EXPONENTIAL, float(rate))

    @classmethod
    def rational_base(cls, rho: Union[Fraction, str, int]) -> "DiscountSpec":
        rho = Fraction(rho)
        if not (0 < rho < 1):
            raise ValueError(f"rational base must lie in (0, 1), got {rho}")
        return cls(DiscountKind.RATIONAL_BASE, -log_of(rho), rho)

    @property
    def exact(self) -> bool:
        return self.kind is DiscountKind.RATIONAL_BASE

    def log_factor(self, c: Union[CostOutcome, int, None]) -> float:
        c = as_cost(c)
        if c.diverged:
            return -math.inf
        return -self.rate * c.steps

    def __str__(self) -> str:
        if self.exact:
            return f"rho={self.base}"
        return f"lambda={self.rate!r}"


def discount_factor(spec: DiscountSpec, c: Union[CostOutcome, int, None]) -> Real:
    """D(c): ``Fraction`` rho**c in rational mode, float exp(-lam*c) otherwise."""
    c = as_cost(c)
    if spec.exact:
        return Fraction(0) if c.diverged else spec.base ** c.steps
    if c.diverged:
        return 0.0
    return math.exp(-spec.rate * c.steps)


# ---------------------------------------------------------------------------
# rewards
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RewardFunction:
    """Reward r(w) in [0, 1]; the default is the constant 1."""

    fn: Optional[Callable[[Any], Real]] = None

    def __call__(self, omega) -> Real:
        if self.fn is None:
            return 1
        value = self.fn(omega)
        if not (0 <= value <= 1):
            raise ValueError(f"reward {value} for input {omega!r} outside [0, 1]")
        return value


UNIT_REWARD = RewardFunction()


# ---------------------------------------------------------------------------
# score values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreValue:
    """Certified enclosure [lo, hi] of a score.

    Float-mode values keep the endpoints as logs (``log_lo``/``log_hi``);
    exact values carry ``exact_lo``/``exact_hi`` as Fractions as well.
    """

    log_lo: float
    log_hi: float
    exact_lo: Optional[Fraction] = None
    exact_hi: Optional[Fraction] = None

    def __post_init__(self):
        if self.log_lo > self.log_hi:
            raise ValueError(f"empty score interval: log {self.log_lo} > {self.log_hi}")
        if self.log_hi > 1e-12:
            raise ValueError("score interval exceeds 1")
        if (self.exact_lo is None) != (self.exact_hi is None):
            raise ModeError("exact endpoints must be given together")
        if self.exact_lo is not None and not (0 <= self.exact_lo <= self.exact_hi <= 1):
            raise ValueError("exact score interval outside [0, 1]")

    @classmethod
    def from_logs(cls, log_lo: float, log_hi: Optional[float] = None) -> "ScoreValue":
        if log_hi is None:
            log_hi = log_lo
        return cls(min(log_lo, 0.0), min(log_hi, 0.0))

    @classmethod
    def from_fractions(cls, lo: Fraction, hi: Optional[Fraction] = None) -> "ScoreValue":
        hi = lo if hi is None else hi
        return cls(log_of(lo), log_of(hi), Fraction(lo), Fraction(hi))

    @property
    def is_exact(self) -> bool:
        return self.exact_lo is not None

    @property
    def lo(self) -> Real:
        return self.exact_lo if self.is_exact else math.exp(self.log_lo)

    @property
    def hi(self) -> Real:
        return self.exact_hi if self.is_exact else math.exp(self.log_hi)

    @property
    def width(self) -> Real:
        return self.hi - self.lo

    def contains(self, value: Real, log_slack: float = 0.0) -> bool:
        """Membership test; ``log_slack`` widens the float interval multiplicatively."""
        if self.is_exact and isinstance(value, (Fraction, int)):
            return self.exact_lo <= value <= self.exact_hi
        lv = log_of(value)
        return self.log_lo - log_slack <= lv <= self.log_hi + log_slack

    def __str__(self) -> str:
        if self.is_exact:
            if self.exact_lo == self.exact_hi:
                return str(self.exact_lo)
            return f"[{self.exact_lo}, {self.exact_hi}]"
        if self.log_lo == self.log_hi:
            return f"{self.lo:.17g}"
        return f"[{self.lo:.17g}, {self.hi:.17g}]"


class Comparison(enum.Enum):
    A_BETTER = "A-better"
    B_BETTER = "B-better"
    INDETERMINATE = "indeterminate"


def compare_scores(a: ScoreValue, b: ScoreValue) -> Comparison:
    """A is better only when its whole interval lies strictly above B's."""
    if a.is_exact and b.is_exact:
        if a.exact_lo > b.exact_hi:
            return Comparison.A_BETTER
        if b.exact_lo > a.exact_hi:
            return Comparison.B_BETTER
        return Comparison.INDETERMINATE
    if a.log_lo > b.log_hi:
        return Comparison.A_BETTER
    if b.log_lo > a.log_hi:
        return Comparison.B_BETTER
    return Comparison.INDETERMINATE


# ---------------------------------------------------------------------------
# finite scores
# ---------------------------------------------------------------------------

def score_exact_finite(
    costs: Mapping[Hashable, Union[CostOutcome, int, None]],
    probs: Mapping[Hashable, Real],
    spec: DiscountSpec,
    reward: RewardFunction = UNIT_REWARD,
) -> ScoreValue:
    """Score over a finite input set; zero-width in both modes."""
    if set(costs) != set(probs):
        raise ValueError("costs and probabilities must cover the same inputs")
    if spec.exact:
        for w, p in probs.items():
            if not isinstance(p, (Fraction, int)):
                raise ModeError(f"probability of {w!r} is not rational in exact mode")
            if p < 0:
                raise ValueError("negative probability")
        if sum(probs.values(), Fraction(0)) != 1:
            raise ValueError("probabilities must sum to exactly 1 in exact mode")
        total = Fraction(0)
        for w, p in probs.items():
            r = reward(w)
            if not isinstance(r, (Fraction, int)):
                raise ModeError(f"reward of {w!r} is not rational in exact mode")
            total += Fraction(p) * r * discount_factor(spec, costs[w])
        return ScoreValue.from_fractions(total)

    if any(p < 0 for p in probs.values()):
        raise ValueError("negative probability")
    mass = math.fsum(float(p) for p in probs.values())
    if abs(mass - 1.0) > PROB_TOLERANCE:
        raise ValueError(f"probabilities sum to {mass!r}, not 1 within {PROB_TOLERANCE}")
    logs = [
        log_of(float(p)) + log_of(float(reward(w))) + spec.log_factor(costs[w])
        for w, p in probs.items()
    ]
    return ScoreValue.from_logs(logsumexp(logs))


# ---------------------------------------------------------------------------
# length-factored input models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InputModel:
    """P factored as a pmf over lengths times uniform inputs within a length.

    ``tail(N)`` must bound sum_{n > N} pmf(n) from above; ``support_max`` is
    the largest length of positive mass when the support is finite.
    """

    name: str
    pmf: Callable[[int], float]
    tail: Callable[[int], float]
    support_max: Optional[int] = None
    params: tuple = field(default=())

    def __post_init__(self):
        probe = self.support_max if self.support_max is not None else 200
        head = math.fsum(self.pmf(n) for n in range(probe + 1))
        if any(self.pmf(n) < 0 for n in range(probe + 1)):
            raise ValueError("negative length probability")
        total = head + self.tail(probe)
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise ValueError(f"length pmf of {self.name} has mass {total!r}")

    def support(self, cutoff: int) -> range:
        top = cutoff if self.support_max is None else min(cutoff, self.support_max)
        return range(0, top + 1)

    # constructors -----------------------------------------------------------

    @classmethod
    def point_mass(cls, n: int) -> "InputModel":
        if n < 0:
            raise ValueError("length must be nonnegative")
        return cls(
            f"point:{n}",
            lambda k: 1.0 if k == n else 0.0,
            lambda N: 0.0 if N >= n else 1.0,
            support_max=n,
            params=("point", n),
        )

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "InputModel":
        if not 0 <= lo <= hi:
            raise ValueError("need 0 <= lo <= hi")
        width = hi - lo + 1
        return cls(
            f"uniform:{lo}:{hi}",
            lambda k: 1.0 / width if lo <= k <= hi else 0.0,
            lambda N: 0.0 if N >= hi else (hi - max(N, lo - 1)) / width,
            support_max=hi,
            params=("uniform", lo, hi),
        )

    @classmethod
    def geometric(cls, p: float) -> "InputModel":
        """pmf(n) = p (1-p)**n for n >= 0; the tail is (1-p)**(N+1)."""
        if not 0 < p < 1:
            raise ValueError("geometric parameter must lie in (0, 1)")
        q = 1.0 - p
        return cls(
            f"geometric:{p!r}",
            lambda k: p * q ** k if k >= 0 else 0.0,
            lambda N: q ** (N + 1),
            params=("geometric", p),
        )

    @classmethod
    def table(cls, masses: Mapping[int, float]) -> "InputModel":
        masses = {int(k): float(v) for k, v in masses.items() if v}
        top = max(masses)
        frozen = tuple(sorted(masses.items()))

        def tail(N: int) -> float:
            return math.fsum(v for k, v in frozen if k > N)

        return cls(
            "table:" + ",".join(f"{k}={v!r}" for k, v in frozen),
            lambda k: masses.get(k, 0.0),
            tail,
            support_max=top,
            params=("table", frozen),
        )

    @classmethod
    def parse(cls, text: str) -> "InputModel":
        """Parse ``point:N``, ``uniform:A:B``, ``geometric:P`` or ``table:n=p,...``."""
        family, _, rest = text.partition(":")
        try:
            if family == "point":
                return cls.point_mass(int(rest))
            if family == "uniform":
                lo, hi = rest.split(":")
                return cls.uniform(int(lo), int(hi))
            if family == "geometric":
                return cls.geometric(float(rest))
            if family == "table":
                pairs = (item.split("=") for item in rest.split(","))
                return cls.table({int(k): float(v) for k, v in pairs})
        except ValueError as exc:
            raise ValueError(f"bad length model {text!r}: {exc}") from None
        raise ValueError(f"unknown length model family {family!r}")


def aggregate_by_length(
    per_length: Mapping[int, Real],
    model: InputModel,
    cutoff: int,
) -> ScoreValue:
    """Certified enclosure of sum_n pmf(n) s_n from the terms n <= cutoff.

    Each omitted term is at most pmf(n) * 1, so the upper end adds tail(cutoff).
    """
    logs = []
    for n in model.support(cutoff):
        p = model.pmf(n)
        if p == 0:
            continue
        if n not in per_length:
            raise KeyError(f"missing per-length score for n={n}")
        s = per_length[n]
        if not (0 <= s <= 1):
            raise ValueError(f"per-length score s_{n}={s} outside [0, 1]")
        logs.append(log_of(p) + log_of(float(s)))
    log_lo = logsumexp(logs)
    tail = model.tail(cutoff)
    if tail <= 0:
        return ScoreValue.from_logs(log_lo)
    log_hi = logsumexp([log_lo, log_of(tail)])
    return ScoreValue.from_logs(log_lo, log_hi)


def aggregate_log_by_length(
    per_length_log: Mapping[int, float],
    model: InputModel,
    cutoff: int,
) -> ScoreValue:
    """Same as :func:`aggregate_by_length` but with log-domain s_n."""
    logs = []
    for n in model.support(cutoff):
        p = model.pmf(n)
        if p == 0:
            continue
        if n not in per_length_log:
            raise KeyError(f"missing per-length score for n={n}")
        logs.append(log_of(p) + per_length_log[n])
    log_lo = logsumexp(logs)
    tail = model.tail(cutoff)
    if tail <= 0:
        return ScoreValue.from_logs(log_lo)
    return ScoreValue.from_logs(log_lo, logsumexp([log_lo, log_of(tail)]))
