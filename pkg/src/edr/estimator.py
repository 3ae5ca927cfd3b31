"""Monte Carlo estimation of scores with step budgets.

Each sample runs the algorithm on a random input for at most ``budget``
steps and records X = r * D(c), or 0 if the run has not halted by then.
Since every X lies in [0, 1], Hoeffding's inequality gives the half-width
sqrt(ln(2/delta) / (2N)); truncation only removes mass, and by at most
D(budget), so with probability >= 1 - delta

    mean - ci <= S <= mean + ci + D(budget).

Random numbers come from numpy's PCG64. Samples are drawn in chunks of
``chunk_size``; chunk i uses ``PCG64(seed).jumped(i)``, so every chunk can
be computed on its own and the chunk sums are merged in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol, Union

import numpy as np

from . import sorting, vm
from .reward import (
    DIVERGED,
    UNIT_REWARD,
    CostOutcome,
    DiscountSpec,
    InputModel,
    RewardFunction,
    discount_factor,
)

Model = Union[InputModel, vm.GroundProblem]


class InstrumentedAlgorithm(Protocol):
    name: str
    deterministic: bool

    def run(self, omega, budget: int) -> CostOutcome:
        """Cost of a run on ``omega``; may give up (diverged) after ``budget`` steps."""


@dataclass(frozen=True)
class SortingAlgorithm:
    alg: str
    deterministic: bool = True

    @property
    def name(self) -> str:
        return self.alg

    def run(self, omega, budget: int) -> CostOutcome:
        return sorting.run_instrumented_sort(self.alg, omega)


@dataclass(frozen=True)
class NeverHalts:
    """Spins forever on every input."""

    name: str = "never-halts"
    deterministic: bool = True

    def run(self, omega, budget: int) -> CostOutcome:
        return DIVERGED


@dataclass(frozen=True)
class VmAlgorithm:
    program: vm.VmProgram
    deterministic: bool = True

    @property
    def name(self) -> str:
        return f"vm:{vm.to_hex(vm.encode(self.program))}"

    def run(self, omega, budget: int) -> CostOutcome:
        res = vm.simulate(self.program, int(omega), budget)
        return DIVERGED if res is None else CostOutcome.halted(res[1])


def algorithm(name: str) -> InstrumentedAlgorithm:
    if name in sorting.ALGORITHMS:
        return SortingAlgorithm(name)
    if name in ("never-halts", "diverge"):
        return NeverHalts()
    raise ValueError(f"unknown algorithm {name!r}")


@dataclass(frozen=True)
class EstimatorConfig:
    samples: int
    budget: int
    seed: int
    delta: float = 0.05
    chunk_size: int = 1 << 16

    def __post_init__(self):
        if self.samples < 1 or self.budget < 1 or self.chunk_size < 1:
            raise ValueError("samples, budget and chunk size must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Estimate:
    point: float
    ci_half_width: float
    bias_bound: float
    samples: int

    @property
    def interval(self) -> tuple[float, float]:
        """Confidence interval for S, widened upward by the truncation bias."""
        return (max(0.0, self.point - self.ci_half_width),
                min(1.0, self.point + self.ci_half_width + self.bias_bound))

    @property
    def truncation_interval(self) -> tuple[float, float]:
        """Interval for the mean of the untruncated sample values."""
        return self.point, self.point + self.bias_bound

    def covers(self, value: float) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi


def rng_for_chunk(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed).jumped(index))


def _draw_lengths(model: InputModel, rng: np.random.Generator, count: int) -> np.ndarray:
    family = model.params[0] if model.params else None
    if family == "point":
        return np.full(count, model.params[1], dtype=np.int64)
    if family == "uniform":
        return rng.integers(model.params[1], model.params[2] + 1, size=count)
    if family == "geometric":
        return rng.geometric(model.params[1], size=count) - 1
    if family == "table":
        keys = np.array([k for k, _ in model.params[1]])
        probs = np.array([v for _, v in model.params[1]])
        return keys[rng.choice(len(keys), size=count, p=probs / probs.sum())]
    raise ValueError(f"unsupported input model family {model.name!r}")


def draw_input(model: Model, rng: np.random.Generator):
    """One input: a uniform permutation of a random length, or a microcosm input."""
    if isinstance(model, vm.GroundProblem):
        probs = np.array([float(p) for p in model.probabilities])
        return int(rng.choice(vm.WORD, p=probs / probs.sum()))
    n = int(_draw_lengths(model, rng, 1)[0])
    return tuple(int(v) for v in rng.permutation(n) + 1)


def draw_batch(model: Model, rng: np.random.Generator, count: int) -> list:
    """``count`` inputs grouped by length as ``[(n, array of shape (m, n)), ...]``.

    Microcosm inputs come back as a single group with n = 0 and shape (m,).
    """
    if isinstance(model, vm.GroundProblem):
        probs = np.array([float(p) for p in model.probabilities])
        return [(0, rng.choice(vm.WORD, size=count, p=probs / probs.sum()))]
    lengths = _draw_lengths(model, rng, count)
    groups = []
    for n in np.unique(lengths):
        m = int(np.count_nonzero(lengths == n))
        perms = rng.random((m, int(n))).argsort(axis=1) + 1
        groups.append((int(n), perms))
    return groups


def _sample_values(alg, inputs, spec: DiscountSpec, budget: int, reward: RewardFunction):
    """Yield ``(value, multiplicity)`` for a group of inputs."""
    if alg.deterministic:
        uniq, counts = np.unique(inputs, axis=0, return_counts=True)
        pairs = zip(uniq, counts)
    else:
        pairs = ((row, 1) for row in inputs)
    for row, count in pairs:
        omega = int(row) if np.ndim(row) == 0 else tuple(int(v) for v in row)
        cost = alg.run(omega, budget)
        if cost.diverged or cost.steps > budget:
            value = 0.0
        else:
            value = float(reward(omega)) * float(discount_factor(spec, cost))
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"sample value {value} outside [0, 1]")
        yield value, int(count)


def estimate_chunk(alg, model: Model, spec: DiscountSpec, cfg: EstimatorConfig, index: int,
                   reward: RewardFunction = UNIT_REWARD) -> tuple[float, int]:
    """Sum of sample values and sample count for chunk ``index``."""
    start = index * cfg.chunk_size
    count = min(cfg.chunk_size, cfg.samples - start)
    if count <= 0:
        return 0.0, 0
    rng = rng_for_chunk(cfg.seed, index)
    terms = []
    for _, inputs in draw_batch(model, rng, count):
        terms.extend(v * c for v, c in _sample_values(alg, inputs, spec, cfg.budget, reward))
    return math.fsum(terms), count


def hoeffding_half_width(samples: int, delta: float) -> float:
    return math.sqrt(math.log(2.0 / delta) / (2.0 * samples))


def monte_carlo_score(alg, model: Model, spec: DiscountSpec, cfg: EstimatorConfig,
                      reward: RewardFunction = UNIT_REWARD) -> Estimate:
    if spec.exact:
        spec = DiscountSpec.exponential(spec.rate)
    chunks = -(-cfg.samples // cfg.chunk_size)
    sums = [estimate_chunk(alg, model, spec, cfg, i, reward) for i in range(chunks)]
    total = math.fsum(s for s, _ in sums)
    n = sum(c for _, c in sums)
    point = min(1.0, max(0.0, total / n))
    return Estimate(
        point=point,
        ci_half_width=hoeffding_half_width(n, cfg.delta),
        bias_bound=float(discount_factor(spec, cfg.budget)),
        samples=n,
    )


def exact_reference(alg_name: str, model: InputModel, spec, cutoff: Optional[int] = None):
    """Exact score of a sorting algorithm under ``model`` (a certified interval)."""
    from .reward import aggregate_log_by_length

    top = model.support_max if model.support_max is not None else (cutoff or 200)
    table = sorting.score_table(alg_name, top, spec)
    logs = {n: table.log_value(n) for n in range(top + 1)}
    return aggregate_log_by_length(logs, model, top)
