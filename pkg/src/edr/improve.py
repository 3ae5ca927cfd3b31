"""Search and Improve over the bounded program space.

``SearchState`` grows a codeword bit by bit. Each round it runs three
provers in lockstep, one prover step each per search step:

    A: some witness starts with u0      -> u <- u0
    B: some witness starts with u1      -> u <- u1
    C: u itself is a witness            -> return u

When several answer on the same step the first of A, B, C wins.

``Improve`` walks the Stern-Brocot enumeration a_1 = 1, a_2 = 1/2, 1/3,
2/3, ... of the rationals in (0, 1]. Outer step n queues Search(a_n) when
a_n beats the current score, then gives every pool entry ``quantum`` search
steps. A finished search replaces ``best``, raises ``score`` to its
threshold, drops every entry whose threshold no longer beats the score and
emits an event. After a sweep with an improvement, every surviving entry is
queued again, restarted from the new best.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

from . import vm
from .prover import Form, ProverProcess, Sentence, Status, TruthSpace


# ---------------------------------------------------------------------------
# Stern-Brocot enumeration
# ---------------------------------------------------------------------------

def stern_brocot() -> Iterator[Fraction]:
    """1/1, then the mediant tree between 0/1 and 1/1 level by level."""
    yield Fraction(1)
    level = [(0, 1, 1, 1)]
    while True:
        nxt = []
        for a, b, c, d in level:
            p, q = a + c, b + d
            yield Fraction(p, q)
            nxt.append((a, b, p, q))
            nxt.append((p, q, c, d))
        level = nxt


def stern_brocot_term(n: int) -> Fraction:
    """n-th term (1-based) of :func:`stern_brocot`, by walking the tree path of n."""
    if n < 1:
        raise ValueError("Stern-Brocot terms are indexed from 1")
    if n == 1:
        return Fraction(1)
    # node index m = n - 1 in heap order: the bits after the leading 1 are the path
    path = format(n - 1, "b")[1:]
    a, b, c, d = 0, 1, 1, 1
    for bit in path:
        p, q = a + c, b + d
        if bit == "0":
            c, d = p, q
        else:
            a, b = p, q
    return Fraction(a + c, b + d)


def ratio(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

ProverFactory = Callable[[Sentence], ProverProcess]


@dataclass
class SearchState:
    threshold: Fraction
    factory: ProverFactory
    u: str = ""
    steps: int = 0
    rounds: int = 0
    result: Optional[str] = None
    provers: tuple = field(default=(), repr=False)

    def __post_init__(self):
        self.threshold = Fraction(self.threshold)
        if not 0 < self.threshold <= 1:
            raise ValueError("Search thresholds lie in (0, 1]")
        if not self.provers:
            self._start_round()

    def _start_round(self) -> None:
        self.provers = tuple(
            self.factory(Sentence(form, self.u, self.threshold))
            for form in (Form.EXTEND0, Form.EXTEND1, Form.EXACT)
        )

    @property
    def done(self) -> bool:
        return self.result is not None

    def step(self) -> bool:
        """Give A, B and C one prover step each."""
        if self.done:
            return True
        self.steps += 1
        answers = [p.step() is Status.PROVABLE for p in self.provers]
        self._apply(answers)
        return self.done

    def advance(self, k: int) -> bool:
        """Equivalent to ``k`` calls of :meth:`step`, skipping idle stretches."""
        while k > 0 and not self.done:
            dues = [p.steps_to_answer() for p in self.provers]
            live = [d for d in dues if d is not None]
            due = min(live) if live else None
            if due is None or due > k:
                for p in self.provers:
                    p.advance(k)
                self.steps += k
                return False
            for p in self.provers:
                p.advance(due)
            self.steps += due
            k -= due
            self._apply([d == due for d in dues])
        return self.done

    def _apply(self, answers) -> None:
        if not any(answers):
            return
        self.rounds += 1
        if answers[0]:
            self.u += "0"
        elif answers[1]:
            self.u += "1"
        else:
            self.result = self.u
            return
        self._start_round()


@dataclass(frozen=True)
class SearchOutcome:
    found: Optional[str]
    state: SearchState

    @property
    def exhausted_budget(self) -> bool:
        return self.found is None


def search_run(x, factory: ProverFactory, step_budget: int,
               state: Optional[SearchState] = None) -> SearchOutcome:
    """Run Search(x) for at most ``step_budget`` steps; pass ``state`` to resume."""
    if state is None:
        state = SearchState(Fraction(x), factory)
    state.advance(step_budget)
    return SearchOutcome(state.result, state)


# ---------------------------------------------------------------------------
# Improve
# ---------------------------------------------------------------------------

DEFAULT_QUANTUM = 4096
DEFAULT_POOL_CAP = 1 << 16


class PoolOverflow(RuntimeError):
    pass


class ImprovementError(ValueError):
    pass


@dataclass
class PoolEntry:
    threshold: Fraction
    source: str
    search: SearchState
    removed: bool = False


@dataclass(frozen=True)
class ImproveEvent:
    step: int
    threshold: Fraction
    codeword: str
    score: Fraction
    program_text: str

    def to_json(self) -> str:
        return json.dumps({
            "step": self.step,
            "threshold": ratio(self.threshold),
            "codewordHex": vm.to_hex(self.codeword),
            "score": ratio(self.score),
            "programText": self.program_text,
        })


class Improve:
    """Dovetailed Search calls printing ever-better programs.

    ``quantum`` is the number of search steps one outer step grants to each
    pool entry; ``pool_cap`` bounds the pool, whose size doubles after every
    improving sweep.
    """

    def __init__(self, z0, space: TruthSpace, quantum: int = DEFAULT_QUANTUM,
                 pool_cap: int = DEFAULT_POOL_CAP):
        z0 = vm.as_program(z0)
        if not vm.beta_check(z0, space.problem):
            raise ImprovementError("initial program does not satisfy beta")
        if quantum < 1:
            raise ValueError("quantum must be positive")
        self.space = space
        self.quantum = quantum
        self.pool_cap = pool_cap
        self.best = vm.encode(z0)
        self.score = Fraction(0)
        self.n = 0
        self.pool: list[PoolEntry] = []
        self.events: list[ImproveEvent] = []
        self.total_search_steps = 0
        self._terms = stern_brocot()

    def _new_search(self, a: Fraction) -> SearchState:
        return SearchState(a, self.space.prover)

    def _add(self, a: Fraction) -> None:
        if len(self.pool) >= self.pool_cap:
            raise PoolOverflow(
                f"pool reached {len(self.pool)} entries at outer step {self.n} "
                f"(cap {self.pool_cap}, score {ratio(self.score)})"
            )
        self.pool.append(PoolEntry(a, self.best, self._new_search(a)))

    def step(self) -> list[ImproveEvent]:
        """One outer iteration; returns the events it printed."""
        self.n += 1
        a = next(self._terms)
        if a > self.score:
            self._add(a)
        found = False
        printed = []
        for entry in list(self.pool):
            if entry.removed:
                continue
            before = entry.search.steps
            entry.search.advance(self.quantum)
            self.total_search_steps += entry.search.steps - before
            if not entry.search.done:
                continue
            found = True
            self.best = entry.search.result
            self.score = entry.threshold
            for other in self.pool:
                if other.threshold <= self.score:
                    other.removed = True
            self.pool = [e for e in self.pool if not e.removed]
            prog = vm.decode(self.best)
            event = ImproveEvent(
                self.n, entry.threshold, self.best,
                vm.exact_program_score(prog, self.space.problem, self.space.rho),
                prog.text(),
            )
            printed.append(event)
        if found:
            for entry in list(self.pool):
                self._add(entry.threshold)
        self.events.extend(printed)
        return printed

    def run(self, max_steps: int) -> Iterator[ImproveEvent]:
        while self.n < max_steps:
            yield from self.step()


def improve_run(z0, space: TruthSpace, max_outer_steps: int, **kwargs) -> list[ImproveEvent]:
    engine = Improve(z0, space, **kwargs)
    return list(engine.run(max_outer_steps))


def verify_improvement(candidate, baseline, problem: vm.GroundProblem = vm.SHIPPED_PROBLEM,
                       rho=vm.DEFAULT_RHO) -> bool:
    """True when ``candidate`` scores strictly more than ``baseline``; both must satisfy beta."""
    cand, base = vm.as_program(candidate), vm.as_program(baseline)
    for name, prog in (("candidate", cand), ("baseline", base)):
        if not vm.beta_check(prog, problem):
            raise ImprovementError(f"{name} does not satisfy beta")
    return vm.exact_program_score(cand, problem, rho) > vm.exact_program_score(base, problem, rho)
