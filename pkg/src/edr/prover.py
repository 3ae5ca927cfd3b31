"""Partial decision procedure for the three Search queries.

A sentence asks whether some codeword of the bounded program space, with a
given prefix (``EXTEND0``/``EXTEND1``) or equal to a given string
(``EXACT``), decodes to a program that satisfies beta and scores above a
threshold. A :class:`ProverProcess` answers by examining candidates one per
step in shortest-first, then lexicographic, order and reports ``provable``
once it has re-verified a witness. When no witness exists it keeps running
forever, even though the space is finite.

:class:`TruthSpace` indexes the bounded space: the valid n-instruction
codewords are ``gamma(n)`` followed by n bytes from a fixed sorted alphabet,
so the codewords sharing a prefix form a contiguous block of mixed-radix
ranks. Provers therefore move their cursor by arithmetic, while
:func:`sentence_truth` re-derives answers by plain enumeration.
"""

from __future__ import annotations

import bisect
import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from . import vm


class Form(enum.Enum):
    EXTEND0 = "extend0"
    EXTEND1 = "extend1"
    EXACT = "exact"


@dataclass(frozen=True)
class Sentence:
    form: Form
    prefix: str
    threshold: Fraction

    def __post_init__(self):
        if set(self.prefix) - {"0", "1"}:
            raise ValueError("prefix must be a bit string")
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must lie in [0, 1]")

    @property
    def pattern(self) -> str:
        if self.form is Form.EXTEND0:
            return self.prefix + "0"
        if self.form is Form.EXTEND1:
            return self.prefix + "1"
        return self.prefix

    def admits(self, bits: str) -> bool:
        if self.form is Form.EXACT:
            return bits == self.prefix
        return bits.startswith(self.pattern)

    def __str__(self) -> str:
        return f"{self.form.value}({self.prefix or '<empty>'}, >{self.threshold})"


@dataclass(frozen=True)
class _Class:
    n: int
    header: str
    alphabet: tuple
    witnesses: tuple  # sorted (rank, score)

    @property
    def base(self) -> int:
        return len(self.alphabet)

    @property
    def size(self) -> int:
        return self.base ** self.n

    @property
    def bits(self) -> int:
        return len(self.header) + 8 * self.n


class TruthSpace:
    """All valid codewords of at most ``max_bits`` bits, with their beta verdicts."""

    def __init__(self, problem: vm.GroundProblem, rho=vm.DEFAULT_RHO, max_bits: int = 27):
        self.problem = problem
        self.rho = vm._rho(rho)
        self.max_bits = max_bits
        self.classes = tuple(
            self._build_class(n)
            for n in range(1, vm.MAX_INSTRUCTIONS + 1)
            if vm.codeword_length(n) <= max_bits
        )

    def _build_class(self, n: int) -> _Class:
        alphabet = vm.valid_bytes(n)
        decoded = [vm._instruction_from_byte(b, n) for b in alphabet]
        witnesses = []
        for rank, body in enumerate(itertools.product(decoded, repeat=n)):
            prog = vm.VmProgram(body)
            if vm.beta_check(prog, self.problem):
                witnesses.append((rank, vm.exact_program_score(prog, self.problem, self.rho)))
        return _Class(n, vm.gamma_bits(n), alphabet, tuple(witnesses))

    @property
    def size(self) -> int:
        return sum(c.size for c in self.classes)

    def witness_count(self) -> int:
        return sum(len(c.witnesses) for c in self.classes)

    def unrank(self, cls: _Class, rank: int) -> str:
        digits = []
        for _ in range(cls.n):
            rank, d = divmod(rank, cls.base)
            digits.append(cls.alphabet[d])
        return cls.header + "".join(format(b, "08b") for b in reversed(digits))

    def prefix_range(self, cls: _Class, prefix: str) -> Optional[tuple]:
        """Ranks [lo, hi) of the codewords in ``cls`` that start with ``prefix``."""
        if len(prefix) <= len(cls.header):
            return (0, cls.size) if cls.header.startswith(prefix) else None
        if not prefix.startswith(cls.header) or len(prefix) > cls.bits:
            return None
        rest = prefix[len(cls.header):]
        full, partial = divmod(len(rest), 8)
        lead = 0
        for j in range(full):
            byte = int(rest[8 * j:8 * j + 8], 2)
            i = bisect.bisect_left(cls.alphabet, byte)
            if i == len(cls.alphabet) or cls.alphabet[i] != byte:
                return None
            lead = lead * cls.base + i
        if not partial:
            scale = cls.base ** (cls.n - full)
            return lead * scale, (lead + 1) * scale
        top = int(rest[8 * full:], 2) << (8 - partial)
        i0 = bisect.bisect_left(cls.alphabet, top)
        i1 = bisect.bisect_left(cls.alphabet, top + (1 << (8 - partial)))
        if i0 == i1:
            return None
        scale = cls.base ** (cls.n - full - 1)
        return (lead * cls.base + i0) * scale, (lead * cls.base + i1) * scale

    def segments(self, sentence: Sentence) -> tuple:
        """Candidate blocks ``(class, lo, hi)`` in enumeration order."""
        if sentence.form is Form.EXACT:
            bits = sentence.prefix
            if len(bits) > self.max_bits or vm.decode(bits) is None:
                return ()
            for cls in self.classes:
                if cls.bits == len(bits):
                    lo, hi = self.prefix_range(cls, bits)
                    return ((cls, lo, hi),)
            return ()
        out = []
        for cls in self.classes:
            rng = self.prefix_range(cls, sentence.pattern)
            if rng is not None:
                out.append((cls, rng[0], rng[1]))
        return tuple(out)

    def first_witness(self, sentence: Sentence) -> Optional[tuple]:
        """``(position, codeword)``: 1-based index of the first witness among the candidates."""
        offset = 0
        for cls, lo, hi in self.segments(sentence):
            ranks = [r for r, _ in cls.witnesses]
            i = bisect.bisect_left(ranks, lo)
            while i < len(ranks) and ranks[i] < hi:
                rank, score = cls.witnesses[i]
                if score > sentence.threshold:
                    return offset + rank - lo + 1, self.unrank(cls, rank)
                i += 1
            offset += hi - lo
        return None

    def prover(self, sentence: Sentence) -> "ProverProcess":
        return ProverProcess(self, sentence)


@lru_cache(maxsize=8)
def truth_space(problem: vm.GroundProblem, rho=vm.DEFAULT_RHO, max_bits: int = 27) -> TruthSpace:
    return TruthSpace(problem, Fraction(rho), max_bits)


class Status(enum.Enum):
    RUNNING = "running"
    PROVABLE = "provable"


@dataclass
class ProverProcess:
    """One step examines one candidate codeword (decode, beta, score)."""

    space: TruthSpace
    sentence: Sentence
    steps: int = 0
    status: Status = Status.RUNNING
    witness: Optional[str] = None
    _answer: Optional[tuple] = field(default=None, repr=False)
    _located: bool = field(default=False, repr=False)

    def _locate(self) -> Optional[tuple]:
        if not self._located:
            self._answer = self.space.first_witness(self.sentence)
            self._located = True
        return self._answer

    def steps_to_answer(self) -> Optional[int]:
        """Further steps until ``provable``, or None if that never happens."""
        if self.status is Status.PROVABLE:
            return 0
        found = self._locate()
        return None if found is None else found[0] - self.steps

    @property
    def candidates(self) -> int:
        return sum(hi - lo for _, lo, hi in self.space.segments(self.sentence))

    @property
    def exhausted(self) -> bool:
        return self._locate() is None and self.steps >= self.candidates

    def advance(self, k: int) -> Status:
        if k < 0:
            raise ValueError("cannot step backwards")
        if self.status is Status.PROVABLE:
            raise RuntimeError("prover already answered")
        due = self.steps_to_answer()
        if due is not None and due <= k:
            self.steps += due
            self._confirm(self._answer[1])
        else:
            self.steps += k
        return self.status

    def step(self) -> Status:
        return self.advance(1)

    def _confirm(self, bits: str) -> None:
        prog = vm.decode(bits)
        if prog is None or not self.sentence.admits(bits):
            raise AssertionError(f"bad witness {bits} for {self.sentence}")
        if not vm.beta_check(prog, self.space.problem):
            raise AssertionError(f"witness {bits} fails beta")
        score = vm.exact_program_score(prog, self.space.problem, self.space.rho)
        if not score > self.sentence.threshold:
            raise AssertionError(f"witness {bits} scores {score} <= {self.sentence.threshold}")
        self.status = Status.PROVABLE
        self.witness = bits


def prover_step(process: ProverProcess) -> Status:
    return process.step()


def sentence_truth(sentence: Sentence, problem: vm.GroundProblem, rho=vm.DEFAULT_RHO,
                   max_bits: int = 27) -> bool:
    """Decide a sentence by running every admissible program of the bounded space."""
    rho = vm._rho(rho)
    for bits in vm.iter_codewords(max_bits):
        if not sentence.admits(bits):
            continue
        score = vm.evaluate(vm.decode(bits), problem, rho)
        if score is not None and score > sentence.threshold:
            return True
    return False
