"""A two-register machine over Z_16 whose halting problem is decidable.

Machine
-------
Registers R0, R1 hold values mod 16. On input x the machine starts with
R0 = x, R1 = 0, pc = 0. Instructions (one step each):

    SET r k    r <- k
    INC r      r <- r + 1 (mod 16)
    DEC r      r <- r - 1 (mod 16)
    JNZ r t    if r != 0 jump to instruction t (0 <= t <= len) else fall through
    HALT r     stop, output r

Reaching pc == len (by falling through or jumping to t == len) stops the
machine with output R0 and no extra step. A configuration is (pc, R0, R1),
so at most (len + 1) * 256 <= 8192 exist; a run that revisits one never
halts.

Codewords
---------
A program of n instructions (1 <= n <= 31) is encoded as the Elias-gamma
code of n (floor(lg n) zeros, then n in binary) followed by one byte per
instruction, most significant bit first:

    bits 7-5  opcode   HALT=0 JNZ=1 SET=2 INC=3 DEC=4 (5-7 unused)
    bit  4    register
    bits 3-0  immediate (SET), jump target (JNZ), zero otherwise

Only canonical byte strings decode, so the code is a bijection between
programs and valid codewords and is prefix-free. The hex form of a bit
string pads it with zeros to a multiple of four bits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Optional

from .reward import DiscountSpec

WORD = 16
MAX_INSTRUCTIONS = 31
MAX_CONFIGS = (MAX_INSTRUCTIONS + 1) * WORD * WORD

HALT, JNZ, SET, INC, DEC = range(5)
OPNAMES = ("HALT", "JNZ", "SET", "INC", "DEC")
OPCODES = {name: code for code, name in enumerate(OPNAMES)}


class ProgramError(ValueError):
    pass


# ---------------------------------------------------------------------------
# programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Instruction:
    op: int
    reg: int
    arg: int = 0

    def __str__(self) -> str:
        name = OPNAMES[self.op]
        if self.op in (SET, JNZ):
            return f"{name} R{self.reg} {self.arg}"
        return f"{name} R{self.reg}"

    @property
    def byte(self) -> int:
        return (self.op << 5) | (self.reg << 4) | self.arg


@dataclass(frozen=True)
class VmProgram:
    instructions: tuple

    def __post_init__(self):
        n = len(self.instructions)
        if not 1 <= n <= MAX_INSTRUCTIONS:
            raise ProgramError(f"program length {n} outside 1..{MAX_INSTRUCTIONS}")
        for i, ins in enumerate(self.instructions):
            if ins.op not in range(5) or ins.reg not in (0, 1):
                raise ProgramError(f"bad instruction at {i}: {ins!r}")
            if ins.op == SET and not 0 <= ins.arg < WORD:
                raise ProgramError(f"SET immediate out of range at {i}")
            if ins.op == JNZ and not 0 <= ins.arg <= min(n, WORD - 1):
                raise ProgramError(f"jump target {ins.arg} out of range at {i}")
            if ins.op in (HALT, INC, DEC) and ins.arg != 0:
                raise ProgramError(f"{OPNAMES[ins.op]} takes no operand (at {i})")

    def __len__(self) -> int:
        return len(self.instructions)

    @property
    def code(self) -> tuple:
        return tuple((i.op, i.reg, i.arg) for i in self.instructions)

    @property
    def config_bound(self) -> int:
        return (len(self) + 1) * WORD * WORD

    def text(self) -> str:
        return "\n".join(str(i) for i in self.instructions)

    def __str__(self) -> str:
        return "; ".join(str(i) for i in self.instructions)

    @classmethod
    def parse(cls, text: str) -> "VmProgram":
        """Parse one instruction per line (``;`` also separates); ``#`` starts a comment."""
        instructions = []
        for raw in text.replace(";", "\n").splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            name = parts[0].upper()
            if name not in OPCODES:
                raise ProgramError(f"unknown instruction {parts[0]!r}")
            op = OPCODES[name]
            want = 3 if op in (SET, JNZ) else 2
            if len(parts) != want:
                raise ProgramError(f"{name} expects {want - 1} operand(s): {line!r}")
            reg = parts[1].upper().lstrip("R")
            if reg not in ("0", "1"):
                raise ProgramError(f"bad register {parts[1]!r}")
            arg = int(parts[2]) if want == 3 else 0
            instructions.append(Instruction(op, int(reg), arg))
        return cls(tuple(instructions))


def program(text: str) -> VmProgram:
    return VmProgram.parse(text)


# ---------------------------------------------------------------------------
# codec
# ---------------------------------------------------------------------------

def gamma_bits(n: int) -> str:
    if n < 1:
        raise ValueError("Elias gamma needs a positive integer")
    b = format(n, "b")
    return "0" * (len(b) - 1) + b


def codeword_length(n_instructions: int) -> int:
    return len(gamma_bits(n_instructions)) + 8 * n_instructions


def encode(prog: VmProgram) -> str:
    return gamma_bits(len(prog)) + "".join(format(i.byte, "08b") for i in prog.instructions)


def _instruction_from_byte(byte: int, n: int) -> Optional[Instruction]:
    op, reg, arg = byte >> 5, (byte >> 4) & 1, byte & 15
    if op > DEC:
        return None
    if op in (HALT, INC, DEC) and arg:
        return None
    if op == JNZ and arg > n:
        return None
    return Instruction(op, reg, arg)


def decode(bits: str) -> Optional[VmProgram]:
    """Program for a complete codeword, or None for anything else."""
    zeros = len(bits) - len(bits.lstrip("0"))
    if zeros >= 5 or len(bits) < 2 * zeros + 1:
        return None
    n = int(bits[zeros:2 * zeros + 1], 2)
    if not 1 <= n <= MAX_INSTRUCTIONS:
        return None
    body = bits[2 * zeros + 1:]
    if len(body) != 8 * n:
        return None
    instructions = []
    for i in range(n):
        ins = _instruction_from_byte(int(body[8 * i:8 * i + 8], 2), n)
        if ins is None:
            return None
        instructions.append(ins)
    return VmProgram(tuple(instructions))


def to_hex(bits: str) -> str:
    if not bits:
        return ""
    pad = (-len(bits)) % 4
    padded = bits + "0" * pad
    return format(int(padded, 2), f"0{len(padded) // 4}x")


def codeword_from_hex(text: str) -> Optional[str]:
    """Recover a codeword from its padded hex form (None if there is none)."""
    text = text.strip().lower().removeprefix("0x")
    if not text:
        return None
    try:
        bits = format(int(text, 16), f"0{4 * len(text)}b")
    except ValueError:
        return None
    for cut in range(len(bits), max(len(bits) - 4, 0), -1):
        head, tail = bits[:cut], bits[cut:]
        if "1" in tail:
            break
        if decode(head) is not None:
            return head
    return None


def valid_bytes(n: int) -> tuple:
    """Sorted instruction bytes that decode inside an n-instruction program."""
    return tuple(b for b in range(256) if _instruction_from_byte(b, n) is not None)


def iter_codewords(max_bits: int, reverse: bool = False) -> Iterator[str]:
    """Every valid codeword of at most ``max_bits`` bits, shortest first, then lexicographic."""
    counts = [n for n in range(1, MAX_INSTRUCTIONS + 1) if codeword_length(n) <= max_bits]
    if reverse:
        counts.reverse()
    for n in counts:
        alphabet = [format(b, "08b") for b in valid_bytes(n)]
        if reverse:
            alphabet.reverse()
        head = gamma_bits(n)
        for body in itertools.product(alphabet, repeat=n):
            yield head + "".join(body)


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HaltingCertificate:
    """Outcome of a run with a proof of the halting decision.

    For a diverging run ``repeat_step`` is the step at which a configuration
    recurred; it never exceeds ``config_bound``.
    """

    halts: bool
    output: Optional[int]
    steps: Optional[int]
    config_bound: int
    repeat_step: Optional[int] = None


def _run(code: tuple, x: int):
    n = len(code)
    r0, r1 = x % WORD, 0
    pc = steps = 0
    seen = bytearray(n * WORD * WORD)
    while True:
        if pc == n:
            return True, r0, steps
        key = (pc << 8) | (r0 << 4) | r1
        if seen[key]:
            return False, None, steps
        seen[key] = 1
        op, reg, arg = code[pc]
        steps += 1
        if op == JNZ:
            if (r1 if reg else r0):
                pc = arg
            else:
                pc += 1
        elif op == HALT:
            return True, (r1 if reg else r0), steps
        elif op == SET:
            if reg:
                r1 = arg
            else:
                r0 = arg
            pc += 1
        elif op == INC:
            if reg:
                r1 = (r1 + 1) & 15
            else:
                r0 = (r0 + 1) & 15
            pc += 1
        else:
            if reg:
                r1 = (r1 - 1) & 15
            else:
                r0 = (r0 - 1) & 15
            pc += 1


def execute_with_halting_decision(prog: VmProgram, x: int) -> HaltingCertificate:
    if not 0 <= x < WORD:
        raise ValueError(f"input {x} outside Z_16")
    halts, output, steps = _run(prog.code, x)
    if halts:
        return HaltingCertificate(True, output, steps, prog.config_bound)
    return HaltingCertificate(False, None, None, prog.config_bound, repeat_step=steps)


def simulate(prog: VmProgram, x: int, max_steps: int):
    """Plain step-by-step run for at most ``max_steps`` steps.

    Returns ``(output, steps)`` on halting and None when the budget runs out.
    """
    code = prog.code
    n = len(code)
    r = [x % WORD, 0]
    pc = steps = 0
    while steps <= max_steps:
        if pc == n:
            return r[0], steps
        if steps == max_steps:
            return None
        op, reg, arg = code[pc]
        steps += 1
        if op == HALT:
            return r[reg], steps
        if op == JNZ:
            pc = arg if r[reg] else pc + 1
            continue
        if op == SET:
            r[reg] = arg
        elif op == INC:
            r[reg] = (r[reg] + 1) % WORD
        else:
            r[reg] = (r[reg] - 1) % WORD
        pc += 1
    return None


# ---------------------------------------------------------------------------
# ground problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundProblem:
    """A partial target function on Z_16 with rational input probabilities.

    ``targets[x]`` is the required output for x in the defined set and None
    where every correct program must diverge.
    """

    name: str
    targets: tuple
    probabilities: tuple

    def __post_init__(self):
        if len(self.targets) != WORD or len(self.probabilities) != WORD:
            raise ValueError("problems are defined on all 16 inputs")
        if any(not isinstance(p, Fraction) or p <= 0 for p in self.probabilities):
            raise ValueError("input probabilities must be positive Fractions")
        if sum(self.probabilities) != 1:
            raise ValueError("input probabilities must sum to 1")
        if any(t is not None and not 0 <= t < WORD for t in self.targets):
            raise ValueError("targets must lie in Z_16")

    @classmethod
    def build(cls, name: str, target: Mapping[int, int], probabilities=None) -> "GroundProblem":
        if probabilities is None:
            probabilities = (Fraction(1, WORD),) * WORD
        targets = tuple(target.get(x) for x in range(WORD))
        return cls(name, targets, tuple(Fraction(p) for p in probabilities))

    @property
    def defined(self) -> tuple:
        return tuple(x for x in range(WORD) if self.targets[x] is not None)

    @property
    def defined_mass(self) -> Fraction:
        return sum((self.probabilities[x] for x in self.defined), Fraction(0))


def nonzero_identity_problem() -> GroundProblem:
    """F(x) = x on 1..15, diverge on 0 (the shipped problem)."""
    return GroundProblem.build("nonzero-identity", {x: x for x in range(1, WORD)})


def successor_problem() -> GroundProblem:
    """F(x) = x + 1 (mod 16) on 0..7, diverge on 8..15."""
    return GroundProblem.build("successor-low-half", {x: (x + 1) % WORD for x in range(8)})


SHIPPED_PROBLEM = nonzero_identity_problem()
DEFAULT_RHO = Fraction(1, 2)

# One-step answer on every defined input: score 15/32 at rho = 1/2.
PLANTED_FAST = program("""
    JNZ R0 3    # nonzero: fall off the end, output R0
    SET R1 1
    JNZ R1 0    # zero: spin forever
""")

# Copies R0 into R1 one unit at a time: 3x + 2 steps on input x.
PLANTED_SLOW = program("""
    JNZ R0 3
    INC R1
    JNZ R1 2    # zero: spin forever
    DEC R0
    INC R1
    JNZ R0 3
    HALT R1
""")

# Counts up to 8 in R1 to reject x >= 8, then adds 9 to R1 = 8 + x.
SUCCESSOR_SOLVER = program("""
    SET R1 8
    JNZ R0 3
    JNZ R1 8    # R0 reached 0 first: x < 8
    DEC R0
    INC R1
    JNZ R1 1
    SET R0 1    # R1 wrapped: x >= 8, spin forever
    JNZ R0 7
""" + "INC R1\n" * 9 + "HALT R1\n")


def certificates(prog: VmProgram) -> list:
    return [execute_with_halting_decision(prog, x) for x in range(WORD)]


def beta_check(prog: VmProgram, problem: GroundProblem) -> bool:
    """Correct on every defined input and divergent on every other one."""
    code = prog.code
    for x in range(WORD):
        halts, output, _ = _run(code, x)
        want = problem.targets[x]
        if want is None:
            if halts:
                return False
        elif not halts or output != want:
            return False
    return True


def exact_program_score(prog: VmProgram, problem: GroundProblem, rho=DEFAULT_RHO) -> Fraction:
    """sum_x p(x) rho**steps(x) over the inputs on which the program halts."""
    rho = _rho(rho)
    code = prog.code
    total = Fraction(0)
    for x in range(WORD):
        halts, _, steps = _run(code, x)
        if halts:
            total += problem.probabilities[x] * rho ** steps
    return total


def _rho(rho) -> Fraction:
    if isinstance(rho, DiscountSpec):
        if not rho.exact:
            raise ValueError("microcosm scores need a rational-base discount")
        return rho.base
    rho = Fraction(rho)
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    return rho


def evaluate(prog: VmProgram, problem: GroundProblem, rho=DEFAULT_RHO) -> Optional[Fraction]:
    """Exact score when the program satisfies beta, else None."""
    if not beta_check(prog, problem):
        return None
    return exact_program_score(prog, problem, rho)


# ---------------------------------------------------------------------------
# bounded sup search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupResult:
    program: Optional[VmProgram]
    score: Optional[Fraction]
    attained: bool
    examined: int
    qualifying: int


def bounded_sup_search(problem: GroundProblem, rho=DEFAULT_RHO, max_bits: int = 27,
                       reverse: bool = False) -> SupResult:
    """Best beta-passing program among all codewords of at most ``max_bits`` bits.

    Ties go to the first codeword met in enumeration order.
    """
    rho = _rho(rho)
    best = best_score = None
    examined = qualifying = 0
    for bits in iter_codewords(max_bits, reverse=reverse):
        examined += 1
        prog = decode(bits)
        score = evaluate(prog, problem, rho)
        if score is None:
            continue
        qualifying += 1
        if best_score is None or score > best_score:
            best, best_score = prog, score
    return SupResult(best, best_score, best is not None, examined, qualifying)


def as_program(obj) -> VmProgram:
    """Accept a program, program text, bit string or hex codeword."""
    if isinstance(obj, VmProgram):
        return obj
    if isinstance(obj, str):
        s = obj.strip()
        if s and set(s) <= {"0", "1"}:
            prog = decode(s)
        elif s.lower().startswith("0x"):
            bits = codeword_from_hex(s)
            prog = decode(bits) if bits else None
        else:
            prog = VmProgram.parse(s)
        if prog is None:
            raise ProgramError(f"not a program: {obj!r}")
        return prog
    raise TypeError(f"cannot interpret {type(obj).__name__} as a program")

