import itertools
from fractions import Fraction

import numpy as np
import pytest

from edr import vm

import oracles

SHIPPED = vm.SHIPPED_PROBLEM


def test_planted_fast_pins():
    bits = vm.encode(vm.PLANTED_FAST)
    assert bits == "011001000110101000100110000"
    assert vm.to_hex(bits) == "646a260"
    assert vm.beta_check(vm.PLANTED_FAST, SHIPPED)
    assert vm.exact_program_score(vm.PLANTED_FAST, SHIPPED) == Fraction(15, 32)


def test_planted_slow_pins():
    assert vm.beta_check(vm.PLANTED_SLOW, SHIPPED)
    for x in range(1, 16):
        assert vm.execute_with_halting_decision(vm.PLANTED_SLOW, x).steps == 3 * x + 2
    assert vm.exact_program_score(vm.PLANTED_SLOW, SHIPPED) == Fraction(5026338869833, 2251799813685248)


def test_successor_solver():
    prob = vm.successor_problem()
    assert vm.beta_check(vm.SUCCESSOR_SOLVER, prob)
    assert not vm.beta_check(vm.SUCCESSOR_SOLVER, SHIPPED)
    assert vm.exact_program_score(vm.SUCCESSOR_SOLVER, prob) == Fraction(286331153, 35184372088832)


def test_scores_match_oracle():
    probs = list(SHIPPED.probabilities)
    targets = list(SHIPPED.targets)
    for prog in (vm.PLANTED_FAST, vm.PLANTED_SLOW):
        code = [i.byte for i in prog.instructions]
        assert oracles.microcosm_score(code, targets, probs, Fraction(1, 2)) == \
            vm.evaluate(prog, SHIPPED)


def test_halt_encoding():
    assert vm.encode(vm.program("HALT R0")) == "100000000"


def test_fall_off_is_free():
    cert = vm.execute_with_halting_decision(vm.program("INC R0"), 4)
    assert (cert.halts, cert.output, cert.steps) == (True, 5, 1)


def test_divergence_certificate():
    cert = vm.execute_with_halting_decision(vm.program("JNZ R1 0; JNZ R0 0"), 3)
    assert not cert.halts and cert.repeat_step <= cert.config_bound


def test_simulate_budget():
    assert vm.simulate(vm.PLANTED_SLOW, 2, 8) == (2, 8)
    assert vm.simulate(vm.PLANTED_SLOW, 2, 7) is None
    assert vm.simulate(vm.PLANTED_FAST, 0, 10 ** 4) is None


def test_codec_round_trip_random_programs():
    rng = np.random.default_rng(2024)
    for _ in range(10 ** 4):
        n = int(rng.integers(1, vm.MAX_INSTRUCTIONS + 1))
        code = oracles.random_program_bytes(rng, n)
        bits = oracles.codeword(code)
        prog = vm.decode(bits)
        assert prog is not None and vm.encode(prog) == bits
        assert vm.VmProgram.parse(prog.text()) == prog
        assert vm.codeword_from_hex(vm.to_hex(bits)) == bits


def test_prefix_free_up_to_20_bits():
    words = list(vm.iter_codewords(20))
    assert len(words) == len(set(words))
    table = set(words)
    for w in words:
        assert not any(w[:k] in table for k in range(1, len(w)))
    # every string of at most 14 bits that decodes is one of the listed words
    for length in range(1, 15):
        for t in itertools.product("01", repeat=length):
            s = "".join(t)
            assert (vm.decode(s) is not None) == (s in table)


def test_decode_rejects_noncanonical():
    assert vm.decode("1" + "01100001") is None      # INC with operand
    assert vm.decode("1" + "11100000") is None      # opcode 7
    assert vm.decode("1" + "00100010") is None      # jump past the end
    assert vm.decode("1" + "0010000") is None       # short body
    assert vm.decode("00000" + "1") is None
    assert vm.decode("") is None


def test_iter_codewords_order():
    words = list(vm.iter_codewords(27))
    assert len(words) == 99314
    keys = [(len(w), w) for w in words]
    assert keys == sorted(keys)
    assert next(vm.iter_codewords(27, reverse=True)) == max(w for w in words if len(w) == 27)


def test_parse_errors():
    for text in ("FOO R0", "SET R2 1", "INC R0 1", "JNZ R0 5", "SET R0 16", ""):
        with pytest.raises(vm.ProgramError):
            vm.program(text)


def test_as_program_forms():
    bits = vm.encode(vm.PLANTED_FAST)
    for form in (bits, "0x" + vm.to_hex(bits), str(vm.PLANTED_FAST), vm.PLANTED_FAST):
        assert vm.as_program(form) == vm.PLANTED_FAST
    with pytest.raises(vm.ProgramError):
        vm.as_program("0101")


def test_halting_agrees_with_jump_oracle():
    rng = np.random.default_rng(77)
    for _ in range(300):
        n = int(rng.integers(1, vm.MAX_INSTRUCTIONS + 1))
        code = oracles.random_program_bytes(rng, n)
        prog = vm.decode(oracles.codeword(code))
        fate = oracles.fate_after(code, 10 ** 7)
        for x in range(16):
            cert = vm.execute_with_halting_decision(prog, x)
            assert (cert.output if cert.halts else None) == fate[x]
            literal = oracles.step_simulate(code, x, cert.config_bound)
            if cert.halts:
                assert literal == (cert.output, cert.steps)
                assert vm.simulate(prog, x, cert.steps) == literal
            else:
                assert literal is None


def test_bounded_sup():
    res = vm.bounded_sup_search(SHIPPED, Fraction(1, 2), 27)
    assert res.score == Fraction(15, 32) and res.attained
    assert (res.examined, res.qualifying) == (99314, 175)
    assert str(res.program) == "JNZ R0 3; SET R0 1; JNZ R0 1"


def test_problem_validation():
    with pytest.raises(ValueError):
        vm.GroundProblem.build("bad", {0: 1}, [Fraction(1, 17)] * 16)
    with pytest.raises(ValueError):
        vm.GroundProblem.build("bad", {0: 16})
    with pytest.raises(ValueError):
        vm.exact_program_score(vm.PLANTED_FAST, SHIPPED, Fraction(3, 2))


def test_spec_examples():
    halt = vm.program("HALT R0")
    cert = vm.execute_with_halting_decision(halt, 5)
    assert (cert.halts, cert.output, cert.steps) == (True, 5, 1)
    loop = vm.execute_with_halting_decision(vm.program("JNZ R0 0"), 1)
    assert not loop.halts and loop.repeat_step <= loop.config_bound
    assert not vm.beta_check(halt, vm.successor_problem())
    assert vm.exact_program_score(halt, SHIPPED) == Fraction(1, 2)
    spin = vm.program("SET R0 1; JNZ R0 0")
    assert vm.exact_program_score(spin, SHIPPED) == 0
    assert not vm.beta_check(spin, SHIPPED)


def test_sup_empty_below_shortest_solver():
    res = vm.bounded_sup_search(SHIPPED, Fraction(1, 2), 19)
    assert not res.attained and res.program is None and res.score is None


def test_sup_reverse_order_agrees():
    fwd = vm.bounded_sup_search(SHIPPED, Fraction(1, 2), 27)
    rev = vm.bounded_sup_search(SHIPPED, Fraction(1, 2), 27, reverse=True)
    assert rev.score == fwd.score and rev.qualifying == fwd.qualifying
    assert vm.evaluate(rev.program, SHIPPED) == rev.score


def test_beta_scores_strictly_inside_unit_interval():
    for bits in vm.iter_codewords(27):
        score = vm.evaluate(vm.decode(bits), SHIPPED)
        if score is not None:
            assert 0 < score < 1


def test_defining_zero_breaks_the_fast_solver():
    # the fast solver spins on 0, so it fails once 0 must be answered
    total = vm.GroundProblem.build("identity", {x: x for x in range(16)})
    assert vm.beta_check(vm.PLANTED_FAST, SHIPPED)
    assert not vm.beta_check(vm.PLANTED_FAST, total)
