import json
from fractions import Fraction
from itertools import islice

import pytest

from edr import improve, vm
from edr.improve import (
    Improve,
    ImprovementError,
    PoolOverflow,
    SearchState,
    search_run,
    stern_brocot,
    stern_brocot_term,
    verify_improvement,
)
from edr.prover import truth_space

import oracles

SPACE = truth_space(vm.SHIPPED_PROBLEM, Fraction(1, 2), 27)
SUP = Fraction(15, 32)


def test_stern_brocot_prefix():
    head = [str(a) for a in islice(stern_brocot(), 8)]
    assert head == ["1", "1/2", "1/3", "2/3", "1/4", "2/5", "3/5", "3/4"]


def test_stern_brocot_matches_oracle():
    ref = oracles.stern_brocot_levels(4096)
    assert list(islice(stern_brocot(), 4096)) == ref
    assert [stern_brocot_term(n) for n in range(1, 4097)] == ref


def test_stern_brocot_term_domain():
    with pytest.raises(ValueError):
        stern_brocot_term(0)


def test_search_pinned():
    out = search_run(Fraction(1, 3), SPACE.prover, 10 ** 6)
    assert out.found == "011001000111000000000100010"
    assert (out.state.steps, out.state.rounds) == (89955, 28)
    prog = vm.decode(out.found)
    assert str(prog) == "JNZ R0 3; DEC R0; JNZ R0 2"
    assert vm.beta_check(prog, vm.SHIPPED_PROBLEM)
    assert vm.exact_program_score(prog, vm.SHIPPED_PROBLEM) > Fraction(1, 3)


def test_search_single_steps_match_advance():
    state = SearchState(Fraction(1, 3), SPACE.prover)
    while not state.step():
        pass
    fast = search_run(Fraction(1, 3), SPACE.prover, 10 ** 6).state
    assert (state.result, state.steps, state.rounds) == (fast.result, fast.steps, fast.rounds)


def test_search_resume_in_pieces():
    state = SearchState(Fraction(1, 5), SPACE.prover)
    for _ in range(1000):
        if search_run(None, SPACE.prover, 97, state=state).found:
            break
    whole = search_run(Fraction(1, 5), SPACE.prover, 10 ** 6).state
    assert (state.result, state.steps) == (whole.result, whole.steps)


def test_search_at_one_never_returns():
    out = search_run(Fraction(1), SPACE.prover, 10 ** 6)
    assert out.exhausted_budget and out.state.steps == 10 ** 6


def test_search_above_sup_never_returns():
    assert search_run(SUP, SPACE.prover, 10 ** 6).exhausted_budget


def test_search_threshold_domain():
    with pytest.raises(ValueError):
        SearchState(Fraction(0), SPACE.prover)


def run_improve(steps, **kw):
    engine = Improve(vm.PLANTED_SLOW, SPACE, **kw)
    history = []
    for _ in range(steps):
        before = {id(e): e.search.steps for e in engine.pool}
        events = engine.step()
        history.append((engine.score, events, before, engine))
        assert all(e.threshold > engine.score for e in engine.pool)
    return engine, history


def test_improve_pinned_events():
    engine, _ = run_improve(50)
    got = [(e.step, str(e.threshold), str(e.score)) for e in engine.events]
    assert got == [(19, "1/5", "15/64"), (24, "1/3", "15/32"), (27, "2/5", "15/32"),
                   (33, "3/7", "15/32"), (45, "4/9", "15/32")]


def test_improve_invariants():
    engine, history = run_improve(120, quantum=1024)
    scores = [s for s, *_ in history]
    assert scores == sorted(scores)
    thresholds = [e.threshold for e in engine.events]
    assert thresholds == sorted(set(thresholds))
    for e in engine.events:
        prog = vm.decode(e.codeword)
        assert vm.beta_check(prog, vm.SHIPPED_PROBLEM)
        assert e.score == vm.exact_program_score(prog, vm.SHIPPED_PROBLEM) > e.threshold
        assert e.score <= SUP


def test_improve_fairness():
    engine = Improve(vm.PLANTED_SLOW, SPACE, quantum=512)
    for _ in range(40):
        engine.step()
        if engine.events:
            break
        # no emission yet: every entry got exactly quantum steps per outer step
        for age, entry in enumerate(reversed(engine.pool)):
            assert entry.search.steps == 512 * (age + 1) or entry.search.done


def test_improve_from_sup_program_stays_below():
    engine = Improve(vm.PLANTED_FAST, SPACE)
    events = list(engine.run(60))
    assert all(e.threshold < SUP for e in events)


def test_improve_rejects_bad_z0():
    with pytest.raises(ImprovementError):
        Improve(vm.program("HALT R0"), SPACE)


def test_pool_cap():
    engine = Improve(vm.PLANTED_SLOW, SPACE, pool_cap=8)
    with pytest.raises(PoolOverflow):
        for _ in range(200):
            engine.step()


def test_event_json():
    engine = Improve(vm.PLANTED_SLOW, SPACE)
    event = next(iter(engine.run(100)))
    record = json.loads(event.to_json())
    assert list(record) == ["step", "threshold", "codewordHex", "score", "programText"]
    assert record["threshold"] == "1/5" and record["score"] == "15/64"
    assert vm.as_program("0x" + record["codewordHex"]) == vm.decode(event.codeword)


def test_verify_improvement():
    assert verify_improvement(vm.PLANTED_FAST, vm.PLANTED_SLOW)
    assert not verify_improvement(vm.PLANTED_SLOW, vm.PLANTED_FAST)
    assert not verify_improvement(vm.PLANTED_FAST, vm.PLANTED_FAST)
    with pytest.raises(ImprovementError):
        verify_improvement(vm.program("HALT R0"), vm.PLANTED_FAST)


def test_defaults_exposed():
    assert improve.DEFAULT_QUANTUM == 4096
