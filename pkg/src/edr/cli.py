"""Command-line front end.

Every subcommand takes ``--config FILE``, a JSON object whose keys are the
subcommand's long flags (``max-steps`` or ``max_steps``). Config values act
as defaults and explicit flags win; unknown keys are rejected. Outputs go to
stdout and, with ``--out`` (or when ``EDR_OUTPUT_DIR`` is set), to a file.

Exit status: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import estimator, improve, prover, sorting, vm
from .reward import Comparison, DiscountSpec, InputModel, compare_scores

OUTPUT_DIR_ENV = "EDR_OUTPUT_DIR"
SWEEP_HEADER = ("alg", "n", "lambda", "lower", "exact", "upper")
ORACLE_RTOL = 1e-12

PROBLEMS = {
    "nonzero-identity": vm.nonzero_identity_problem,
    "successor-low-half": vm.successor_problem,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------

def parse_lambda(text: str) -> float:
    t = str(text).strip()
    if t.lower() in ("ln2", "log2"):
        return math.log(2.0)
    try:
        lam = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lambda must be a decimal or 'ln2', got {text!r}")
    if not lam > 0 or math.isinf(lam):
        raise argparse.ArgumentTypeError("lambda must be positive and finite")
    return lam


def parse_lambdas(text: str) -> list:
    return [parse_lambda(t) for t in str(text).split(",") if t.strip()]


def parse_rho(text: str) -> Fraction:
    t = str(text).strip()
    if "." in t or "e" in t.lower():
        raise argparse.ArgumentTypeError(f"rho must be a rational p/q, got {text!r}")
    try:
        rho = Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"rho must be a rational p/q, got {text!r}")
    if not 0 < rho < 1:
        raise argparse.ArgumentTypeError("rho must lie in (0, 1)")
    return rho


def parse_model(text: str) -> InputModel:
    try:
        return InputModel.parse(str(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def parse_problem(text: str) -> vm.GroundProblem:
    try:
        return PROBLEMS[str(text)]()
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown problem {text!r}; choose from {sorted(PROBLEMS)}")


def nonneg_int(text: str) -> int:
    try:
        v = int(str(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("expected a nonnegative integer")
    return v


def pos_int(text: str) -> int:
    v = nonneg_int(text)
    if v == 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def fmt(x: float) -> str:
    return repr(float(x))


def ratio(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def read_program(text: str) -> vm.VmProgram:
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        return vm.as_program(text)
    except (vm.ProgramError, TypeError) as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

class Output:
    """Collects a command's text; mirrors it to a file when requested."""

    def __init__(self, args, default_name: str):
        self.buf = io.StringIO()
        self.path = self._resolve(getattr(args, "out", None), default_name)
        self.handle = None

    @staticmethod
    def _resolve(out: Optional[str], default_name: str) -> Optional[Path]:
        base = os.environ.get(OUTPUT_DIR_ENV)
        if out:
            p = Path(out)
            return p if p.is_absolute() or not base else Path(base) / p
        return Path(base) / default_name if base else None

    def open(self):
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.handle = open(self.path, "w", newline="")
        return self

    def write(self, text: str) -> None:
        sys.stdout.write(text)
        sys.stdout.flush()
        if self.handle is not None:
            self.handle.write(text)
            self.handle.flush()

    def close(self) -> None:
        if self.handle is not None:
            self.handle.close()


def emit(args, default_name: str, text: str) -> None:
    out = Output(args, default_name).open()
    try:
        out.write(text)
    finally:
        out.close()


def lines(pairs) -> str:
    return "".join(f"{k}: {v}\n" for k, v in pairs)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{args.command}: missing required option(s) {flags}")


def cmd_score_exact(args) -> int:
    _need(args, "alg", "lam")
    spec = DiscountSpec.exponential(args.lam)
    pairs = [("alg", args.alg), ("lambda", fmt(args.lam))]
    if args.lengths is not None:
        cutoff = args.cutoff
        value = estimator.exact_reference(args.alg, args.lengths, spec, cutoff)
        pairs += [("lengths", args.lengths.name), ("lower", fmt(value.lo)), ("upper", fmt(value.hi))]
        pairs.append(("source", "per-length exact scores aggregated, tail bound added to upper end"))
    else:
        _need(args, "n")
        pairs.append(("n", args.n))
        if args.alg == sorting.MERGESORT:
            cost = sorting.mergesort_cost(args.n)
            pairs += [("cost", cost), ("log_score", fmt(-args.lam * cost)),
                      ("score", fmt(math.exp(-args.lam * cost))),
                      ("source", "closed form, cost n*ceil(lg n) + n - 2^ceil(lg n)")]
        else:
            log_q = sorting.exact_log_score(args.alg, args.n, spec)
            pairs += [("log_score", fmt(log_q)), ("score", fmt(math.exp(log_q))),
                      ("source", "recurrence q_n = exp(-lambda(n+1))/n sum_k q_(k-1) q_(n-k)")]
    emit(args, "score-exact.txt", lines(pairs))
    return 0


def cmd_score_bounds(args) -> int:
    _need(args, "alg", "n", "lam")
    lo, hi = sorting.closed_form_bounds(args.alg, args.n, args.lam)
    exact = math.exp(sorting.exact_log_score(args.alg, args.n, args.lam))
    pairs = [("alg", args.alg), ("n", args.n), ("lambda", fmt(args.lam)),
             ("lower", fmt(lo)), ("exact", fmt(exact)), ("upper", fmt(hi)),
             ("holds", str(lo <= exact <= hi).lower())]
    emit(args, "score-bounds.txt", lines(pairs))
    return 0


def cmd_score_mc(args) -> int:
    _need(args, "alg", "lam", "samples", "budget", "seed")
    model = args.lengths if args.lengths is not None else (
        InputModel.point_mass(args.n) if args.n is not None else None)
    if model is None:
        raise UsageError("score-mc: give --n or --lengths")
    try:
        alg = estimator.algorithm(args.alg)
    except ValueError as exc:
        raise UsageError(str(exc))
    cfg = estimator.EstimatorConfig(args.samples, args.budget, args.seed, args.delta)
    est = estimator.monte_carlo_score(alg, model, DiscountSpec.exponential(args.lam), cfg)
    lo, hi = est.interval
    record = {
        "alg": args.alg, "lengths": model.name, "lambda": args.lam,
        "samples": est.samples, "budget": args.budget, "seed": args.seed, "delta": args.delta,
        "point": est.point, "ciHalfWidth": est.ci_half_width, "biasBound": est.bias_bound,
        "lower": lo, "upper": hi,
    }
    emit(args, "score-mc.json", json.dumps(record, indent=2) + "\n")
    return 0


def cmd_compare(args) -> int:
    _need(args, "lam")
    model = args.lengths if args.lengths is not None else (
        InputModel.point_mass(args.n) if args.n is not None else None)
    if model is None:
        raise UsageError("compare: give --n or --lengths")
    spec = DiscountSpec.exponential(args.lam)
    a = estimator.exact_reference(args.a, model, spec, args.cutoff)
    b = estimator.exact_reference(args.b, model, spec, args.cutoff)
    verdict = compare_scores(a, b)
    label = {Comparison.A_BETTER: f"{args.a} better", Comparison.B_BETTER: f"{args.b} better",
             Comparison.INDETERMINATE: "indeterminate"}[verdict]
    pairs = [("lengths", model.name), ("lambda", fmt(args.lam)),
             (f"{args.a}", f"[{fmt(a.lo)}, {fmt(a.hi)}]"),
             (f"{args.b}", f"[{fmt(b.lo)}, {fmt(b.hi)}]"),
             ("verdict", label)]
    emit(args, "compare.txt", lines(pairs))
    return 0


def sweep_rows(algs, n_min: int, n_max: int, lambdas) -> list:
    rows = []
    for alg in sorted(set(algs)):
        for lam in sorted(set(lambdas)):
            table = sorting.score_table(alg, n_max, lam)
            for n in range(n_min, n_max + 1):
                lo, hi = sorting.closed_form_bounds(alg, n, lam)
                rows.append((alg, n, lam, lo, table.value(n), hi))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def emit_sweep(rows) -> str:
    if not rows:
        raise ValueError("empty sweep")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(SWEEP_HEADER)
    for alg, n, lam, lo, exact, hi in rows:
        w.writerow([alg, n, fmt(lam), fmt(lo), fmt(exact), fmt(hi)])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    _need(args, "n_max", "lambdas")
    algs = [a.strip() for a in args.algs.split(",") if a.strip()]
    for a in algs:
        if a not in sorting.ALGORITHMS:
            raise UsageError(f"sweep: unknown algorithm {a!r}")
    if args.n_min < 1 or args.n_max < args.n_min:
        raise UsageError("sweep: need 1 <= n-min <= n-max")
    emit(args, "sweep.csv", emit_sweep(sweep_rows(algs, args.n_min, args.n_max, args.lambdas)))
    return 0


def cmd_oracle_qn(args) -> int:
    _need(args, "n", "lam")
    if args.n > sorting.BRUTE_FORCE_MAX_N:
        raise UsageError(f"oracle-qn: n must be at most {sorting.BRUTE_FORCE_MAX_N}")
    costs = sorting.all_costs(sorting.QUICKSORT, args.n)
    counts = {}
    for c in costs:
        counts[c] = counts.get(c, 0) + 1
    brute = sorting.score_bruteforce(sorting.QUICKSORT, args.n, args.lam)
    rec = sorting.quicksort_score_table(args.n, args.lam).value(args.n)
    rel = abs(brute - rec) / max(abs(rec), 1e-300)
    dist = " + ".join(f"{k}*exp(-{fmt(args.lam * c)})" for c, k in sorted(counts.items()))
    pairs = [("n", args.n), ("lambda", fmt(args.lam)),
             ("enumeration", f"({dist})/{len(costs)} = {fmt(brute)}"),
             ("recurrence", fmt(rec)), ("relative_error", fmt(rel)),
             ("agree", str(rel <= ORACLE_RTOL).lower())]
    emit(args, "oracle-qn.txt", lines(pairs))
    return 0 if rel <= ORACLE_RTOL else 2


def cmd_vm(args) -> int:
    action = args.action
    if action in ("run", "encode", "check", "score"):
        if args.target is None:
            raise UsageError(f"vm {action}: a program is required")
        prog = read_program(args.target)
    if action == "decode":
        if args.target is None:
            raise UsageError("vm decode: a codeword is required")
        t = args.target.strip()
        bits = vm.codeword_from_hex(t) if t.lower().startswith("0x") else t
        prog = vm.decode(bits) if bits and set(bits) <= {"0", "1"} else None
        if prog is None:
            raise UsageError(f"vm decode: {args.target!r} is not a codeword")
        text = prog.text() + "\n"
    elif action == "encode":
        bits = vm.encode(prog)
        text = lines([("bits", bits), ("hex", vm.to_hex(bits)), ("length", len(bits))])
    elif action == "run":
        inputs = range(vm.WORD) if args.input is None else [args.input]
        out = []
        for x in inputs:
            if not 0 <= x < vm.WORD:
                raise UsageError("vm run: input must lie in 0..15")
            cert = vm.execute_with_halting_decision(prog, x)
            if cert.halts:
                out.append(f"x={x} halts output={cert.output} steps={cert.steps}\n")
            else:
                out.append(f"x={x} diverges repeat_step={cert.repeat_step} "
                           f"config_bound={cert.config_bound}\n")
        text = "".join(out)
    elif action == "check":
        text = lines([("problem", args.problem.name),
                      ("beta", str(vm.beta_check(prog, args.problem)).lower())])
    elif action == "score":
        score = vm.exact_program_score(prog, args.problem, args.rho)
        text = lines([("problem", args.problem.name), ("rho", ratio(args.rho)),
                      ("beta", str(vm.beta_check(prog, args.problem)).lower()),
                      ("score", ratio(score))])
    else:  # sup
        res = vm.bounded_sup_search(args.problem, args.rho, args.max_bits)
        pairs = [("problem", args.problem.name), ("rho", ratio(args.rho)),
                 ("max_bits", args.max_bits), ("examined", res.examined),
                 ("qualifying", res.qualifying)]
        if res.attained:
            bits = vm.encode(res.program)
            pairs += [("score", ratio(res.score)), ("codewordHex", vm.to_hex(bits)),
                      ("program", res.program.text())]
        else:
            pairs.append(("score", "none"))
        text = lines(pairs)
    emit(args, f"vm-{action}.txt", text)
    return 0


def cmd_improve(args) -> int:
    z0 = read_program(args.z0) if args.z0 else vm.PLANTED_SLOW
    space = prover.truth_space(args.problem, args.rho, args.max_bits)
    try:
        engine = improve.Improve(z0, space, quantum=args.quantum, pool_cap=args.pool_cap)
    except improve.ImprovementError as exc:
        raise UsageError(f"improve: {exc}")
    out = Output(args, "improve.jsonl").open()
    try:
        for event in engine.run(args.max_steps):
            out.write(event.to_json() + "\n")
    finally:
        out.close()
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edr", description="Expected discounted reward toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file of default option values")
        p.add_argument("--out", help=f"also write output here (relative to ${OUTPUT_DIR_ENV} if set)")
        return p

    def lam(p):
        p.add_argument("--lambda", dest="lam", type=parse_lambda, help="discount rate, or ln2")

    p = add("score-exact", cmd_score_exact, "Exact score of a sorting algorithm.")
    p.add_argument("--alg", choices=sorting.ALGORITHMS)
    p.add_argument("--n", type=nonneg_int)
    p.add_argument("--lengths", type=parse_model, help="length model instead of --n")
    p.add_argument("--cutoff", type=nonneg_int, default=200, help="truncation for infinite support")
    lam(p)

    p = add("score-bounds", cmd_score_bounds, "Closed-form bounds next to the exact score.")
    p.add_argument("--alg", choices=sorting.ALGORITHMS)
    p.add_argument("--n", type=nonneg_int)
    lam(p)

    p = add("score-mc", cmd_score_mc, "Monte Carlo estimate with confidence interval.")
    p.add_argument("--alg", help="mergesort, quicksort or never-halts")
    p.add_argument("--n", type=nonneg_int)
    p.add_argument("--lengths", type=parse_model)
    p.add_argument("--samples", type=pos_int)
    p.add_argument("--budget", type=pos_int)
    p.add_argument("--seed", type=nonneg_int)
    p.add_argument("--delta", type=float, default=0.05)
    lam(p)

    p = add("compare", cmd_compare, "Compare two algorithms by certified intervals.")
    p.add_argument("--a", default=sorting.MERGESORT, choices=sorting.ALGORITHMS)
    p.add_argument("--b", default=sorting.QUICKSORT, choices=sorting.ALGORITHMS)
    p.add_argument("--n", type=nonneg_int)
    p.add_argument("--lengths", type=parse_model)
    p.add_argument("--cutoff", type=nonneg_int, default=200)
    lam(p)

    p = add("sweep", cmd_sweep, "CSV of lower, exact and upper scores over a grid.")
    p.add_argument("--algs", default="mergesort,quicksort")
    p.add_argument("--n-min", type=pos_int, default=1)
    p.add_argument("--n-max", type=pos_int)
    p.add_argument("--lambdas", type=parse_lambdas, help="comma-separated, e.g. 0.1,0.3,ln2")

    p = add("oracle-qn", cmd_oracle_qn, "Quicksort recurrence against full enumeration.")
    p.add_argument("--n", type=nonneg_int)
    lam(p)

    p = add("vm", cmd_vm, "Toy machine utilities.")
    p.add_argument("action", choices=("run", "encode", "decode", "check", "score", "sup"))
    p.add_argument("target", nargs="?", help="program text (';' separated), bits, 0x-hex or @file")
    p.add_argument("--input", type=nonneg_int)
    p.add_argument("--problem", type=parse_problem, default="nonzero-identity")
    p.add_argument("--rho", type=parse_rho, default="1/2")
    p.add_argument("--max-bits", type=pos_int, default=27)

    p = add("improve", cmd_improve, "Stream the programs printed by Improve as JSON lines.")
    p.add_argument("--z0", help="initial program (default: the planted slow solver)")
    p.add_argument("--max-steps", type=pos_int, default=300)
    p.add_argument("--quantum", type=pos_int, default=improve.DEFAULT_QUANTUM)
    p.add_argument("--pool-cap", type=pos_int, default=improve.DEFAULT_POOL_CAP)
    p.add_argument("--problem", type=parse_problem, default="nonzero-identity")
    p.add_argument("--rho", type=parse_rho, default="1/2")
    p.add_argument("--max-bits", type=pos_int, default=27)
    return parser


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def apply_config(sp: argparse.ArgumentParser, path: str) -> None:
    """Install the JSON file's values as defaults of subparser ``sp``."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    known = {}
    for action in sp._actions:
        for opt in action.option_strings:
            if opt.startswith("--") and opt not in ("--help", "--config"):
                known[opt[2:]] = action
        if not action.option_strings and action.dest not in ("help",):
            known[action.dest] = action
    defaults = {}
    for key, value in data.items():
        action = known.get(key.replace("_", "-")) or known.get(key)
        if action is None:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool) or value is None or isinstance(value, dict):
            raise UsageError(f"config key {key!r} has unsupported value {value!r}")
        text = str(value)
        try:
            defaults[action.dest] = action.type(text) if action.type else text
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"config key {key!r}: {exc}")
        if action.choices is not None and defaults[action.dest] not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
    sp.set_defaults(**defaults)


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        if args.config:
            sp = _subparser(parser, args.command)
            apply_config(sp, args.config)
            args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except improve.PoolOverflow as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError, ArithmeticError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command())
