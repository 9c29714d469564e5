"""Command-line entry point.

Exit codes: 0 yes/success, 1 no/NONE, 2 usage or input error, 3 resource
cap hit (indeterminate).  Every command ends with a machine block of
``key = value`` lines.
"""

from __future__ import annotations

import argparse
import io
import random
import sys
from contextlib import redirect_stderr
from dataclasses import dataclass, field
from pathlib import Path

from .counting import count_models, decide_majsat, format_assignment, parse_dimacs, solve_emajsat
from .domain import FlatDomain, expand_to_flat, sample_next_state, validate_domain
from .domain_io import parse_domain
from .errors import CapExceeded, ProbPlanError
from .evaluator import (
    Interpretation,
    PlanValue,
    decide_threshold,
    evaluate_partial_order,
    evaluate_plan,
    expected_step_visits,
    simulate_success,
)
from .plan import PartialOrderPlan, PlanClass, plan_actions_chain, validate_plan
from .plan_io import parse_plan, render_plan
from .rational import DEFAULT_MAX_BITS, format_decimal, format_rational, parse_rational
from .reductions.manifest import CONSTRUCTIONS, verify_manifest, write_instance
from .search import DecisionInstance, Encoding, optimal_stationary_policy, plan_exists, policy_to_looping_plan

EXIT_YES, EXIT_NO, EXIT_ERROR, EXIT_CAP = 0, 1, 2, 3
MACHINE_KEYS = ("value.exact", "value.decimal", "decision", "witness", "candidates", "seed")


@dataclass
class CommandResult:
    exit_code: int
    report: str = ""
    machine: dict = field(default_factory=dict)

    def render(self) -> str:
        lines = [self.report.rstrip("\n")] if self.report else []
        for key in MACHINE_KEYS:
            if key in self.machine:
                lines.append(f"{key} = {self.machine[key]}")
        return "\n".join(lines) + "\n"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read(path):
    return Path(path).read_text(encoding="utf-8")


def _domain(args):
    return parse_domain(_read(args.domain), args.max_bits)


def _value_machine(v, precision):
    return {"value.exact": format_rational(v), "value.decimal": format_decimal(v, precision)}


def _rational_arg(text):
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ---------------------------------------------------------------- commands

def cmd_validate(args):
    d = _domain(args)
    rep = validate_domain(d)
    lines = [f"domain: {rep}"]
    ok = rep.ok
    if args.plan:
        p = parse_plan(_read(args.plan))
        if isinstance(p, PartialOrderPlan):
            bad = [s.id for s in p.steps if s.action not in d.actions]
            prep = "valid" if not bad else "unknown action at steps " + ", ".join(bad)
            ok = ok and not bad
        else:
            r = validate_plan(p, d)
            prep, ok = str(r), ok and r.ok
        lines.append(f"plan: {prep}")
    return CommandResult(EXIT_YES if ok else EXIT_NO, "\n".join(lines), {"decision": "valid" if ok else "invalid"})


def cmd_eval(args):
    d = _domain(args)
    p = parse_plan(_read(args.plan))
    machine = {}
    if isinstance(p, PartialOrderPlan):
        interp = Interpretation(args.interpretation or "average")
        v = evaluate_partial_order(d, p, interp, cap=args.cap)
        if v.witness is not None:
            machine["witness"] = ",".join(v.witness)
        report = f"interpretation = {interp.value}\n"
    else:
        if args.interpretation:
            raise _UsageError("--interpretation applies to partially ordered plans only")
        rep = validate_plan(p, d)
        if not rep.ok:
            return CommandResult(EXIT_ERROR, f"invalid plan:\n{rep}")
        v = evaluate_plan(d, p)
        report = ""
    report += f"value = {v.render(args.precision)}"
    machine.update(_value_machine(v.exact, args.precision))
    code = EXIT_YES
    if args.theta is not None:
        yes = decide_threshold(v, args.theta)
        machine["decision"] = "yes" if yes else "no"
        report += f"\nvalue > {format_rational(args.theta)}: {'yes' if yes else 'no'}"
        code = EXIT_YES if yes else EXIT_NO
    return CommandResult(code, report, machine)


_CLASS_CHOICES = {
    "totally-ordered": (PlanClass.TOTALLY_ORDERED, None),
    "acyclic": (PlanClass.ACYCLIC, None),
    "looping": (PlanClass.LOOPING, None),
    "po-optimistic": (PlanClass.TOTALLY_ORDERED, Interpretation.OPTIMISTIC),
    "po-pessimistic": (PlanClass.TOTALLY_ORDERED, Interpretation.PESSIMISTIC),
    "po-average": (PlanClass.TOTALLY_ORDERED, Interpretation.AVERAGE),
}


def cmd_exists(args):
    d = _domain(args)
    cls, interp = _CLASS_CHOICES[args.plan_class]
    inst = DecisionInstance(d, args.theta, cls, args.z, interp)
    out = plan_exists(inst, prune=not args.no_prune, cap=args.cap, max_split=args.max_split)
    machine = {"candidates": out.candidates}
    if out.indeterminate:
        machine["decision"] = "indeterminate"
        return CommandResult(EXIT_CAP, f"INDETERMINATE ({out.note})", machine)
    if not out.decision:
        machine["decision"] = "no"
        return CommandResult(EXIT_NO, f"no plan of size {args.z} has value > {format_rational(args.theta)}", machine)
    machine["decision"] = "yes"
    machine.update(_value_machine(out.value, args.precision))
    text = render_plan(out.witness)
    if args.witness_out:
        Path(args.witness_out).write_text(text, encoding="utf-8")
        machine["witness"] = args.witness_out
    else:
        try:
            machine["witness"] = ",".join(plan_actions_chain(out.witness))
        except ProbPlanError:
            machine["witness"] = "inline"
    report = f"found plan with value = {PlanValue(out.value).render(args.precision)}\n{text}"
    return CommandResult(EXIT_YES, report, machine)


def cmd_policy(args):
    d = _domain(args)
    if not isinstance(d, FlatDomain):
        d = expand_to_flat(d)
    pol, value = optimal_stationary_policy(d)
    lines = [f"{s}: {pol[s]}" for s in d.states]
    lines.append(f"value = {PlanValue(value).render(args.precision)}")
    machine = _value_machine(value, args.precision)
    if args.encoding:
        plan = policy_to_looping_plan(pol, d, Encoding(args.encoding))
        text = render_plan(plan)
        if args.plan_out:
            Path(args.plan_out).write_text(text, encoding="utf-8")
            machine["witness"] = args.plan_out
        else:
            lines.append(text.rstrip())
    return CommandResult(EXIT_YES, "\n".join(lines), machine)


def _parse_inputs(text):
    out = {}
    if not text:
        return out
    for part in text.split(","):
        name, _, val = part.partition("=")
        if val not in ("0", "1"):
            raise _UsageError(f"input assignment {part!r} must look like name=0 or name=1")
        out[name.strip()] = int(val)
    return out


def cmd_reduce(args):
    params = {}
    if args.construction == "emajsat-st":
        if args.k is None:
            raise _UsageError("emajsat-st needs -k")
        params["k"] = args.k
    if args.construction in ("sat-po", "discount") and args.mode:
        params["mode"] = args.mode
    if args.construction == "circuit-st":
        params["inputs"] = _parse_inputs(args.inputs)
    path = write_instance(args.construction, _read(args.source), args.out, params)
    report = f"wrote {path}"
    machine = {"witness": str(path)}
    code = EXIT_YES
    if args.verify:
        v = verify_manifest(path)
        report += "\n" + str(v)
        machine["decision"] = "verified" if v.ok else "failed"
        code = EXIT_YES if v.ok else EXIT_NO
    return CommandResult(code, report, machine)


def cmd_count(args):
    phi = parse_dimacs(_read(args.cnf))
    fixed = {}
    if args.fix:
        for part in args.fix.split(","):
            var, _, val = part.partition("=")
            if val not in ("0", "1"):
                raise _UsageError(f"fixing {part!r} must look like 3=0")
            fixed[int(var)] = val == "1"
    count = count_models(phi, fixed, cap=args.cap)
    report = f"models = {count}"
    machine = {"value.exact": str(count)}
    if args.majsat:
        yes = decide_majsat(phi, cap=args.cap)
        report += f"\nmajsat = {'yes' if yes else 'no'}"
        machine["decision"] = "yes" if yes else "no"
        return CommandResult(EXIT_YES if yes else EXIT_NO, report, machine)
    return CommandResult(EXIT_YES, report, machine)


def cmd_emajsat(args):
    phi = parse_dimacs(_read(args.cnf))
    bits = solve_emajsat(phi, args.k, cap=args.cap)
    if bits is None:
        return CommandResult(EXIT_NO, "NONE", {"decision": "no"})
    line = format_assignment(bits)
    return CommandResult(EXIT_YES, line, {"decision": "yes", "witness": line[2:]})


def cmd_sample(args):
    d = _domain(args)
    rng = random.Random(args.seed)
    machine = {"seed": args.seed}
    if args.plan:
        p = parse_plan(_read(args.plan))
        if isinstance(p, PartialOrderPlan):
            raise _UsageError("sample needs a plan, not a partial order")
        res = simulate_success(d, p, args.trials, rng, max_steps=args.max_steps)
        report = f"successes = {res.successes} / {res.trials}\ncutoffs = {res.cutoffs}\nfrequency = {format_decimal(res.frequency, args.precision)}"
        machine.update(_value_machine(res.frequency, args.precision))
        return CommandResult(EXIT_YES, report, machine)
    if args.action is None:
        raise _UsageError("sample needs --plan, or --action (with optional --state)")
    state = args.state
    if state is None:
        state = d.decode_state(d.initial_id())
    elif not isinstance(d, FlatDomain):
        state = [p for p in state.split(",") if p]
    draws = [sample_next_state(d, state, args.action, rng) for _ in range(args.trials)]
    shown = [("{" + ",".join(p for p in d.props if p in s) + "}") if not isinstance(d, FlatDomain) else s for s in draws]
    machine["witness"] = " ".join(shown)
    return CommandResult(EXIT_YES, "\n".join(shown), machine)


def cmd_visits(args):
    d = _domain(args)
    p = parse_plan(_read(args.plan))
    vis = expected_step_visits(d, p)
    lines = [f"node {n} = {format_rational(v)}" for n, v in vis.per_node.items()]
    lines += [f"action {a} = {format_rational(v)} (= {format_decimal(v, args.precision)})" for a, v in vis.per_action.items()]
    return CommandResult(EXIT_YES, "\n".join(lines))


# ------------------------------------------------------------------ parser

def build_parser():
    parser = _Parser(prog="probplan", description="Exact probabilistic planning toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, domain=True):
        if domain:
            p.add_argument("--domain", required=True, help="stdomain or flatdomain file")
        p.add_argument("--precision", type=int, default=6, help="decimal digits in reports")
        p.add_argument("--max-bits", type=int, default=DEFAULT_MAX_BITS, help="bit bound per probability literal")

    p = sub.add_parser("validate", help="check a domain (and optionally a plan)")
    common(p)
    p.add_argument("--plan")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", help="evaluate a plan exactly")
    common(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--interpretation", choices=[i.value for i in Interpretation])
    p.add_argument("--theta", type=_rational_arg)
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("exists", help="search for a plan of bounded size")
    common(p)
    p.add_argument("--class", dest="plan_class", choices=list(_CLASS_CHOICES), default="totally-ordered")
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--theta", type=_rational_arg, required=True)
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--cap", type=int, default=10**7)
    p.add_argument("--max-split", type=int, default=2)
    p.add_argument("--witness-out")
    p.set_defaults(func=cmd_exists)

    p = sub.add_parser("policy", help="optimal stationary policy of a flat domain")
    common(p)
    p.add_argument("--encoding", choices=[e.value for e in Encoding])
    p.add_argument("--plan-out")
    p.set_defaults(func=cmd_policy)

    p = sub.add_parser("reduce", help="compile a source instance into planning files")
    p.add_argument("construction", choices=CONSTRUCTIONS)
    p.add_argument("--source", required=True, help="DIMACS, netlist or reward-MDP file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-k", type=int)
    p.add_argument("--mode", help="optimistic|pessimistic for sat-po, exact|no-sink for discount")
    p.add_argument("--inputs", help="circuit inputs, e.g. a=1,b=0")
    p.add_argument("--verify", action="store_true", help="re-check the claim after writing")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("count", help="count models of a CNF")
    p.add_argument("--cnf", required=True)
    p.add_argument("--fix", help="partial assignment, e.g. 1=0,2=1")
    p.add_argument("--majsat", action="store_true")
    p.add_argument("--cap", type=int, default=30)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("emajsat", help="solve E-MAJSAT")
    p.add_argument("--cnf", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--cap", type=int, default=30)
    p.set_defaults(func=cmd_emajsat)

    p = sub.add_parser("sample", help="seeded sampling or Monte-Carlo rollouts")
    common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--plan")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--state", help="flat state name or comma-separated true propositions")
    p.add_argument("--action")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("visits", help="expected executions of each plan step")
    common(p)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_visits)
    return parser


def run(argv) -> CommandResult:
    parser = build_parser()
    try:
        with redirect_stderr(io.StringIO()):
            args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise _UsageError("a subcommand is required")
        return args.func(args)
    except _UsageError as exc:
        return CommandResult(EXIT_ERROR, f"usage error: {exc}\n{parser.format_usage().rstrip()}")
    except SystemExit as exc:
        # --help exits through argparse
        return CommandResult(EXIT_YES if not exc.code else EXIT_ERROR, parser.format_help())
    except CapExceeded as exc:
        return CommandResult(EXIT_CAP, f"INDETERMINATE: {exc}", {"decision": "indeterminate"})
    except (ProbPlanError, ValueError, KeyError, OSError) as exc:
        return CommandResult(EXIT_ERROR, f"error: {exc}")


def main(argv=None) -> int:
    result = run(sys.argv[1:] if argv is None else argv)
    stream = sys.stdout if result.exit_code in (EXIT_YES, EXIT_NO) else sys.stderr
    stream.write(result.render())
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
