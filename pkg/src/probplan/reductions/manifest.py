"""Writing compiled instances to disk and re-checking their claims."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from ..counting import count_models, decide_majsat, is_satisfiable_bruteforce, parse_dimacs, solve_emajsat
from ..domain import STDomain, validate_domain
from ..domain_io import parse_domain, render_domain
from ..evaluator import Interpretation, evaluate_looping, evaluate_partial_order, evaluate_plan
from ..plan import PartialOrderPlan, PlanClass
from ..plan_io import parse_plan, render_plan
from ..rational import format_rational, parse_rational
from ..search import DecisionInstance, StationaryPolicy, all_stationary_policies, evaluate_policy, plan_exists
from .circuit import circuit_to_st, parse_netlist
from .discount import DiscountMode, discount_instance, discounted_policy_values, parse_reward_mdp
from .majsat import emajsat_to_st, majsat_to_po_average, majsat_to_st
from .sat import sat_to_flat, sat_to_po_eval

CONSTRUCTIONS = ("sat-flat", "majsat-st", "emajsat-st", "circuit-st", "discount", "sat-po", "majsat-po-avg")
SOURCE_SUFFIX = {"circuit-st": ".net", "discount": ".mdp"}
MANIFEST_NAME = "manifest.json"
POLICY_CAP = 4096


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def compile_source(construction: str, source_text: str, params: dict | None = None):
    """Build a ReductionInstance from source text and construction parameters."""
    params = dict(params or {})
    if construction == "sat-flat":
        return sat_to_flat(parse_dimacs(source_text))
    if construction == "majsat-st":
        return majsat_to_st(parse_dimacs(source_text))
    if construction == "emajsat-st":
        return emajsat_to_st(parse_dimacs(source_text), int(params["k"]))
    if construction == "sat-po":
        return sat_to_po_eval(parse_dimacs(source_text), params.get("mode", "optimistic"))
    if construction == "majsat-po-avg":
        return majsat_to_po_average(parse_dimacs(source_text))
    if construction == "circuit-st":
        c = parse_netlist(source_text)
        inputs = {x: bool(int(v)) for x, v in dict(params.get("inputs", {})).items()}
        return circuit_to_st(c, inputs)
    if construction == "discount":
        return discount_instance(parse_reward_mdp(source_text), params.get("mode", "exact"))
    raise ValueError(f"unknown construction {construction!r}; choose from {', '.join(CONSTRUCTIONS)}")


def write_instance(construction: str, source_text: str, outdir, params: dict | None = None) -> Path:
    """Compile, then write domain, plan, a copy of the source and the manifest.  Returns the manifest path."""
    params = dict(params or {})
    inst = compile_source(construction, source_text, params)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    src_name = "source" + SOURCE_SUFFIX.get(construction, ".cnf")
    dom_name = "domain.st" if isinstance(inst.domain, STDomain) else "domain.flat"
    (out / src_name).write_text(source_text, encoding="utf-8")
    (out / dom_name).write_text(render_domain(inst.domain), encoding="utf-8")
    plan_name = None
    if inst.plan is not None:
        plan_name = "plan.poplan" if isinstance(inst.plan, PartialOrderPlan) else "plan.plan"
        (out / plan_name).write_text(render_plan(inst.plan), encoding="utf-8")
    manifest = {
        "construction": construction,
        "claim": inst.claim,
        "theta": format_rational(inst.theta),
        "z": inst.z,
        "plan_class": inst.plan_class,
        "interpretation": inst.interpretation,
        "parameters": params,
        "source_file": src_name,
        "source_sha256": sha256_text(source_text),
        "domain_file": dom_name,
        "plan_file": plan_name,
        "info": inst.info,
    }
    path = out / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@dataclass
class Verification:
    checks: list = field(default_factory=list)

    def add(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def __str__(self):
        return "\n".join(f"{'ok  ' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}" for name, ok, detail in self.checks)


def _claim_holds(construction, inst, domain, plan, source_text, params, v: Verification):
    theta = inst.theta
    if construction == "sat-flat":
        phi = parse_dimacs(source_text)
        out = plan_exists(DecisionInstance(domain, theta, PlanClass.TOTALLY_ORDERED, inst.z))
        truth = is_satisfiable_bruteforce(phi)
        v.add("claim", out.decision == truth, f"plan exists = {out.decision}, satisfiable = {truth}")
    elif construction == "majsat-st":
        phi = parse_dimacs(source_text)
        value = evaluate_plan(domain, plan).exact
        expect = Fraction(count_models(phi), 1 << phi.num_vars)
        v.add("value", value == expect, f"{format_rational(value)} vs model fraction {format_rational(expect)}")
        v.add("claim", (value > theta) == decide_majsat(phi))
    elif construction == "emajsat-st":
        phi = parse_dimacs(source_text)
        out = plan_exists(DecisionInstance(domain, theta, PlanClass.TOTALLY_ORDERED, inst.z))
        truth = solve_emajsat(phi, int(params["k"])) is not None
        v.add("claim", out.decision == truth, f"plan exists = {out.decision}, e-majsat = {truth}")
    elif construction == "circuit-st":
        c = parse_netlist(source_text)
        inputs = {x: bool(int(b)) for x, b in params.get("inputs", {}).items()}
        vals = c.simulate(inputs)
        truth = all(vals[o] for o in c.outputs)
        value = evaluate_looping(domain, plan).exact
        v.add("claim", (value > theta) == truth, f"value {format_rational(value)}, outputs true = {truth}")
    elif construction == "discount":
        m = parse_reward_mdp(source_text)
        if inst.info.get("mode") != DiscountMode.EXACT.value:
            v.add("claim", True, "no-sink mode: identity not asserted")
            return
        n_pol = len(m.skeleton.actions) ** len(m.skeleton.states)
        if n_pol > POLICY_CAP:
            v.add("claim", False, f"{n_pol} policies exceed verification cap {POLICY_CAP}")
            return
        gamma = m.discount
        bad = 0
        for pol in all_stationary_policies(m.skeleton):
            g = evaluate_policy(domain, StationaryPolicy({**pol.mapping, **_sink_actions(domain, m, pol)}))
            dv = discounted_policy_values(m, pol.mapping)[m.skeleton.initial]
            bad += g != (1 - gamma) * dv
        v.add("claim", bad == 0, f"{n_pol} policies checked, {bad} mismatches")
    elif construction in ("sat-po", "majsat-po-avg"):
        phi = parse_dimacs(source_text)
        interp = Interpretation(inst.interpretation)
        value = evaluate_partial_order(domain, plan, interp).exact
        if construction == "majsat-po-avg":
            truth = decide_majsat(phi)
        elif interp is Interpretation.OPTIMISTIC:
            truth = is_satisfiable_bruteforce(phi)
        else:
            truth = not is_satisfiable_bruteforce(phi)
        v.add("claim", (value > theta) == truth, f"value {format_rational(value)}, expected decision {truth}")


def _sink_actions(domain, m, pol):
    extra = [s for s in domain.states if s not in m.skeleton.states]
    return {s: domain.actions[0] for s in extra}


def verify_manifest(path) -> Verification:
    """Re-read the emitted files, rebuild from the source, and re-check the claim."""
    path = Path(path)
    base = path.parent
    man = json.loads(path.read_text(encoding="utf-8"))
    v = Verification()
    construction = man["construction"]
    source_text = (base / man["source_file"]).read_text(encoding="utf-8")
    v.add("source hash", sha256_text(source_text) == man["source_sha256"])
    params = man.get("parameters") or {}
    inst = compile_source(construction, source_text, params)
    domain = parse_domain((base / man["domain_file"]).read_text(encoding="utf-8"))
    v.add("domain valid", validate_domain(domain).ok, str(validate_domain(domain)))
    v.add("domain matches source", render_domain(domain) == render_domain(inst.domain))
    plan = None
    if man.get("plan_file"):
        plan = parse_plan((base / man["plan_file"]).read_text(encoding="utf-8"))
        v.add("plan matches source", render_plan(plan) == render_plan(inst.plan))
    v.add("theta", parse_rational(man["theta"]) == inst.theta, man["theta"])
    v.add("z", man.get("z") == inst.z)
    _claim_holds(construction, inst, domain, plan, source_text, params, v)
    return v


