"""Boolean circuits compiled into deterministic ST domains."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from ..domain import DecisionTree, STDomain, branch
from ..domain_io import NAME, strip_comment
from ..errors import ParseError, StructureError
from ..plan import ALWAYS, Edge, Plan, PlanNode
from .base import ReductionInstance

OPS = {"NOT": 1, "AND": 2, "OR": 2}
_INPUT_RE = re.compile(rf"^input\s+({NAME}(?:\s+{NAME})*)\s*$")
_GATE_RE = re.compile(rf"^gate\s+({NAME})\s*=\s*(NOT|AND|OR)\s+({NAME})(?:\s+({NAME}))?\s*$")
_OUTPUT_RE = re.compile(rf"^output\s+({NAME}(?:\s+{NAME})*)\s*$")


@dataclass(frozen=True)
class Gate:
    name: str
    op: str
    args: tuple


@dataclass(frozen=True)
class CircuitNetlist:
    inputs: tuple
    gates: tuple
    outputs: tuple

    def __post_init__(self):
        defined = set()
        for x in self.inputs:
            if x in defined:
                raise StructureError(f"duplicate name {x!r}")
            defined.add(x)
        for g in self.gates:
            if g.op not in OPS or len(g.args) != OPS[g.op]:
                raise StructureError(f"gate {g.name}: bad operator or arity")
            for a in g.args:
                if a not in defined:
                    raise StructureError(f"gate {g.name} references {a!r} before it is defined")
            if g.name in defined:
                raise StructureError(f"duplicate name {g.name!r}")
            defined.add(g.name)
        for o in self.outputs:
            if o not in defined:
                raise StructureError(f"dangling output {o!r}")

    def simulate(self, inputs: Mapping[str, bool]) -> dict:
        """Direct evaluation; returns the value of every input and gate."""
        val = {x: bool(inputs[x]) for x in self.inputs}
        for g in self.gates:
            a = [val[x] for x in g.args]
            if g.op == "NOT":
                val[g.name] = not a[0]
            elif g.op == "AND":
                val[g.name] = a[0] and a[1]
            else:
                val[g.name] = a[0] or a[1]
        return val


def parse_netlist(text: str) -> CircuitNetlist:
    inputs, gates, outputs = [], [], []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw).strip()
        if not line:
            continue
        if m := _INPUT_RE.match(line):
            inputs += m.group(1).split()
        elif m := _GATE_RE.match(line):
            args = tuple(x for x in (m.group(3), m.group(4)) if x)
            if len(args) != OPS[m.group(2)]:
                raise ParseError(f"{m.group(2)} takes {OPS[m.group(2)]} argument(s)", no)
            gates.append(Gate(m.group(1), m.group(2), args))
        elif m := _OUTPUT_RE.match(line):
            outputs += m.group(1).split()
        else:
            raise ParseError(f"unrecognised netlist line {line!r}", no)
    try:
        return CircuitNetlist(tuple(inputs), tuple(gates), tuple(outputs))
    except StructureError as exc:
        raise ParseError(str(exc)) from None


def render_netlist(c: CircuitNetlist) -> str:
    lines = [f"input {x}" for x in c.inputs]
    lines += [f"gate {g.name} = {g.op} {' '.join(g.args)}" for g in c.gates]
    lines += [f"output {o}" for o in c.outputs]
    return "\n".join(lines) + "\n"


def circuit_trees(c: CircuitNetlist):
    gate_names = {g.name for g in c.gates}
    trees = [DecisionTree(x, branch(x, 1, 0)) for x in c.inputs]
    for g in c.gates:
        refs = [(a, a in gate_names) for a in g.args]
        if g.op == "NOT":
            (x, nx), = refs
            root = branch(x, 0, 1, new=nx)
        elif g.op == "AND":
            (x, nx), (y, ny) = refs
            root = branch(x, branch(y, 1, 0, new=ny), 0, new=nx)
        else:
            (x, nx), (y, ny) = refs
            root = branch(x, 1, branch(y, 1, 0, new=ny), new=nx)
        trees.append(DecisionTree(g.name, root))
    return trees


def circuit_to_st(c: CircuitNetlist, inputs: Mapping[str, bool]) -> ReductionInstance:
    """Domain with one ``compute`` action evaluating the whole circuit in one step."""
    missing = [x for x in c.inputs if x not in inputs]
    if missing:
        raise ValueError(f"no value given for inputs {', '.join(missing)}")
    props = tuple(c.inputs) + tuple(g.name for g in c.gates)
    init = frozenset(x for x in c.inputs if inputs[x])
    d = STDomain(props, init, ("compute",), {"compute": circuit_trees(c)}, frozenset(c.outputs))
    plan = Plan((PlanNode("loop", "compute"),), (Edge("loop", "loop", ALWAYS),), "loop")
    return ReductionInstance(
        construction="circuit-st",
        domain=d,
        theta=Fraction(0),
        claim="looping compute plan has value > theta iff every output is true on the given inputs",
        plan=plan,
        info={"inputs": {x: bool(inputs[x]) for x in c.inputs}},
    )


def compute_step(d: STDomain, state: frozenset) -> frozenset:
    """Apply ``compute`` once; the domain is deterministic."""
    succ = d.successors(d.encode_state(state), "compute")
    if len(succ) != 1 or succ[0][1] != 1:
        raise StructureError("compute is not deterministic")
    return d.decode_state(succ[0][0])
