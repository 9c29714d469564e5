"""CNF formulas, exact model counting, MAJSAT and E-MAJSAT."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import CapExceeded, ParseError

DEFAULT_FREE_CAP = 30


@dataclass(frozen=True)
class CnfFormula:
    """``clauses`` holds DIMACS-style int literals (``-2`` is not x2).

    Duplicate literals inside a clause are merged on construction; a clause
    holding both ``v`` and ``-v`` is tautological and kept as is.
    """

    num_vars: int
    clauses: tuple

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("negative variable count")
        cleaned = []
        for c in self.clauses:
            seen = []
            for lit in c:
                lit = int(lit)
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")
                if lit not in seen:
                    seen.append(lit)
            cleaned.append(tuple(seen))
        object.__setattr__(self, "clauses", tuple(cleaned))

    @classmethod
    def from_signed(cls, num_vars, clauses):
        """Build from clauses of ``(index, sign)`` pairs with sign in {-1, 1}."""
        return cls(num_vars, tuple(tuple(i * s for i, s in c) for c in clauses))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def signed_clauses(self):
        return [[(abs(l), 1 if l > 0 else -1) for l in c] for c in self.clauses]

    def is_tautological(self, j) -> bool:
        c = set(self.clauses[j])
        return any(-l in c for l in c)

    def satisfied_by(self, assignment) -> bool:
        """``assignment`` maps variable index to bool (or is a 1-based sequence)."""
        val = _as_lookup(assignment)
        return all(any(val(abs(l)) == (l > 0) for l in c) for c in self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines += [" ".join(str(l) for l in c) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def _as_lookup(assignment):
    if isinstance(assignment, Mapping):
        return lambda v: bool(assignment[v])
    seq = list(assignment)
    return lambda v: bool(seq[v - 1])


def parse_dimacs(text: str) -> CnfFormula:
    n = m = None
    clauses, current = [], []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if n is not None:
                raise ParseError("duplicate problem line", no)
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError("malformed header, expected 'p cnf VARS CLAUSES'", no)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError("malformed header counts", no) from None
            if n < 0 or m < 0:
                raise ParseError("negative header count", no)
            continue
        if n is None:
            raise ParseError("clause before 'p cnf' header", no)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"invalid literal {tok!r}", no) from None
            if lit == 0:
                clauses.append(current)
                current = []
            elif abs(lit) > n:
                raise ParseError(f"literal {lit} out of range 1..{n}", no)
            else:
                current.append(lit)
    if n is None:
        raise ParseError("missing 'p cnf' header")
    if current:
        raise ParseError("last clause is missing its terminating 0")
    if len(clauses) != m:
        raise ParseError(f"header declares {m} clauses, found {len(clauses)}")
    return CnfFormula(n, tuple(tuple(c) for c in clauses))


def _fixed_literals(phi: CnfFormula, fixed):
    fixed = dict(fixed or {})
    for v in fixed:
        if not 1 <= v <= phi.num_vars:
            raise ValueError(f"fixed variable {v} out of range")
    return {v: bool(b) for v, b in fixed.items()}


def count_models(phi: CnfFormula, fixed: Optional[Mapping[int, bool]] = None, cap: int = DEFAULT_FREE_CAP) -> int:
    """Number of total assignments extending ``fixed`` that satisfy ``phi``.

    DPLL with unit propagation; each branch that empties the clause set
    contributes ``2 ** (number of unassigned variables)``.
    """
    fixed = _fixed_literals(phi, fixed)
    free = phi.num_vars - len(fixed)
    if free > cap:
        raise CapExceeded(f"{free} free variables", cap)
    clauses = []
    for c in phi.clauses:
        if any(abs(l) in fixed and fixed[abs(l)] == (l > 0) for l in c):
            continue
        rest = frozenset(l for l in c if abs(l) not in fixed)
        if not rest:
            return 0
        if any(-l in rest for l in rest):
            continue
        clauses.append(rest)
    return _dpll(clauses, free)


def _assign(clauses, lit):
    out = []
    for c in clauses:
        if lit in c:
            continue
        if -lit in c:
            c = c - {-lit}
            if not c:
                return None
        out.append(c)
    return out


def _dpll(clauses, free):
    while True:
        if not clauses:
            return 1 << free
        unit = next((c for c in clauses if len(c) == 1), None)
        if unit is None:
            break
        (lit,) = unit
        clauses = _assign(clauses, lit)
        free -= 1
        if clauses is None:
            return 0
    counts = {}
    for c in clauses:
        for l in c:
            counts[abs(l)] = counts.get(abs(l), 0) + 1
    var = max(sorted(counts), key=counts.__getitem__)
    total = 0
    for lit in (var, -var):
        sub = _assign(clauses, lit)
        if sub is not None:
            total += _dpll(sub, free - 1)
    return total


def count_models_exhaustive(phi: CnfFormula, fixed: Optional[Mapping[int, bool]] = None) -> int:
    """Brute-force oracle: try every extension of ``fixed``."""
    fixed = _fixed_literals(phi, fixed)
    free = [v for v in range(1, phi.num_vars + 1) if v not in fixed]
    total = 0
    for bits in itertools.product((False, True), repeat=len(free)):
        val = dict(fixed)
        val.update(zip(free, bits))
        if phi.satisfied_by(val):
            total += 1
    return total


def is_satisfiable_bruteforce(phi: CnfFormula) -> bool:
    return any(phi.satisfied_by(bits) for bits in itertools.product((False, True), repeat=phi.num_vars))


def decide_majsat(phi: CnfFormula, cap: int = DEFAULT_FREE_CAP) -> bool:
    """Strict majority: more than half of the 2^n assignments satisfy ``phi``."""
    if phi.num_vars < 1:
        raise ValueError("MAJSAT needs at least one variable")
    return 2 * count_models(phi, cap=cap) > 1 << phi.num_vars


def solve_emajsat(phi: CnfFormula, k: int, cap: int = DEFAULT_FREE_CAP):
    """Lexicographically smallest choice ``b`` for x1..xk with a strict majority.

    Returns a tuple of k bools (False < True, x1 most significant) or None.
    ``k = 0`` asks MAJSAT; ``k = n`` asks SAT.
    """
    n = phi.num_vars
    if not 0 <= k <= n:
        raise ValueError(f"k must be in 0..{n}, got {k}")
    for bits in itertools.product((False, True), repeat=k):
        fixed = {i + 1: b for i, b in enumerate(bits)}
        if 2 * count_models(phi, fixed, cap=cap) > 1 << (n - k):
            return tuple(bits)
    return None


def format_assignment(bits) -> str:
    return "v " + " ".join(f"{i}={int(b)}" for i, b in enumerate(bits, start=1))
