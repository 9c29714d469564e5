"""Exact linear algebra for absorbing-chain quantities.

Systems have the fixed-point form ``x = A x + b`` over sparse rows with
Fraction entries.  They are solved one strongly connected component at a
time (sinks first); a component with a cycle is solved by fraction-free
Bareiss elimination on an integer-scaled copy of ``I - A``.
"""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction

from .errors import ProbPlanError

_ZERO = Fraction(0)


class SingularSystem(ProbPlanError, ArithmeticError):
    pass


def bareiss_solve(matrix, rhs) -> list:
    """Solve ``matrix @ x = rhs`` exactly; entries may be ints or Fractions."""
    n = len(matrix)
    rows = []
    for i in range(n):
        entries = [Fraction(v) for v in matrix[i]] + [Fraction(rhs[i])]
        scale = 1
        for v in entries:
            scale = math.lcm(scale, v.denominator)
        rows.append([int(v * scale) for v in entries])
    prev = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if rows[i][k] != 0), None)
        if piv is None:
            raise SingularSystem(f"singular system at column {k}")
        if piv != k:
            rows[k], rows[piv] = rows[piv], rows[k]
        rk = rows[k]
        pk = rk[k]
        for i in range(k + 1, n):
            ri = rows[i]
            f = ri[k]
            if f == 0:
                if pk != prev:
                    for j in range(k + 1, n + 1):
                        ri[j] = ri[j] * pk // prev
                continue
            for j in range(k + 1, n + 1):
                ri[j] = (ri[j] * pk - f * rk[j]) // prev
            ri[k] = 0
        prev = pk
    x = [_ZERO] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(rows[i][n])
        for j in range(i + 1, n):
            if rows[i][j]:
                acc -= rows[i][j] * x[j]
        x[i] = acc / rows[i][i]
    return x


def strongly_connected_components(n, succ) -> list:
    """Iterative Tarjan.  Components come out sinks first.

    ``succ(i)`` returns an iterable of successor indices.
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack, comps = [], []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def solve_fixed_point(rows, const) -> list:
    """Solve ``x_i = sum_j a_ij x_j + const_i`` for ``rows[i] = [(j, a_ij), ...]``.

    The caller guarantees ``I - A`` is non-singular (e.g. every state can
    leave the system with positive probability).
    """
    n = len(rows)
    comps = strongly_connected_components(n, lambda i: (j for j, _ in rows[i]))
    x = [None] * n
    for comp in comps:
        if len(comp) == 1:
            i = comp[0]
            acc = Fraction(const[i])
            self_coef = _ZERO
            for j, a in rows[i]:
                if j == i:
                    self_coef += a
                else:
                    acc += a * x[j]
            if self_coef == 1:
                raise SingularSystem(f"state {i} is a closed self-loop")
            x[i] = acc / (1 - self_coef) if self_coef else acc
            continue
        local = {v: k for k, v in enumerate(comp)}
        size = len(comp)
        mat = [[_ZERO] * size for _ in range(size)]
        rhs = [_ZERO] * size
        for k, i in enumerate(comp):
            mat[k][k] += 1
            acc = Fraction(const[i])
            for j, a in rows[i]:
                if j in local:
                    mat[k][local[j]] -= a
                else:
                    acc += a * x[j]
            rhs[k] = acc
        for k, v in enumerate(bareiss_solve(mat, rhs)):
            x[comp[k]] = v
    return x


def backward_reachable(n, rows, targets) -> set:
    """Indices from which some target is reachable along nonzero edges."""
    pred = [[] for _ in range(n)]
    for i in range(n):
        for j, p in rows[i]:
            if p:
                pred[j].append(i)
    seen = set(targets)
    queue = deque(seen)
    while queue:
        j = queue.popleft()
        for i in pred[j]:
            if i not in seen:
                seen.add(i)
                queue.append(i)
    return seen


def forward_reachable(start, succ) -> set:
    seen = {start}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in succ(i):
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return seen
