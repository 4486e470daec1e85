"""Brute-force references, written independently of the package internals."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from cutlab.instance import IlpInstance


def lattice_points(box):
    return itertools.product(*(range(lo, hi + 1) for lo, hi in box))


def lattice_optimum(inst: IlpInstance, box):
    """Best objective value over feasible integer points of ``box`` (None if none)."""
    best = None
    for x in lattice_points(box):
        if inst.is_feasible_point(x):
            v = inst.objective(x)
            if best is None or v > best:
                best = v
    return best


def _solve_square(rows, rhs):
    """Gauss-Jordan over Fractions; None when singular."""
    k = len(rows)
    M = [list(r) + [v] for r, v in zip(rows, rhs)]
    for col in range(k):
        piv = next((r for r in range(col, k) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(k):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[r][k] for r in range(k)]


def vertex_optimum(inst: IlpInstance):
    """Max of c.x over all basic feasible points of {Ax <= b, x >= 0}."""
    n = inst.n
    rows = [list(r) for r in inst.A] + [[Fraction(-int(i == j)) for j in range(n)] for i in range(n)]
    rhs = list(inst.b) + [Fraction(0)] * n
    best = None
    for pick in itertools.combinations(range(len(rows)), n):
        x = _solve_square([rows[i] for i in pick], [rhs[i] for i in pick])
        if x is None or not inst.is_feasible_point(x):
            continue
        v = inst.objective(x)
        if best is None or v > best:
            best = v
    return best


def _lp_2d(inst: IlpInstance, extra):
    """Vertex-enumeration LP returning (value, x) for a bounded problem; ties keep the first vertex found."""
    full = inst.with_rows(extra)
    n = full.n
    rows = [list(r) for r in full.A] + [[Fraction(-int(i == j)) for j in range(n)] for i in range(n)]
    rhs = list(full.b) + [Fraction(0)] * n
    best = None
    for pick in itertools.combinations(range(len(rows)), n):
        x = _solve_square([rows[i] for i in pick], [rhs[i] for i in pick])
        if x is None or not full.is_feasible_point(x):
            continue
        v = full.objective(x)
        if best is None or v > best[0]:
            best = (v, tuple(x))
    return best


def recursive_bnc_size(inst: IlpInstance):
    """Depth-first branch and bound counted by hand-rolled recursion.

    Floor child first, lowest-index fractional variable, prune when the bound
    does not beat the incumbent.  Returns (nodes, incumbent value, incumbent x).
    Only valid when every LP visited has a unique optimal vertex.
    """
    from cutlab.instance import Cut

    state = {"nodes": 0, "best": None, "x": None}

    def visit(extra):
        state["nodes"] += 1
        lp = _lp_2d(inst, extra)
        if lp is None:
            return
        z, x = lp
        if state["best"] is not None and z <= state["best"]:
            return
        frac = [j for j, v in enumerate(x) if v.denominator != 1]
        if not frac:
            state["best"], state["x"] = z, tuple(int(v) for v in x)
            return
        j = frac[0]
        f = x[j].numerator // x[j].denominator
        unit = [int(i == j) for i in range(inst.n)]
        visit(extra + [Cut(unit, f)])
        visit(extra + [Cut([-u for u in unit], -(f + 1))])

    visit([])
    return state["nodes"], state["best"], state["x"]


def random_bounded_instance(rng: np.random.Generator, n: int, m: int, upper: int = 4, lo: int = -5, hi: int = 5,
                            id: str = "rand") -> tuple[IlpInstance, list[tuple[int, int]]]:
    """``m`` random rows plus ``x_j <= upper`` bounds, and the integer box they imply."""
    A = rng.integers(lo, hi + 1, size=(m, n)).tolist()
    b = rng.integers(-2, 4 * hi + 1, size=m).tolist()
    c = rng.integers(-5, 11, size=n).tolist()
    A += [[int(i == j) for j in range(n)] for i in range(n)]
    b += [upper] * n
    return IlpInstance(A, b, c, id), [(0, upper)] * n
