"""Chvatal-Gomory cut generation, tableau cuts and cut-scoring helpers."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .instance import Cut, IlpInstance
from .lp import LpStatus, solve_lp
from .rational import as_rational, rational_frac


class CutValidityError(ValueError):
    pass


class LpNotSolvedError(RuntimeError):
    pass


class UndefinedScoreError(ValueError):
    pass


class BoxTooLargeError(ValueError):
    pass


def cg_cut_from_weights(inst: IlpInstance, u: Sequence) -> Cut:
    """Floored CG cut ``floor(u^T A) x <= floor(u^T b)`` for ``u >= 0``.

    Flooring the coefficients keeps the cut valid for any ``u >= 0`` because
    ``x >= 0``.
    """
    u = tuple(as_rational(v) for v in u)
    if len(u) != inst.m:
        raise CutValidityError(f"weight vector has length {len(u)}, expected m={inst.m}")
    if any(v < 0 for v in u):
        raise CutValidityError("CG weights must be nonnegative")
    coeffs = tuple(
        Fraction(math.floor(sum(ui * inst.A[i][j] for i, ui in enumerate(u) if ui)))
        for j in range(inst.n)
    )
    rhs = Fraction(math.floor(sum(ui * bi for ui, bi in zip(u, inst.b) if ui)))
    return Cut(coeffs, rhs)


def tableau_weights(inst: IlpInstance) -> list[tuple[int, tuple[Fraction, ...]]]:
    """Fractional parts of the optimal basis-inverse rows, skipping all-zero rows."""
    sol = solve_lp(inst)
    if sol.status is not LpStatus.OPTIMAL:
        raise LpNotSolvedError(f"LP relaxation of {inst.id!r} is {sol.status.value}")
    out = []
    for k, row in enumerate(sol.basis_inverse_rows):
        u = tuple(rational_frac(v) for v in row)
        if any(u):
            out.append((k, u))
    return out


def tableau_cg_cuts(inst: IlpInstance) -> list[tuple[int, Cut]]:
    """CG cuts read from the optimal simplex tableau, one per nontrivial row.

    Rows whose weights floor to the trivial cut ``0 <= 0`` are dropped as well,
    so an integral LP vertex yields an empty list.
    """
    out = []
    for k, u in tableau_weights(inst):
        cut = cg_cut_from_weights(inst, u)
        if not cut.is_trivial:
            out.append((k, cut))
    return out


def parallelism_score(inst: IlpInstance, cut: Cut) -> float:
    """Cosine between the cut normal and the objective vector."""
    c = np.array([float(v) for v in inst.c])
    a = np.array([float(v) for v in cut.coeffs])
    nc, na = np.linalg.norm(c), np.linalg.norm(a)
    if nc == 0 or na == 0:
        raise UndefinedScoreError("parallelism is undefined for a zero vector")
    return float(np.clip(c @ a / (nc * na), -1.0, 1.0))


def squeeze(v):
    """Logistic squeezing map onto ``[0, 1]``; negatives land below 1/2."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def is_valid_cut(inst: IlpInstance, cut: Cut, box: Sequence[tuple[int, int]], max_points: int = 10**7) -> bool:
    """Brute-force check that no integer point of ``inst`` inside ``box`` violates ``cut``.

    Rows are scaled to integers first, so the lattice test is exact.
    """
    if len(box) != inst.n:
        raise ValueError("box needs one (lo, hi) pair per variable")
    ranges = [range(max(0, lo), hi + 1) for lo, hi in box]
    if math.prod(len(r) for r in ranges) > max_points:
        raise BoxTooLargeError(f"box has more than {max_points} lattice points")
    if cut.is_trivial:
        return True
    rows = [r for r, _, _ in inst.integer_rows]
    rhs = [b for _, b, _ in inst.integer_rows]
    lam = math.lcm(*(q.denominator for q in cut.coeffs + (cut.rhs,)))
    rows.append([int(a * lam) for a in cut.coeffs])
    rhs.append(int(cut.rhs * lam))
    coef_max = max(abs(v) for row in rows for v in row) + max(abs(v) for v in rhs)
    x_max = max((r[-1] for r in ranges if len(r)), default=0)
    dtype = np.int64 if coef_max * (x_max + 1) * (inst.n + 1) < 2**62 else object
    mat = np.array(rows, dtype=dtype).T
    bound = np.array(rhs, dtype=dtype)
    points = itertools.product(*ranges)
    while True:
        chunk = np.array(list(itertools.islice(points, 65536)), dtype=dtype)
        if chunk.size == 0:
            return True
        lhs = chunk.reshape(len(chunk), inst.n) @ mat
        feasible = (lhs[:, :-1] <= bound[:-1]).all(axis=1)
        if (feasible & (lhs[:, -1] > bound[-1])).any():
            return False
