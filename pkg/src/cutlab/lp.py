"""Exact LP relaxation solver over ``{A x <= b, x >= 0}`` plus appended cut rows."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from . import _kernel
from .instance import Cut, IlpInstance
from .rational import lcm_of_denominators


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


_STATUS = {
    _kernel.OPTIMAL: LpStatus.OPTIMAL,
    _kernel.INFEASIBLE: LpStatus.INFEASIBLE,
    _kernel.UNBOUNDED: LpStatus.UNBOUNDED,
}


@dataclass(frozen=True)
class LpSolution:
    """Simplex result.

    ``basis`` lists, per tableau row, the basic column of the slack-extended
    system ``[A | I]`` (structural columns first, then one slack per row in
    row order, cuts included).  ``basis_inverse_rows[k]`` is row ``k`` of
    ``B^-1`` for that same ordering.
    """

    status: LpStatus
    x_star: tuple[Fraction, ...] | None = None
    objective: Fraction | None = None
    basis: tuple[int, ...] = ()
    _slack_block: tuple = field(default=(), repr=False, compare=False)
    _denominator: int = field(default=1, repr=False, compare=False)
    _row_scales: tuple[int, ...] = field(default=(), repr=False, compare=False)
    _n: int = field(default=0, repr=False, compare=False)

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    @cached_property
    def basis_inverse_rows(self) -> tuple[tuple[Fraction, ...], ...]:
        if not self.is_optimal:
            raise ValueError("basis inverse only exists for an optimal solution")
        n, d, lam = self._n, self._denominator, self._row_scales
        rows = []
        for k, var in enumerate(self.basis):
            den = d * (lam[var - n] if var >= n else 1)
            rows.append(tuple(Fraction(v * lam[i], den) for i, v in enumerate(self._slack_block[k])))
        return tuple(rows)

    def is_integral(self) -> bool:
        return self.x_star is not None and all(v.denominator == 1 for v in self.x_star)

    def with_objective(self, objective: Fraction) -> "LpSolution":
        """Copy with a replaced objective value (used to test certificates)."""
        return _replace(self, objective=objective)

    def with_basis(self, basis: Sequence[int], basis_inverse_rows=None) -> "LpSolution":
        out = _replace(self, basis=tuple(basis))
        if basis_inverse_rows is not None:
            out.__dict__["basis_inverse_rows"] = tuple(tuple(r) for r in basis_inverse_rows)
        else:
            out.__dict__["basis_inverse_rows"] = self.basis_inverse_rows
        return out


def _replace(sol: LpSolution, **changes) -> LpSolution:
    import dataclasses

    return dataclasses.replace(sol, **changes)


def _scaled_cut(cut: Cut) -> tuple[tuple[int, ...], int, int]:
    lam = lcm_of_denominators(cut.coeffs + (cut.rhs,))
    return tuple(int(a * lam) for a in cut.coeffs), int(cut.rhs * lam), lam


def solve_lp(inst: IlpInstance, extra_cuts: Sequence[Cut] = (), backend: str | None = None) -> LpSolution:
    """Maximize ``c^T x`` over the LP relaxation with ``extra_cuts`` appended as rows.

    Bland's rule in both phases makes the returned basis a deterministic
    function of the input.  Infeasibility and unboundedness are reported
    through ``status``.
    """
    n = inst.n
    for cut in extra_cuts:
        if len(cut.coeffs) != n:
            raise ValueError(f"cut has {len(cut.coeffs)} coefficients, expected {n}")
    scaled = list(inst.integer_rows) + [_scaled_cut(cut) for cut in extra_cuts]
    M = len(scaled)
    nreal = n + M
    width = 1 + nreal
    lam_c = lcm_of_denominators(inst.c)
    c_int = [int(v * lam_c) for v in inst.c]

    rows = []
    basis = []
    phase1 = [0] * width
    for i, (coeffs, rhs, _) in enumerate(scaled):
        row = [0] * width
        sign = -1 if rhs < 0 else 1
        row[0] = sign * rhs
        for j, a in enumerate(coeffs):
            if a:
                row[1 + j] = sign * a
        row[1 + n + i] = sign
        rows.append(row)
        if sign < 0:
            basis.append(-1)
            for j in range(width):
                phase1[j] -= row[j]
        else:
            basis.append(n + i)
    obj = [0] * width
    for j, cj in enumerate(c_int):
        obj[1 + j] = -cj
    rows.append(obj)
    rows.append(phase1)

    status, d, N, bas = _kernel.run(rows, basis, nreal, backend)
    st = _STATUS[status]
    if st is not LpStatus.OPTIMAL:
        return LpSolution(st)
    x = [Fraction(0)] * n
    for k, var in enumerate(bas):
        if var < n:
            x[var] = Fraction(N[k][0], d)
    slack = tuple(tuple(N[k][1 + n : 1 + n + M]) for k in range(M))
    return LpSolution(
        LpStatus.OPTIMAL,
        tuple(x),
        Fraction(N[M][0], d * lam_c),
        tuple(bas),
        slack,
        d,
        tuple(s[2] for s in scaled),
        n,
    )


def verify_lp_certificate(inst: IlpInstance, cuts: Sequence[Cut], sol: LpSolution) -> bool:
    """Independent exact check of an optimal simplex certificate.

    Confirms ``B @ B^-1 == I``, primal feasibility of the basic solution and of
    ``x_star``, agreement of ``x_star`` and the objective with the basis, and
    nonpositive reduced costs for every column.
    """
    if not sol.is_optimal or sol.x_star is None or sol.objective is None:
        return False
    full = inst.with_rows(cuts)
    n, M = full.n, full.m
    basis = list(sol.basis)
    if len(basis) != M or len(set(basis)) != M or any(not 0 <= v < n + M for v in basis):
        return False
    try:
        binv = sol.basis_inverse_rows
    except ValueError:
        return False
    if len(binv) != M or any(len(r) != M for r in binv):
        return False

    def column(j):
        if j < n:
            return [full.A[i][j] for i in range(M)]
        return [Fraction(int(i == j - n)) for i in range(M)]

    cols = [column(j) for j in basis]
    # B[i][k] = cols[k][i]; check (B @ Binv)[i][l] == delta
    for i in range(M):
        for l in range(M):
            v = sum(cols[k][i] * binv[k][l] for k in range(M))
            if v != (1 if i == l else 0):
                return False
    x_b = [sum(binv[k][i] * full.b[i] for i in range(M)) for k in range(M)]
    if any(v < 0 for v in x_b):
        return False
    x = [Fraction(0)] * n
    for k, j in enumerate(basis):
        if j < n:
            x[j] = x_b[k]
    if tuple(x) != tuple(sol.x_star) or not full.is_feasible_point(x):
        return False
    if full.objective(x) != sol.objective:
        return False
    cost = lambda j: full.c[j] if j < n else Fraction(0)  # noqa: E731
    y = [sum(cost(basis[k]) * binv[k][i] for k in range(M)) for i in range(M)]
    for j in range(n + M):
        col = column(j)
        if cost(j) - sum(y[i] * col[i] for i in range(M)) > 0:
            return False
    return True
