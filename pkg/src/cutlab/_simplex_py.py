"""Pure-Python fraction-free simplex kernel (fallback for ``_simplex_ext``).

The tableau ``N`` is a list of integer rows holding ``d * B^-1 [b | M]`` for the
current basis ``B``, where ``d`` is a common denominator (Bareiss pivoting keeps
every entry an exact integer).  Layout: column 0 is the right-hand side,
columns ``1..nreal`` are the structural then slack variables.  Rows ``0..M-1``
are constraints, row ``M`` the phase-2 objective, row ``M+1`` the phase-1
objective.  ``basis[i]`` is a variable index in ``[0, nreal)`` or ``-1`` for a
row whose artificial variable is still basic.

Both kernels follow Bland's rule exactly, so they take the same pivot path.
"""

OPTIMAL, INFEASIBLE, UNBOUNDED, OVERFLOW = 0, 1, 2, 3


def _pivot(N, nrows, r, s, d):
    prow = N[r]
    p = prow[s]
    for i in range(nrows):
        if i == r:
            continue
        row = N[i]
        f = row[s]
        if f == 0:
            if p != d:
                N[i] = [v * p // d for v in row]
        elif d == 1:
            N[i] = [v * p - f * w for v, w in zip(row, prow)]
        else:
            N[i] = [(v * p - f * w) // d for v, w in zip(row, prow)]
    if p < 0:
        for i in range(nrows):
            N[i] = [-v for v in N[i]]
        return -p
    return p


def _ratio_row(N, M, s, basis, nreal):
    best = -1
    for i in range(M):
        a = N[i][s]
        if a <= 0:
            continue
        if best < 0:
            best = i
            continue
        lhs = N[i][0] * N[best][s]
        rhs = N[best][0] * a
        if lhs < rhs:
            best = i
        elif lhs == rhs:
            bi = basis[i] if basis[i] >= 0 else nreal + i
            bb = basis[best] if basis[best] >= 0 else nreal + best
            if bi < bb:
                best = i
    return best


def run_simplex(N, basis, nreal):
    """Two-phase primal simplex on ``N`` in place; returns ``(status, d)``."""
    M = len(N) - 2
    d = 1
    if any(b < 0 for b in basis):
        obj = N[M + 1]
        nrows = M + 2
        while True:
            s = 0
            for j in range(1, nreal + 1):
                if obj[j] < 0:
                    s = j
                    break
            if s == 0:
                break
            r = _ratio_row(N, M, s, basis, nreal)
            d = _pivot(N, nrows, r, s, d)
            obj = N[M + 1]
            basis[r] = s - 1
        if N[M + 1][0] != 0:
            return INFEASIBLE, d
        for r in range(M):
            if basis[r] >= 0:
                continue
            row = N[r]
            s = next(j for j in range(1, nreal + 1) if row[j] != 0)
            d = _pivot(N, M + 1, r, s, d)
            basis[r] = s - 1
    while True:
        obj = N[M]
        s = 0
        for j in range(1, nreal + 1):
            if obj[j] < 0:
                s = j
                break
        if s == 0:
            return OPTIMAL, d
        r = _ratio_row(N, M, s, basis, nreal)
        if r < 0:
            return UNBOUNDED, d
        d = _pivot(N, M + 1, r, s, d)
        basis[r] = s - 1
