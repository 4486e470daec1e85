# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""int64 fraction-free simplex kernel.

Same pivot path as ``_simplex_py``; returns OVERFLOW as soon as an entry would
leave [-2**62, 2**62] so the caller can redo the solve with Python integers.
"""

cdef extern from *:
    ctypedef long long i128 "__int128"
    bint mul_ovf "__builtin_mul_overflow"(long long, long long, long long*) nogil
    bint sub_ovf "__builtin_sub_overflow"(long long, long long, long long*) nogil

cdef long long LIM = 4611686018427387904  # 2**62

cdef enum:
    OPTIMAL = 0
    INFEASIBLE = 1
    UNBOUNDED = 2
    OVERFLOW = 3


cdef inline bint _combine(long long v, long long p, long long f, long long w,
                          long long d, long long* out) noexcept nogil:
    cdef long long t1, t2, t
    cdef i128 big
    if not mul_ovf(v, p, &t1) and not mul_ovf(f, w, &t2) and not sub_ovf(t1, t2, &t):
        if d != 1:
            t = t // d
        if t > LIM or t < -LIM:
            return False
        out[0] = t
        return True
    big = (<i128>v) * p - (<i128>f) * w
    big = big / d
    if big > LIM or big < -LIM:
        return False
    out[0] = <long long>big
    return True


cdef int _pivot(long long[:, ::1] N, Py_ssize_t nrows, Py_ssize_t ncols,
                Py_ssize_t r, Py_ssize_t s, long long* d) noexcept nogil:
    cdef long long p = N[r, s]
    cdef long long dd = d[0]
    cdef long long f, out
    cdef Py_ssize_t i, j
    for i in range(nrows):
        if i == r:
            continue
        f = N[i, s]
        if f == 0:
            if p == dd:
                continue
            for j in range(ncols):
                if not _combine(N[i, j], p, 0, 0, dd, &out):
                    return OVERFLOW
                N[i, j] = out
        else:
            for j in range(ncols):
                if not _combine(N[i, j], p, f, N[r, j], dd, &out):
                    return OVERFLOW
                N[i, j] = out
    if p < 0:
        for i in range(nrows):
            for j in range(ncols):
                N[i, j] = -N[i, j]
        p = -p
    d[0] = p
    return OPTIMAL


cdef Py_ssize_t _ratio_row(long long[:, ::1] N, Py_ssize_t M, Py_ssize_t s,
                           long long[::1] basis, Py_ssize_t nreal) noexcept nogil:
    cdef Py_ssize_t i, best = -1
    cdef long long a, bi, bb
    cdef i128 lhs, rhs
    for i in range(M):
        a = N[i, s]
        if a <= 0:
            continue
        if best < 0:
            best = i
            continue
        lhs = (<i128>N[i, 0]) * N[best, s]
        rhs = (<i128>N[best, 0]) * a
        if lhs < rhs:
            best = i
        elif lhs == rhs:
            bi = basis[i] if basis[i] >= 0 else nreal + i
            bb = basis[best] if basis[best] >= 0 else nreal + best
            if bi < bb:
                best = i
    return best


cdef Py_ssize_t _entering(long long[:, ::1] N, Py_ssize_t row, Py_ssize_t nreal) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(1, nreal + 1):
        if N[row, j] < 0:
            return j
    return 0


cdef int _solve(long long[:, ::1] N, long long[::1] basis, Py_ssize_t nreal,
                long long* d) noexcept nogil:
    cdef Py_ssize_t M = N.shape[0] - 2
    cdef Py_ssize_t ncols = N.shape[1]
    cdef Py_ssize_t r, s, i, j
    cdef bint phase1 = False
    for i in range(M):
        if basis[i] < 0:
            phase1 = True
    if phase1:
        while True:
            s = _entering(N, M + 1, nreal)
            if s == 0:
                break
            r = _ratio_row(N, M, s, basis, nreal)
            if _pivot(N, M + 2, ncols, r, s, d) == OVERFLOW:
                return OVERFLOW
            basis[r] = s - 1
        if N[M + 1, 0] != 0:
            return INFEASIBLE
        for r in range(M):
            if basis[r] >= 0:
                continue
            s = 0
            for j in range(1, nreal + 1):
                if N[r, j] != 0:
                    s = j
                    break
            if _pivot(N, M + 1, ncols, r, s, d) == OVERFLOW:
                return OVERFLOW
            basis[r] = s - 1
    while True:
        s = _entering(N, M, nreal)
        if s == 0:
            return OPTIMAL
        r = _ratio_row(N, M, s, basis, nreal)
        if r < 0:
            return UNBOUNDED
        if _pivot(N, M + 1, ncols, r, s, d) == OVERFLOW:
            return OVERFLOW
        basis[r] = s - 1


def run_simplex(long long[:, ::1] N, long long[::1] basis, Py_ssize_t nreal):
    """Two-phase primal simplex on ``N`` in place; returns ``(status, d)``."""
    cdef long long d = 1
    cdef int status
    with nogil:
        status = _solve(N, basis, nreal, &d)
    return status, d
