import dataclasses
from fractions import Fraction

import numpy as np
import pytest
from oracles import vertex_optimum

from cutlab import _kernel
from cutlab.instance import Cut, IlpInstance
from cutlab.lp import LpStatus, solve_lp, verify_lp_certificate

F = Fraction
BACKENDS = ["python"] + (["cython"] if _kernel.BACKEND == "cython" else [])


@pytest.mark.parametrize("backend", BACKENDS)
def test_worked_example(example, backend):
    sol = solve_lp(example, backend=backend)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x_star == (F(9, 4), F(15, 4))
    assert sol.objective == F(165, 4)
    assert sol.basis_inverse_rows == ((F(9, 4), F(-1, 4)), (F(-5, 4), F(1, 4)))
    assert verify_lp_certificate(example, [], sol)


@pytest.mark.parametrize("backend", BACKENDS)
def test_after_cuts(example, backend):
    one = solve_lp(example, [Cut((4, 7), 35)], backend=backend)
    assert one.x_star == (F(7, 3), F(11, 3)) and one.objective == 41
    two = solve_lp(example, [Cut((2, 3), 15)], backend=backend)
    assert two.x_star == (0, 5) and two.objective == 40 and two.is_integral()
    assert verify_lp_certificate(example, [Cut((2, 3), 15)], two)


def test_origin_optimal():
    inst = IlpInstance([[1, 2], [3, -1]], [0, 0], [-1, 0])
    sol = solve_lp(inst)
    assert sol.x_star == (0, 0) and sol.objective == 0
    assert verify_lp_certificate(inst, [], sol)


def test_infeasible_and_unbounded():
    assert solve_lp(IlpInstance([[1]], [-1], [1])).status is LpStatus.INFEASIBLE
    assert solve_lp(IlpInstance([[-1, 1]], [2], [1, 0])).status is LpStatus.UNBOUNDED
    assert not verify_lp_certificate(IlpInstance([[1]], [-1], [1]), [], solve_lp(IlpInstance([[1]], [-1], [1])))


def test_negative_rhs_phase_one():
    # x1 + x2 >= 2, x1 <= 3, x2 <= 1, max -x1 - 2 x2
    inst = IlpInstance([[-1, -1], [1, 0], [0, 1]], [-2, 3, 1], [-1, -2])
    sol = solve_lp(inst)
    assert sol.x_star == (2, 0) and sol.objective == -2
    assert verify_lp_certificate(inst, [], sol)


def test_rational_data():
    inst = IlpInstance([[F(1, 3), F(1, 2)], [F(5, 7), F(-1, 4)]], [F(7, 2), F(1, 3)], [F(2, 5), 1])
    sol = solve_lp(inst)
    assert sol.status is LpStatus.OPTIMAL
    assert verify_lp_certificate(inst, [], sol)
    assert sol.objective == vertex_optimum(inst)


def test_perturbed_objective_fails_certificate(example):
    sol = solve_lp(example)
    assert not verify_lp_certificate(example, [], sol.with_objective(sol.objective + F(1, 1000)))


def test_non_improving_basis_fails_certificate(example):
    # Basis {x1, s2}: B = [[1, 0], [5, 1]], B^-1 = [[1, 0], [-5, 1]], x = (6, 0), z = 30.
    # Duals y = (5, 0) leave x2 with reduced cost 8 - 5 = 3 > 0, so the basis is not optimal.
    sol = solve_lp(example)
    other = dataclasses.replace(sol, x_star=(F(6), F(0)), objective=F(30))
    swapped = other.with_basis((0, 3), ((1, 0), (-5, 1)))
    assert not verify_lp_certificate(example, [], swapped)
    # same basis data is self-consistent apart from optimality
    assert swapped.basis_inverse_rows == ((1, 0), (-5, 1))


def test_wrong_basis_inverse_fails(example):
    sol = solve_lp(example)
    bad = sol.with_basis(sol.basis, ((F(9, 4), F(-1, 4)), (F(-5, 4), F(1, 3))))
    assert not verify_lp_certificate(example, [], bad)


def test_deterministic(example):
    a, b = solve_lp(example), solve_lp(example)
    assert a == b and a.basis == b.basis


def _random_instance(rng, n, m):
    A = rng.integers(-10, 11, size=(m, n)).tolist()
    b = rng.integers(-10, 11, size=m).tolist()
    c = rng.integers(-10, 11, size=n).tolist()
    return IlpInstance(A, b, c)


def test_random_against_vertex_enumeration():
    rng = np.random.default_rng(97)
    seen = {s: 0 for s in LpStatus}
    for _ in range(500):
        n, m = (int(v) for v in rng.integers(1, 7, size=2))
        inst = _random_instance(rng, n, m)
        sol = solve_lp(inst)
        seen[sol.status] += 1
        best = vertex_optimum(inst)
        if sol.status is LpStatus.OPTIMAL:
            assert verify_lp_certificate(inst, [], sol)
            assert sol.objective == best
        elif sol.status is LpStatus.INFEASIBLE:
            assert best is None
        else:
            # feasible, and the optimum keeps growing with an enclosing box
            assert best is not None
            z = [solve_lp(inst.with_rows([Cut([1] * n, big)])).objective for big in (10**3, 10**6)]
            assert z[1] > z[0]
    assert all(seen.values()), seen


@pytest.mark.skipif(_kernel.BACKEND != "cython", reason="compiled kernel not built")
def test_backends_agree_on_random_instances():
    rng = np.random.default_rng(5)
    for _ in range(300):
        n, m = (int(v) for v in rng.integers(1, 9, size=2))
        inst = _random_instance(rng, n, m)
        cut = Cut(rng.integers(-4, 5, size=n).tolist(), int(rng.integers(0, 20)))
        a = solve_lp(inst, [cut], backend="python")
        b = solve_lp(inst, [cut], backend="cython")
        assert a == b
        if a.is_optimal:
            assert a.basis_inverse_rows == b.basis_inverse_rows


@pytest.mark.parametrize("backend", BACKENDS)
def test_large_entries_fall_back_to_big_integers(backend):
    big = 10**17
    inst = IlpInstance([[big + 1, big - 1], [big - 3, big + 7]], [big * 5 + 3, big * 6 - 1], [big, big + 11])
    sol = solve_lp(inst, backend=backend)
    assert verify_lp_certificate(inst, [], sol)
    assert sol == solve_lp(inst, backend="python")


def test_cut_length_checked(example):
    with pytest.raises(ValueError):
        solve_lp(example, [Cut((1, 1, 1), 3)])
