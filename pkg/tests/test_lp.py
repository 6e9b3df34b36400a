import itertools

import numpy as np
import pytest
from conftest import grid_min_residual
from scipy.optimize import linprog

from reszono.errors import InvalidInputError
from reszono.lp import LpProblem, feasible_box, lp_feasible, lp_optimize

BAND = 0.02


def test_feasible_sum_with_witness():
    r = lp_feasible(LpProblem([[1.0, 1.0]], [0.0]))
    assert r.feasible
    assert abs(r.x.sum()) <= 1e-7
    assert np.all(np.abs(r.x) <= 1 + 1e-9)


def test_infeasible_sum_exceeds_box():
    assert not lp_feasible(LpProblem([[1.0, 1.0]], [3.0])).feasible


def test_dimension_mismatch_rejected():
    with pytest.raises(InvalidInputError):
        LpProblem([[1.0, 1.0]], [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        LpProblem([[1.0, 1.0]], [1.0], objective=[1.0])


def test_no_constraints_is_feasible():
    assert lp_feasible(LpProblem(np.zeros((0, 3)), [])).feasible


def test_optimize_reports_infeasible():
    assert lp_optimize(LpProblem([[1.0]], [2.0], objective=[1.0])).status == "infeasible"


def test_optimize_custom_bounds():
    r = lp_optimize(LpProblem([[1.0, 1.0]], [1.0], objective=[-1.0, 0.0], lower=[0, 0], upper=[3, 3]))
    assert r.value == pytest.approx(-1.0)


def _instances(rng, count):
    for _ in range(count):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 3))
        a = rng.uniform(-1, 1, (m, n))
        beta0 = rng.uniform(-1.6, 1.6, n)
        yield a, a @ beta0, beta0


def test_feasibility_matches_grid_oracle():
    # |a_ij| <= 1 and n <= 4: a feasible instance has a grid point within 0.02
    rng = np.random.default_rng(2024)
    decided = 0
    for a, b, beta0 in _instances(rng, 200):
        got = feasible_box(a, b)
        grid = grid_min_residual(a, b, cutoff=BAND)
        if np.all(np.abs(beta0) <= 1):
            assert got and grid <= BAND
            decided += 1
        elif grid > BAND:
            assert not got
            decided += 1
        if got:
            assert grid <= BAND
    assert decided >= 100


def test_feasibility_matches_highs():
    rng = np.random.default_rng(7)
    for a, b, _ in _instances(rng, 300):
        ref = linprog(np.zeros(a.shape[1]), A_eq=a, b_eq=b, bounds=(-1, 1), method="highs")
        assert feasible_box(a, b) == (ref.status == 0)


def test_optimum_matches_vertex_enumeration():
    # single constraint: the optimum sits on an edge of the box, so enumerate
    # all vertices of {x in box : a x = b} as edge/hyperplane crossings
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 5))
        a = rng.uniform(-1, 1, n)
        b = float(a @ rng.uniform(-1, 1, n))
        c = rng.normal(size=n)
        best = np.inf
        for j in range(n):
            for rest in itertools.product((-1.0, 1.0), repeat=n - 1):
                x = np.insert(np.array(rest), j, 0.0)
                if abs(a[j]) < 1e-12:
                    continue
                x[j] = (b - a @ x) / a[j]
                if abs(x[j]) <= 1 + 1e-12:
                    best = min(best, c @ x)
        r = lp_optimize(LpProblem(a.reshape(1, -1), [b], objective=c))
        assert r.feasible
        assert r.value == pytest.approx(best, abs=1e-7)
