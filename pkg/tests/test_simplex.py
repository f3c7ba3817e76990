import numpy as np
import pytest

from hbcycles.simplex import solve_canonical


def test_basic_optimum():
    # min -x - y  s.t.  x + y + s1 = 4, x + 3y + s2 = 6
    cost = [-1.0, -1.0, 0.0, 0.0]
    a = [[1.0, 1.0, 1.0, 0.0], [1.0, 3.0, 0.0, 1.0]]
    res = solve_canonical(cost, a, [4.0, 6.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-4.0, abs=1e-12)
    assert res.x[0] + res.x[1] == pytest.approx(4.0, abs=1e-12)


def test_matches_known_vertex():
    # min 2x + 3y s.t. x + y = 10, x - y + s = 4
    cost = [2.0, 3.0, 0.0]
    a = [[1.0, 1.0, 0.0], [1.0, -1.0, 1.0]]
    res = solve_canonical(cost, a, [10.0, 4.0])
    assert res.status == "optimal"
    # Cheapest split of x + y = 10 puts as much as possible on x.
    assert res.x[0] == pytest.approx(7.0, abs=1e-12)
    assert res.x[1] == pytest.approx(3.0, abs=1e-12)


def test_infeasible_detected():
    # x + y = -1 is unreachable for x, y >= 0 (b is sign-flipped internally,
    # so encode a genuinely empty system: x + y = 1 and x + y = 3).
    cost = [0.0, 0.0]
    a = [[1.0, 1.0], [1.0, 1.0]]
    res = solve_canonical(cost, a, [1.0, 3.0])
    assert res.status == "infeasible"


def test_unbounded_detected():
    # min -x s.t. x - y = 1: push x to infinity along y.
    res = solve_canonical([-1.0, 0.0], [[1.0, -1.0]], [1.0])
    assert res.status == "unbounded"


def test_negative_rhs_rows_are_flipped():
    res = solve_canonical([1.0, 0.0], [[-1.0, -1.0]], [-5.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(0.0, abs=1e-12)
    assert res.x[1] == pytest.approx(5.0, abs=1e-12)


def test_redundant_rows_are_dropped():
    # Second row is a copy of the first: one artificial cannot leave the
    # basis and its row must be discarded.
    cost = [1.0, 1.0]
    a = [[1.0, 1.0], [1.0, 1.0]]
    res = solve_canonical(cost, a, [2.0, 2.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(2.0, abs=1e-12)


def test_beale_degenerate_cycle_terminates():
    # Beale's classic cycling example; Bland's rule must terminate on it.
    cost = [-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0]
    a = [
        [0.25, -60.0, -1.0 / 25.0, 9.0, 1.0, 0.0, 0.0],
        [0.5, -90.0, -1.0 / 50.0, 3.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    ]
    res = solve_canonical(cost, a, [0.0, 0.0, 1.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-0.05, abs=1e-10)


def test_agrees_with_bounded_feasibility_shape():
    # The shape used by the cycle LP: min t s.t. P nu <= t, sum nu = 1.
    rng = np.random.default_rng(3)
    for _ in range(25):
        p = rng.normal(size=(6, 3))
        m = 3
        n_var = m + 2 + 6
        a = np.zeros((7, n_var))
        a[:6, :m] = p
        a[:6, m] = -1.0
        a[:6, m + 1] = 1.0
        a[:6, m + 2:] = np.eye(6)
        a[6, :m] = 1.0
        b = np.zeros(7)
        b[6] = 1.0
        cost = np.zeros(n_var)
        cost[m] = 1.0
        cost[m + 1] = -1.0
        res = solve_canonical(cost, a, b)
        assert res.status == "optimal"
        # Oracle: t* = min over the simplex of max_i (P nu)_i; check against
        # a dense simplex grid.
        w = np.linspace(0, 1, 41)
        best = np.inf
        for u in w:
            for v in w:
                if u + v <= 1.0 + 1e-12:
                    nu = np.array([u, v, 1.0 - u - v])
                    best = min(best, float((p @ nu).max()))
        assert res.objective <= best + 1e-9
        nu_opt = res.x[:m]
        assert nu_opt.sum() == pytest.approx(1.0, abs=1e-9)
        assert float((p @ nu_opt).max()) == pytest.approx(res.objective, abs=1e-8)
