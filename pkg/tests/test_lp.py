"""LP kernel and piecewise linearization.

The solver is checked against an exhaustive basic-solution oracle, its own
optimality certificate (reduced-cost signs at the returned point), and its
pure/compiled twin.
"""

import numpy as np
import pytest

from gridrisk import lp
from gridrisk.model import CostCurve
from oracles import lp_vertex_oracle


def make_lp(c, a, b, lo, hi):
    return lp.LinearProgram(c=np.asarray(c, float),
                            a_eq=np.asarray(a, float).reshape(len(b), len(c)),
                            b_eq=np.asarray(b, float),
                            lower=np.asarray(lo, float),
                            upper=np.asarray(hi, float))


def random_instance(rng):
    n = int(rng.integers(1, 6))
    m = int(rng.integers(0, min(n, 4)))
    a = np.round(rng.normal(0, 1, (m, n)), 3)
    lo = np.round(rng.uniform(-5, 0, n), 3)
    hi = lo + np.round(rng.uniform(0.5, 6, n), 3)
    c = np.round(rng.normal(0, 2, n), 3)
    if rng.random() < 0.7:
        b = a @ rng.uniform(lo, hi)  # feasible by construction
    else:
        b = rng.normal(0, 10, m)
    return c, a, b, lo, hi


class TestSolveLp:
    def test_bound_constrained_minimum(self):
        sol = lp.solve_lp(make_lp([1.0], np.zeros((0, 1)), [], [1.0], [5.0]))
        assert sol.status == "optimal"
        assert sol.x[0] == 1.0 and sol.objective_value == 1.0

    def test_degenerate_optimum_objective_only(self):
        sol = lp.solve_lp(make_lp([-1.0, -1.0], [[1.0, 1.0]], [1.0],
                                  [0.0, 0.0], [1.0, 1.0]))
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(-1.0, abs=1e-9)

    def test_matches_vertex_oracle_on_random_lps(self):
        rng = np.random.default_rng(1234)
        optimal_seen = infeasible_seen = 0
        for _ in range(150):
            c, a, b, lo, hi = random_instance(rng)
            want_status, want_value = lp_vertex_oracle(c, a, b, lo, hi)
            sol = lp.solve_lp(make_lp(c, a, b, lo, hi))
            assert sol.status == want_status
            if want_status == "optimal":
                optimal_seen += 1
                assert sol.objective_value == pytest.approx(want_value,
                                                            abs=1e-6)
            else:
                infeasible_seen += 1
        assert optimal_seen >= 100 and infeasible_seen >= 5

    def test_unbounded_detected(self):
        sol = lp.solve_lp(make_lp([-1.0], np.zeros((0, 1)), [], [0.0],
                                  [np.inf]))
        assert sol.status == "unbounded"
        free = make_lp([1.0, 0.0], [[0.0, 1.0]], [1.0],
                       [-np.inf, -np.inf], [np.inf, np.inf])
        assert lp.solve_lp(free).status == "unbounded"

    def test_infeasible_reports_magnitude(self):
        sol = lp.solve_lp(make_lp([1.0], [[1.0]], [5.0], [0.0], [1.0]))
        assert sol.status == "infeasible"
        assert sol.max_infeasibility == pytest.approx(4.0, abs=1e-6)

    def test_feasibility_tolerance_on_optimal(self):
        rng = np.random.default_rng(99)
        for _ in range(60):
            c, a, b, lo, hi = random_instance(rng)
            sol = lp.solve_lp(make_lp(c, a, b, lo, hi))
            if sol.status == "optimal":
                assert sol.max_infeasibility <= 1e-7

    def test_optimality_certificate(self):
        # no bound-respecting single-variable move can improve the optimum
        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(80):
            c, a, b, lo, hi = random_instance(rng)
            if a.shape[0] == 0:
                continue
            sol = lp.solve_lp(make_lp(c, a, b, lo, hi))
            if sol.status != "optimal":
                continue
            checked += 1
            n = len(c)
            basic = [v for v in sol.basis if v < n]
            bmat = a[:, basic]
            if abs(np.linalg.det(bmat)) < 1e-9:
                continue
            y = np.linalg.solve(bmat.T, c[basic])
            d = c - y @ a
            tol = 1e-7 * max(1.0, np.abs(c).max())
            for j in range(n):
                if sol.vstatus[j] == lp.AT_LOWER:
                    assert d[j] >= -tol
                elif sol.vstatus[j] == lp.AT_UPPER:
                    assert d[j] <= tol
        assert checked >= 30

    def test_objective_homogeneity(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            c, a, b, lo, hi = random_instance(rng)
            base = lp.solve_lp(make_lp(c, a, b, lo, hi))
            scaled = lp.solve_lp(make_lp(2.0 * c, a, b, lo, hi))
            assert scaled.status == base.status
            if base.status == "optimal":
                # powers of two scale exactly in binary floating point
                assert scaled.objective_value == 2.0 * base.objective_value
                assert np.array_equal(scaled.x, base.x)

    def test_deterministic_repeat(self):
        rng = np.random.default_rng(3)
        c, a, b, lo, hi = random_instance(rng)
        s1 = lp.solve_lp(make_lp(c, a, b, lo, hi))
        s2 = lp.solve_lp(make_lp(c, a, b, lo, hi))
        assert s1.objective_value == s2.objective_value
        assert np.array_equal(s1.x, s2.x)
        assert np.array_equal(s1.basis, s2.basis)

    def test_backends_agree(self):
        backends = lp.available_backends()
        rng = np.random.default_rng(21)
        for _ in range(120):
            c, a, b, lo, hi = random_instance(rng)
            outs = {name: k(c, a, b, lo, hi) for name, k in backends.items()}
            statuses = {o[0] for o in outs.values()}
            assert len(statuses) == 1
            if statuses == {lp.OPTIMAL}:
                objs = [o[2] for o in outs.values()]
                assert max(objs) - min(objs) <= 1e-9 * (1 + abs(objs[0]))

    def test_dimension_mismatch_raises(self):
        with pytest.raises(lp.LpError):
            lp.LinearProgram(c=np.ones(3), a_eq=np.ones((2, 2)),
                             b_eq=np.ones(2), lower=np.zeros(3),
                             upper=np.ones(3))
        with pytest.raises(lp.LpError):
            lp.LinearProgram(c=np.ones(2), a_eq=np.ones((1, 2)),
                             b_eq=np.ones(1), lower=np.ones(2),
                             upper=np.zeros(2))


class TestPiecewise:
    def test_square_curve_two_segments(self):
        seg = lp.piecewise_linearize(CostCurve(1.0, 0.0, 0.0), 0.0, 10.0, 2)
        assert np.allclose(seg.breakpoints, [0.0, 5.0, 10.0])
        assert np.allclose(seg.slopes, [5.0, 15.0])

    def test_linear_curve_exact(self):
        seg = lp.piecewise_linearize(CostCurve(0.0, 7.0, 3.0), 2.0, 11.0, 4)
        assert np.all(seg.slopes == 7.0)

    def test_secant_error_bound(self):
        # max chord error of a quadratic is a * width^2 / 4
        curve = CostCurve(0.5, 2.0, 0.0)
        k = 8
        seg = lp.piecewise_linearize(curve, 0.0, 8.0, k)
        width = 8.0 / k
        bound = curve.a * width * width / 4.0
        for p in np.linspace(0.0, 8.0, 641):
            approx = curve.cost(0.0) + seg.value(p)
            err = approx - curve.cost(p)
            assert -1e-12 <= err <= bound + 1e-12

    def test_slopes_nondecreasing_random(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            curve = CostCurve(float(rng.uniform(0, 3)),
                              float(rng.uniform(-5, 5)),
                              float(rng.uniform(0, 10)))
            k = int(rng.integers(1, 12))
            seg = lp.piecewise_linearize(curve, 0.0, float(rng.uniform(1, 300)), k)
            assert np.all(np.diff(seg.slopes) >= 0)

    def test_segments_fill_in_slope_order(self):
        # minimizing slope-priced segments that sum to P reproduces the
        # piecewise value of the quadratic
        rng = np.random.default_rng(17)
        for _ in range(20):
            curve = CostCurve(float(rng.uniform(0.01, 1.0)),
                              float(rng.uniform(0, 10)), 0.0)
            p_max = float(rng.uniform(5, 50))
            seg = lp.piecewise_linearize(curve, 0.0, p_max, 6)
            target = float(rng.uniform(0, p_max))
            widths = seg.widths
            c = np.concatenate([seg.slopes, [0.0]])
            a = np.ones((1, 7))
            a[0, 6] = 0.0
            sol = lp.solve_lp(lp.LinearProgram(
                c=c, a_eq=a, b_eq=np.array([target]),
                lower=np.zeros(7),
                upper=np.concatenate([widths, [0.0]])))
            assert sol.status == "optimal"
            assert sol.objective_value == pytest.approx(seg.value(target),
                                                        abs=1e-8)

    def test_errors(self):
        with pytest.raises(lp.LpError):
            lp.piecewise_linearize(CostCurve(1.0, 0.0, 0.0), 5.0, 5.0, 3)
        with pytest.raises(lp.LpError):
            lp.piecewise_linearize(CostCurve(1.0, 0.0, 0.0), 0.0, 5.0, 0)
