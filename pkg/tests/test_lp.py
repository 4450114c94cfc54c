import itertools

import numpy as np
import pytest

from sra.lp import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED,
                    LinearProgram, LpError, solve_lp)


def enumerate_vertices(lp):
    """Brute-force oracle: enumerate all basic solutions of [A I][x;s] = b.

    Returns (status, best_objective).  Only usable on tiny instances; the
    basis systems are solved in one batched call.
    """
    A = lp.inequality_matrix
    b = lp.inequality_rhs
    c = lp.objective
    r, n = A.shape
    M = np.hstack([A, np.eye(r)])
    cost_full = np.concatenate([c, np.zeros(r)])
    combos = np.array(list(itertools.combinations(range(n + r), r)))
    bases = M.T[combos].transpose(0, 2, 1)           # (ncomb, r, r)
    dets = np.linalg.det(bases)
    ok = np.abs(dets) > 1e-10
    rhs = np.broadcast_to(b, (int(ok.sum()), r))[..., None]
    xb = np.linalg.solve(bases[ok], rhs)[..., 0]
    feas = xb.min(axis=1) >= -1e-9
    if not feas.any():
        return INFEASIBLE, None
    vals = np.einsum("ij,ij->i", cost_full[combos[ok][feas]], xb[feas])
    return OPTIMAL, float(vals.min())


def random_lp(rng, r=6, n=20, feasible=True):
    A = rng.normal(size=(r, n))
    kind = rng.integers(0, 3)
    if kind == 0:
        c = rng.uniform(0.2, 2.0, n)        # strictly positive: dual route
    elif kind == 1:
        c = rng.uniform(0.0, 2.0, n)
        c[rng.integers(0, n)] = 0.0         # zero costs: two-phase route
    else:
        c = rng.uniform(0.2, 2.0, n)
    if feasible:
        x0 = np.zeros(n)
        x0[rng.choice(n, 3, replace=False)] = rng.uniform(0, 2, 3)
        b = A @ x0 + rng.uniform(0.0, 1.0, r)
        b -= rng.uniform(0.0, 0.5) * (rng.uniform(size=r) < 0.5)
    else:
        b = rng.normal(size=r)
    return LinearProgram(c, A, b)


class TestBasics:
    def test_simple_bound(self):
        # minimize x1 s.t. -x1 <= -2, x1 >= 0
        lp = LinearProgram([1.0], [[-1.0]], [-2.0])
        sol = solve_lp(lp)
        assert sol.status == OPTIMAL
        assert sol.x[0] == pytest.approx(2.0, abs=1e-9)
        assert sol.objective_value == pytest.approx(2.0, abs=1e-9)

    def test_infeasible(self):
        # x1 <= -1 contradicts x1 >= 0
        lp = LinearProgram([1.0], [[1.0]], [-1.0])
        sol = solve_lp(lp)
        assert sol.status == INFEASIBLE
        assert sol.x is None

    def test_unbounded(self):
        lp = LinearProgram([-1.0], [[-1.0]], [0.0])
        assert solve_lp(lp).status == UNBOUNDED

    def test_malformed(self):
        with pytest.raises(LpError):
            LinearProgram([1.0, 2.0], [[1.0]], [1.0])
        with pytest.raises(LpError):
            LinearProgram([np.nan], [[1.0]], [1.0])

    def test_feasibility_of_optimal(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            lp = random_lp(rng)
            sol = solve_lp(lp)
            if sol.status != OPTIMAL:
                continue
            tol = 1e-8 * (1 + np.abs(lp.inequality_rhs).max())
            assert (lp.inequality_matrix @ sol.x - lp.inequality_rhs).max() <= tol
            assert sol.x.min() >= 0.0


class TestOracle:
    def test_random_instances_match_vertex_enumeration(self):
        rng = np.random.default_rng(7)
        n_opt = 0
        for trial in range(40):
            lp = random_lp(rng, feasible=(trial % 2 == 0))
            sol = solve_lp(lp)
            status, best = enumerate_vertices(lp)
            assert sol.status == status, f"trial {trial}"
            if status == OPTIMAL:
                n_opt += 1
                assert sol.objective_value == pytest.approx(best, abs=1e-6)
        assert n_opt >= 15  # the sweep must actually exercise optimal solves

    def test_small_dense_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            lp = random_lp(rng, r=4, n=8)
            sol = solve_lp(lp)
            status, best = enumerate_vertices(lp)
            assert sol.status == status
            if status == OPTIMAL:
                assert sol.objective_value == pytest.approx(best, abs=1e-6)


class TestProperties:
    def test_positive_homogeneity(self):
        # scaling b scales the optimum and the objective linearly
        rng = np.random.default_rng(5)
        for _ in range(10):
            lp = random_lp(rng)
            sol = solve_lp(lp)
            if sol.status != OPTIMAL:
                continue
            for s in (0.5, 3.0):
                lp_s = LinearProgram(lp.objective, lp.inequality_matrix,
                                     s * lp.inequality_rhs)
                sol_s = solve_lp(lp_s)
                assert sol_s.status == OPTIMAL
                assert sol_s.objective_value == pytest.approx(
                    s * sol.objective_value, rel=1e-6, abs=1e-9)

    def test_first_order_optimality(self):
        # no feasible coordinate step may improve the objective beyond tol
        rng = np.random.default_rng(9)
        checked = 0
        for _ in range(10):
            lp = random_lp(rng)
            sol = solve_lp(lp)
            if sol.status != OPTIMAL:
                continue
            checked += 1
            A, b, c, x = (lp.inequality_matrix, lp.inequality_rhs,
                          lp.objective, sol.x)
            slack = b - A @ x
            for j in range(lp.n):
                for direction in (+1.0, -1.0):
                    if direction < 0 and x[j] < 1e-9:
                        continue
                    col = A[:, j] * direction
                    # largest feasible step along +-e_j
                    lim = slack[col > 1e-12] / col[col > 1e-12]
                    step = min(lim.min(initial=np.inf),
                               x[j] if direction < 0 else np.inf, 1.0)
                    if step <= 1e-9:
                        continue
                    assert direction * c[j] * step >= -1e-6
        assert checked >= 3

    def test_determinism(self):
        rng = np.random.default_rng(13)
        lp = random_lp(rng)
        a = solve_lp(lp)
        b = solve_lp(lp)
        assert a.status == b.status
        if a.status == OPTIMAL:
            assert np.array_equal(a.x, b.x)

    def test_iteration_limit_status(self):
        rng = np.random.default_rng(17)
        lp = random_lp(rng)
        sol = solve_lp(lp, max_iter=1)
        assert sol.status in (ITERATION_LIMIT, OPTIMAL)
