import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from hubplan.engine import (BINARY, CONTINUOUS, INTEGER, LinExpr, MilpOptions, Model, enumerate_binary,
                            farkas_gap, format_lp, solve_lp, solve_milp)
from hubplan.engine import _kernels as K

SCIPY_STATUS = {0: "optimal", 2: "infeasible", 3: "unbounded"}


def _random_lp(rng):
    m, n = int(rng.integers(1, 10)), int(rng.integers(1, 10))
    A = rng.integers(-5, 6, (m, n)).astype(float)
    b = rng.integers(-10, 11, m).astype(float)
    c = rng.integers(-5, 6, n).astype(float)
    lb = np.where(rng.random(n) < 0.2, -np.inf, rng.integers(-3, 1, n))
    ub = np.where(rng.random(n) < 0.3, np.inf, rng.integers(1, 6, n))
    senses = rng.choice(["<=", ">=", "=="], m, p=[0.5, 0.3, 0.2])
    M = Model()
    for j in range(n):
        M.add_var(lb=lb[j], ub=ub[j])
    for i in range(m):
        M.add_constr(LinExpr({j: A[i, j] for j in range(n) if A[i, j]}), senses[i], b[i])
    M.set_objective(LinExpr({j: c[j] for j in range(n)}))
    return M, A, b, c, lb, ub, senses


def _scipy(A, b, c, lb, ub, senses):
    Aub, bub, Aeq, beq = [], [], [], []
    for i, s in enumerate(senses):
        if s == "<=":
            Aub.append(A[i]), bub.append(b[i])
        elif s == ">=":
            Aub.append(-A[i]), bub.append(-b[i])
        else:
            Aeq.append(A[i]), beq.append(b[i])
    return linprog(c, A_ub=Aub or None, b_ub=bub or None, A_eq=Aeq or None, b_eq=beq or None,
                   bounds=list(zip(lb, ub)), method="highs")


def test_lp_matches_scipy_on_random_models():
    rng = np.random.default_rng(0)
    for trial in range(150):
        M, A, b, c, lb, ub, senses = _random_lp(rng)
        ours = solve_lp(M)
        ref = _scipy(A, b, c, lb, ub, senses)
        assert ours.status == SCIPY_STATUS[ref.status], trial
        if ours.optimal:
            assert ours.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
            assert M.max_violation(ours.x) < 1e-7
            # reduced costs are c - A^T y
            np.testing.assert_allclose(ours.reduced_costs, c - A.T @ ours.duals, atol=1e-7)
        if ours.status == "infeasible" and ours.farkas is not None:
            assert farkas_gap(M, ours.farkas) > 0


def test_duals_are_rhs_sensitivities():
    # min x + 2y  s.t. x + y >= 3, x <= 2
    M = Model()
    x, y = M.add_var("x"), M.add_var("y")
    M.add_constr(LinExpr({x: 1, y: 1}), ">=", 3)
    M.add_constr(LinExpr({x: 1}), "<=", 2)
    M.set_objective(LinExpr({x: 1, y: 2}))
    sol = solve_lp(M)
    assert sol.objective == pytest.approx(4.0)
    np.testing.assert_allclose(sol.duals, [2.0, -1.0], atol=1e-12)


def test_warm_start_after_bound_change_agrees_with_cold():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(80):
        M, *_ = _random_lp(rng)
        s = solve_lp(M)
        if not s.optimal:
            continue
        lb2 = np.array(M.lb)
        j = int(rng.integers(M.num_vars))
        if np.isfinite(M.ub[j]):
            lb2[j] = min(M.ub[j], s.x[j] + 0.5)
        warm, cold = solve_lp(M, warm=s.basis, lb=lb2), solve_lp(M, lb=lb2)
        assert warm.status == cold.status
        if cold.optimal:
            assert warm.objective == pytest.approx(cold.objective, abs=1e-7)
        checked += 1
    assert checked > 20


def test_solve_lp_rejects_free_integers():
    M = Model()
    M.add_var(kind=INTEGER, ub=3)
    with pytest.raises(ValueError):
        solve_lp(M)
    assert solve_lp(M, relax=True).optimal


def test_milp_matches_scipy_on_random_models():
    rng = np.random.default_rng(1)
    for trial in range(80):
        n, m = int(rng.integers(2, 9)), int(rng.integers(1, 7))
        kinds = rng.choice(["B", "I", "C"], n)
        M = Model()
        lbs, ubs = [], []
        for j in range(n):
            lo, hi = (0, 1) if kinds[j] == "B" else (int(rng.integers(-2, 1)), int(rng.integers(1, 4)))
            M.add_var(lb=lo, ub=hi, kind={"B": BINARY, "I": INTEGER, "C": CONTINUOUS}[kinds[j]])
            lbs.append(lo), ubs.append(hi)
        A = rng.normal(size=(m, n)).round(2)
        b = rng.normal(size=m).round(2) + 1
        for i in range(m):
            M.add_constr(LinExpr({j: A[i, j] for j in range(n)}), "<=", b[i])
        c = rng.normal(size=n).round(2)
        M.set_objective(LinExpr({j: c[j] for j in range(n)}))
        ours = solve_milp(M, MilpOptions(gap_tol=1e-9))
        ref = milp(c, constraints=LinearConstraint(A, -np.inf, b),
                   integrality=(kinds != "C").astype(int), bounds=Bounds(lbs, ubs))
        if ref.status == 2:
            assert ours.status == "infeasible", trial
            continue
        assert ours.status == "optimal", trial
        assert ours.objective == pytest.approx(ref.fun, abs=1e-6)
        if n <= 6:
            best, _ = enumerate_binary(M)
            assert ours.objective == pytest.approx(best, abs=1e-6)


def test_milp_warm_start_and_hook_are_used():
    M = Model()
    xs = [M.add_var(kind=BINARY) for _ in range(4)]
    M.add_constr(LinExpr({x: 1.0 for x in xs}), ">=", 2)
    M.set_objective(LinExpr({x: float(k + 1) for k, x in enumerate(xs)}))
    sol = solve_milp(M, MilpOptions(warm_starts=[np.array([0, 0, 1, 1.0])]))
    assert sol.objective == pytest.approx(3.0)
    assert sol.warm_start_log

    def hook(x, obj):
        return {xs[0]: 1.0, xs[1]: 1.0, xs[2]: 0.0, xs[3]: 0.0}

    sol = solve_milp(M, MilpOptions(warm_starts=[np.array([0, 0, 1, 1.0])]), heuristic_hook=hook)
    assert sol.objective == pytest.approx(3.0)
    assert sol.heuristic_calls >= 1


def test_model_rejects_bad_input():
    M = Model()
    with pytest.raises(ValueError):
        M.add_var(lb=2, ub=1)
    with pytest.raises(ValueError):
        M.add_constr(LinExpr({5: 1.0}), "<=", 1)
    M.add_var()
    with pytest.raises(ValueError):
        M.add_constr(LinExpr({0: np.nan}), "<=", 1)
    with pytest.raises(ValueError):
        M.add_constr(LinExpr({0: 1.0}), "<", 1)


def test_lp_text_layout():
    M = Model("tiny model")
    x = M.add_var("x", ub=4)
    y = M.add_var("y", lb=-np.inf, ub=np.inf)
    z = M.add_var("z", kind=BINARY)
    k = M.add_var("k", ub=3, kind=INTEGER)
    M.add_constr(LinExpr({x: 1, y: -2.5}), ">=", 1, name="c one")
    M.add_constr(LinExpr({z: 1, k: 1}), "==", 2, name="c2")
    M.set_objective(LinExpr({x: 1, k: 3}, 7.0))
    text = format_lp(M)
    lines = text.splitlines()
    assert lines[0] == "\\ tiny_model: 4 variables, 2 rows"
    assert lines[1:3] == ["Minimize", " obj: +1.0 x +3.0 k +7.0"]
    assert " c_one: +1.0 x -2.5 y >= 1.0" in lines
    assert " c2: +1.0 z +1.0 k = 2.0" in lines
    assert " y free" in lines
    assert " 0.0 <= x <= 4.0" in lines
    assert lines[lines.index("Generals") + 1] == " k"
    assert lines[lines.index("Binaries") + 1] == " z"
    assert lines[-1] == "End"
    assert format_lp(M) == text


def test_numba_and_numpy_kernels_agree():
    rng = np.random.default_rng(5)
    for _ in range(50):
        m, n = int(rng.integers(2, 12)), int(rng.integers(2, 20))
        T = rng.normal(size=(m, n))
        d = rng.normal(size=n)
        r, q = int(rng.integers(m)), int(rng.integers(n))
        T[r, q] = 2.0
        T1, d1, T2, d2 = T.copy(), d.copy(), T.copy(), d.copy()
        K.pivot_np(T1, d1, r, q)
        K.pivot_nb(T2, d2, r, q)
        np.testing.assert_allclose(T1, T2, atol=1e-12)
        np.testing.assert_allclose(d1, d2, atol=1e-12)

        status = rng.integers(0, 4, n).astype(np.int64)
        lo, hi = np.zeros(n), np.where(rng.random(n) < 0.2, 0.0, 5.0)
        allowed = rng.random(n) < 0.9
        for bland in (False, True):
            assert (tuple(K.choose_entering_np(d, status, lo, hi, allowed, 1e-9, bland))
                    == tuple(K.choose_entering_nb(d, status, lo, hi, allowed, 1e-9, bland)))
            alpha = rng.normal(size=n)
            assert (K.dual_ratio_np(alpha, d, status, lo, hi, allowed, 1.0, 1e-9)
                    == K.dual_ratio_nb(alpha, d, status, lo, hi, allowed, 1.0, 1e-9))
            xB = rng.uniform(-1, 6, m)
            loB, hiB = np.zeros(m), np.full(m, 5.0)
            basis = rng.permutation(n + m)[:m].astype(np.int64)
            assert (K.choose_leaving_np(xB, loB, hiB, basis, 1e-9, bland)
                    == K.choose_leaving_nb(xB, loB, hiB, basis, 1e-9, bland))
            xB = rng.uniform(0, 5, m)
            dxB = rng.normal(size=m)
            i1, t1 = K.primal_ratio_np(xB, loB, hiB, dxB, basis, 1e-9, 1e-9, bland)
            i2, t2 = K.primal_ratio_nb(xB, loB, hiB, dxB, basis, 1e-9, 1e-9, bland)
            assert i1 == i2 and t1 == pytest.approx(t2)
