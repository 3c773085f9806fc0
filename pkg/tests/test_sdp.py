"""Tests for the SDP data model, builder, interior-point solver and SDPA I/O."""

import numpy as np
import pytest

from fsipp.sdp import (LinExpr, NonnegBlock, PsdBlock, SdpBuilder, SdpProblem,
                       check_solution, read_sdpa, solve, tri_index, write_sdpa)
from fsipp.sdp.model import SdpSolution, tri_indices

TOL = 1e-8


def diag_trace_problem():
    b = SdpBuilder()
    X = b.psd_block(2)
    b.set_objective(X.entry(0, 0) + X.entry(1, 1, 2.0))
    b.add_equality(X.entry(0, 0) + X.entry(1, 1), 1.0)
    return b.build()


# ---------------------------------------------------------------- layout

def test_tri_index_row_major_lower_triangle():
    assert [tri_index(i, j) for i, j in [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2)]] \
        == [0, 1, 2, 3, 4, 5]
    assert tri_index(0, 1) == tri_index(1, 0)


def test_scalarize_round_trip():
    prob = diag_trace_problem()
    M = np.array([[2.0, -1.0], [-1.0, 3.0]])
    x = prob.scalarize([M])
    np.testing.assert_allclose(x, [2.0, -1.0, 3.0])
    np.testing.assert_allclose(prob.unscalarize(x)[0], M)


def test_functional_as_matrices_counts_off_diagonals_once():
    prob = diag_trace_problem()
    coeffs = np.array([1.0, 4.0, 2.0])  # 1*X00 + 4*X10 + 2*X11
    (F,) = prob.functional_as_matrices(coeffs)
    np.testing.assert_allclose(F, [[1.0, 2.0], [2.0, 2.0]])
    M = np.array([[0.5, 0.25], [0.25, 0.125]])
    assert np.sum(F * M) == pytest.approx(coeffs @ prob.scalarize([M]))


def test_builder_moves_constant_to_rhs():
    b = SdpBuilder()
    v = b.nonneg_block(1)
    expr = v.entry(0) + LinExpr.constant(2.0)
    b.add_equality(expr, 5.0)  # x + 2 == 5  ->  x == 3
    prob = b.build()
    assert prob.b[0] == 3.0


# ---------------------------------------------------------------- solve

def test_solve_diag_trace_example():
    prob = diag_trace_problem()
    sol = solve(prob, tol=TOL)
    assert sol.status == "Optimal"
    assert sol.primal_value == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(sol.primal_point[0], np.diag([1.0, 0.0]), atol=1e-6)
    assert max(sol.residuals.values()) <= TOL


def test_solve_nonneg_equality():
    b = SdpBuilder()
    v = b.nonneg_block(1)
    b.set_objective(v.entry(0))
    b.add_equality(v.entry(0), 3.0)
    sol = solve(b.build())
    assert sol.status == "Optimal"
    assert sol.primal_value == pytest.approx(3.0, abs=1e-6)


def test_solve_detects_primal_infeasible():
    b = SdpBuilder()
    X = b.psd_block(2)
    b.set_objective(X.entry(0, 0))
    b.add_equality(X.entry(0, 0), -1.0)
    sol = solve(b.build())
    assert sol.status == "PrimalInfeasible"


def test_solve_detects_dual_infeasible():
    # min -X11 s.t. X00 = 1: X11 can grow without bound
    b = SdpBuilder()
    X = b.psd_block(2)
    b.set_objective(X.entry(1, 1, -1.0))
    b.add_equality(X.entry(0, 0), 1.0)
    sol = solve(b.build())
    assert sol.status == "DualInfeasible"


def test_solve_with_free_block():
    b = SdpBuilder()
    t = b.free_block(1)
    b.set_objective(t.entry(0))
    b.add_equality(t.entry(0), -5.0)
    sol = solve(b.build())
    assert sol.status == "Optimal"
    assert sol.primal_value == pytest.approx(-5.0, abs=1e-6)
    assert sol.primal_point[0][0] == pytest.approx(-5.0, abs=1e-6)


def test_solve_mixed_blocks_and_offdiagonal_coupling():
    # min X00 + X11 + s  s.t.  X01 = 1, s - X00 = 0; optimum at X00=X11=1
    b = SdpBuilder()
    X = b.psd_block(2)
    s = b.nonneg_block(1)
    b.set_objective(X.entry(0, 0) + X.entry(1, 1) + s.entry(0))
    b.add_equality(X.entry(0, 1), 1.0)
    b.add_equality(s.entry(0) - X.entry(0, 0), 0.0)
    sol = solve(b.build())
    assert sol.status == "Optimal"
    # minimize a+b+a s.t. ab >= 1: 2a+b with ab=1 -> b=1/a: min 2a+1/a at a=1/sqrt 2
    expect = 2 * np.sqrt(2.0)
    assert sol.primal_value == pytest.approx(expect, rel=1e-6)


# ---------------------------------------------------------------- checks

def test_check_solution_on_hand_built_pair():
    prob = diag_trace_problem()
    sol = SdpSolution(status="Optimal", primal_value=1.0, dual_value=1.0,
                      primal_point=[np.diag([1.0, 0.0])],
                      dual_point=np.array([1.0]))
    rep = check_solution(prob, sol)
    assert max(rep["primal"], rep["dual"], rep["primal_cone"]) <= 1e-9
    assert rep["gap"] <= 1e-9


def test_check_solution_flags_perturbation():
    prob = diag_trace_problem()
    sol = SdpSolution(status="Optimal", primal_value=1.0, dual_value=1.0,
                      primal_point=[np.diag([1.0 + 1e-2, 0.0])],
                      dual_point=np.array([1.0]))
    rep = check_solution(prob, sol)
    assert rep["primal"] == pytest.approx(1e-2, rel=1e-9)


def test_check_solution_zero_constraints():
    blocks = [NonnegBlock(1)]
    prob = SdpProblem(blocks, [1.0], np.zeros((0, 1)), [])
    sol = SdpSolution(status="Optimal", primal_value=0.0, dual_value=0.0,
                      primal_point=[np.array([0.0])], dual_point=np.zeros(0))
    assert check_solution(prob, sol)["primal"] == 0.0


# ---------------------------------------------------------------- invariants

def test_weak_duality_and_residual_invariants_on_battery():
    rng = np.random.default_rng(3)
    ti, tj = tri_indices(4)
    for _ in range(10):
        s = 4
        A = rng.normal(size=(3, len(ti)))
        W = rng.normal(size=(s, s))
        X0 = W @ W.T + np.eye(s)
        bvec = A @ X0[ti, tj]
        Wc = rng.normal(size=(s, s))
        C = Wc @ Wc.T + 0.5 * np.eye(s)
        cf = np.where(ti == tj, C[ti, tj], 2 * C[ti, tj])
        b = SdpBuilder()
        X = b.psd_block(s)
        obj = LinExpr({X.entry_index(int(i), int(j)): float(v)
                       for i, j, v in zip(ti, tj, cf)})
        b.set_objective(obj)
        for r in range(3):
            row = LinExpr({X.entry_index(int(i), int(j)): float(v)
                           for i, j, v in zip(ti, tj, A[r])})
            b.add_equality(row, float(bvec[r]))
        prob = b.build()
        sol = solve(prob, tol=TOL)
        assert sol.status == "Optimal"
        assert sol.primal_value >= sol.dual_value - 10 * TOL * (1 + abs(sol.primal_value))
        assert max(sol.residuals.values()) <= TOL


def test_reproducibility_bitwise():
    prob = diag_trace_problem()
    s1 = solve(prob)
    s2 = solve(prob)
    assert s1.iterations == s2.iterations
    assert s1.primal_value == s2.primal_value
    assert s1.dual_value == s2.dual_value
    for a, b in zip(s1.primal_point, s2.primal_point):
        assert np.array_equal(a, b)
    assert np.array_equal(s1.dual_point, s2.dual_point)


def test_fifty_random_diagonal_sdps_reach_analytic_optimum():
    rng = np.random.default_rng(7)
    for _ in range(50):
        d = int(rng.integers(2, 7))
        cvec = rng.normal(size=d) * (10.0 ** rng.integers(-2, 3))
        b = SdpBuilder()
        X = b.psd_block(d)
        obj = X.entry(0, 0, float(cvec[0]))
        tr = X.entry(0, 0)
        for i in range(1, d):
            obj += X.entry(i, i, float(cvec[i]))
            tr += X.entry(i, i)
        b.set_objective(obj)
        b.add_equality(tr, 1.0)
        sol = solve(b.build())
        expect = float(cvec.min())  # min over the PSD trace-one simplex
        assert sol.status == "Optimal"
        assert abs(sol.primal_value - expect) <= 1e-6 * (1 + abs(expect))


def test_iter_limit_status():
    prob = diag_trace_problem()
    sol = solve(prob, max_iter=1)
    assert sol.status == "IterLimit"
    assert sol.iterations == 1


# ---------------------------------------------------------------- SDPA I/O

def test_sdpa_round_trip_bit_exact(tmp_path):
    b = SdpBuilder()
    X = b.psd_block(3)
    v = b.nonneg_block(2)
    b.set_objective(X.entry(0, 0, 1.25) + X.entry(2, 1, -0.375) + v.entry(1, 3.0))
    b.add_equality(X.entry(0, 0) + X.entry(1, 1) + X.entry(2, 2), 1.0)
    b.add_equality(X.entry(1, 0, 0.1) + v.entry(0, -2.0), 0.5)
    prob = b.build()
    path = tmp_path / "round.dat-s"
    write_sdpa(prob, str(path))
    back = read_sdpa(str(path))
    assert [type(b1).__name__ for b1 in back.blocks] == \
        [type(b0).__name__ for b0 in prob.blocks]
    assert [b1.dim for b1 in back.blocks] == [b0.dim for b0 in prob.blocks]
    assert np.array_equal(back.objective, prob.objective)
    assert np.array_equal(back.b, prob.b)
    assert np.array_equal(back.A.toarray(), prob.A.toarray())


def test_sdpa_rejects_free_blocks(tmp_path):
    b = SdpBuilder()
    b.free_block(1)
    b.set_objective(LinExpr.term(0))
    b.add_equality(LinExpr.term(0), 1.0)
    with pytest.raises(ValueError):
        write_sdpa(b.build(), str(tmp_path / "x.dat-s"))


def test_sdpa_solve_after_round_trip(tmp_path):
    prob = diag_trace_problem()
    path = tmp_path / "p.dat-s"
    write_sdpa(prob, str(path))
    sol = solve(read_sdpa(str(path)))
    assert sol.primal_value == pytest.approx(1.0, abs=1e-6)
