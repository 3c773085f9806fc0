"""Tests for the certification layer: nonnegative least squares, lower-level
solves over the index set, KKT residuals, feasibility and the s.o.s-convexity
test."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsipp import instances
from fsipp.certify import (active_sets, certify_point, feasibility_check,
                           kkt_residual, lower_level_solve, nnls,
                           slater_probe, sos_convexity_check)
from fsipp.moment import MomentFunctional
from fsipp.poly import Polynomial

# ---------------------------------------------------------------- nnls

def test_nnls_clips_negative_directions():
    A = np.eye(2)
    x, resid = nnls(A, np.array([1.0, -2.0]))
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)
    assert resid == pytest.approx(2.0, abs=1e-12)


def test_nnls_exact_on_consistent_nonnegative_systems():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(6, 3))
    x_true = np.abs(rng.normal(size=3)) + 0.1
    x, resid = nnls(A, A @ x_true)
    np.testing.assert_allclose(x, x_true, atol=1e-9)
    assert resid <= 1e-10


def test_nnls_degenerate_shapes():
    x, resid = nnls(np.zeros((3, 0)), np.array([1.0, 2.0, 2.0]))
    assert x.size == 0 and resid == pytest.approx(3.0)
    with pytest.raises(ValueError):
        nnls(np.eye(2), np.ones(3))


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000))
def test_nnls_agrees_with_scipy(seed):
    from scipy.optimize import nnls as scipy_nnls

    rng = np.random.default_rng(seed)
    A = rng.normal(size=(int(rng.integers(2, 8)), int(rng.integers(1, 6))))
    b = rng.normal(size=A.shape[0])
    x, resid = nnls(A, b)
    x_ref, resid_ref = scipy_nnls(A, b)
    assert resid == pytest.approx(resid_ref, abs=1e-9)
    np.testing.assert_allclose(A @ x, A @ x_ref, atol=1e-7)


# ------------------------------------------------------- lower-level solve

def test_lower_level_constant_objective_short_circuits():
    prob, _ = instances.case1_problem()
    # x = 0 sends every y-dependent slice of p to zero
    p_star, Lambda, certified = lower_level_solve(np.zeros(2), prob)
    assert certified
    assert p_star == pytest.approx(0.0, abs=1e-12)
    assert len(Lambda) == 1


def test_lower_level_is_a_lower_bound_on_grids():
    prob, _ = instances.quarter_circle_problem()
    # the index set is the quarter arc {y >= 0, |y| = 1}: grid it directly
    theta = np.linspace(0.0, np.pi / 2, 10_000)
    ys = np.column_stack([np.cos(theta), np.sin(theta)])
    for u in (np.array([0.7377, 0.6033]), np.array([0.2, 0.1])):
        p_star, _, _ = lower_level_solve(u, prob)
        joint = prob.p.substitute_x(u)
        grid_min = min(float(-joint(y)) for y in ys)
        assert p_star <= grid_min + 1e-6


def test_active_sets_split_by_tau():
    prob, _ = instances.case2_problem()
    u = np.array([0.5, 0.5])  # psi = (x1+x2-1)(x1+x2-0.5) = 0 at u
    lower = lower_level_solve(u, prob)
    Lambda, J = active_sets(u, prob, tau=1e-3, lower=lower)
    assert J == [0]
    _, J_far = active_sets(np.array([0.55, 0.55]), prob, tau=1e-6, lower=lower)
    assert J_far == []


def test_feasibility_and_slater():
    prob, _ = instances.case2_problem()
    ok, margin = feasibility_check(np.array([0.5, 0.5]), prob, tau=1e-3)
    assert ok and margin <= 1e-3
    bad, bad_margin = feasibility_check(np.array([2.0, 2.0]), prob, tau=1e-3)
    assert not bad and bad_margin > 1.0
    strict, slack = slater_probe(prob, np.array([0.4, 0.4]))
    assert strict and slack < 0.0


def test_kkt_residual_vanishes_at_interior_stationary_point():
    prob, _, _, argmin = instances.planted_convex_quadratic(0)
    omega, multipliers = kkt_residual(np.asarray(argmin), prob, [], [])
    assert omega <= 1e-16
    assert multipliers == {"gamma": {}, "eta": {}}


def test_kkt_residual_rejects_nonpositive_denominator():
    prob, _ = instances.case1_problem()  # g = 1 - x1 - x2
    with pytest.raises(ValueError):
        kkt_residual(np.array([2.0, 2.0]), prob, [], [])


def test_certify_point_feasible_but_not_stationary():
    prob, _ = instances.quarter_circle_problem()
    report = certify_point(np.zeros(2), prob, tau=1e-3)
    assert report.feasible_within_tau
    assert report.omega > 1e-3
    assert not report.passes
    round_trip = report.as_dict()
    assert round_trip["passes"] is False
    assert round_trip["omega"] == pytest.approx(report.omega)


# ------------------------------------------------------- s.o.s-convexity

def test_sos_convexity_accepts_low_degree_and_separable_quartics():
    assert sos_convexity_check(Polynomial(2, {(1, 0): 3.0, (0, 1): -1.0}))
    assert sos_convexity_check(Polynomial.constant(2, 5.0))
    assert sos_convexity_check(Polynomial(2, {(4, 0): 1.0, (0, 4): 1.0}))


def test_sos_convexity_rejects_concave_and_indefinite():
    assert not sos_convexity_check(Polynomial(2, {(2, 0): -1.0, (0, 2): -1.0}))
    assert not sos_convexity_check(Polynomial(2, {(1, 1): 1.0}))
    assert not sos_convexity_check(Polynomial(1, {(3,): 1.0}))


def test_sos_convexity_rejects_the_bundled_convex_sextic():
    assert sos_convexity_check(instances.convex_sextic_poly()) is False


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 10_000))
def test_jensen_inequality_for_sos_convex_polynomials(seed):
    """L(h) >= L(1) * h(L(x)/L(1)) for s.o.s-convex h and atomic L."""
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(2, 2))
    Q = B.T @ B
    c = rng.normal(size=2)
    h = Polynomial(2, {(2, 0): Q[0, 0], (1, 1): 2 * Q[0, 1], (0, 2): Q[1, 1],
                       (4, 0): c[0] ** 4, (3, 1): 4 * c[0] ** 3 * c[1],
                       (2, 2): 6 * c[0] ** 2 * c[1] ** 2,
                       (1, 3): 4 * c[0] * c[1] ** 3, (0, 4): c[1] ** 4})
    atoms = [(rng.uniform(-1, 1, size=2), w)
             for w in rng.uniform(0.1, 1.0, size=int(rng.integers(1, 4)))]
    L = MomentFunctional.from_atoms(2, 2, atoms)
    lhs = L.apply(h)
    rhs = L.mass() * h(L.point())
    assert lhs >= rhs - 1e-9 * max(1.0, abs(rhs))
