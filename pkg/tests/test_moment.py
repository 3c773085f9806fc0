"""Tests for moment functionals, moment/localizing matrices and cone
membership on both the Gram and the moment side."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsipp.moment import (IntervalUnivariate, MomentFunctional, MomentVarMap,
                          MonomialBasis, QModule, SLemma, SosBounded,
                          dual_cone_matrices, is_member, localizing_matrix,
                          membership_margin, moment_matrix, poly_image_in_y,
                          sos_membership_blocks)
from fsipp.poly import BivariatePoly, Polynomial
from fsipp.sdp import SdpBuilder, solve

points = st.lists(
    st.tuples(st.floats(-1, 1, allow_nan=False), st.floats(-1, 1, allow_nan=False)),
    min_size=1, max_size=3)


# ---------------------------------------------------------------- bases

def test_monomial_basis_graded_and_indexed():
    basis = MonomialBasis(2, 2)
    assert basis.monomials[0] == (0, 0)
    assert basis.size == 6
    degrees = [sum(m) for m in basis.monomials]
    assert degrees == sorted(degrees)
    for i, m in enumerate(basis.monomials):
        assert basis.index_of(m) == i


# ---------------------------------------------------------------- functionals

def test_from_atoms_matches_direct_sum():
    atoms = [((0.5, -0.25), 2.0), ((-1.0, 0.75), 0.5)]
    L = MomentFunctional.from_atoms(2, 2, atoms)
    for mono in [(0, 0), (1, 0), (2, 1), (0, 4)]:
        direct = sum(w * p[0] ** mono[0] * p[1] ** mono[1] for p, w in atoms)
        assert L.value(mono) == pytest.approx(direct, abs=1e-14)
    assert L.mass() == pytest.approx(2.5)
    mean = (2.0 * np.array([0.5, -0.25]) + 0.5 * np.array([-1.0, 0.75])) / 2.5
    np.testing.assert_allclose(L.point(), mean)


def test_apply_is_linear_in_the_polynomial():
    L = MomentFunctional.from_atoms(2, 2, [((0.3, 0.7), 1.25)])
    p = Polynomial(2, {(2, 0): 1.0, (1, 1): -2.0, (0, 0): 3.0})
    q = Polynomial(2, {(0, 2): 4.0})
    assert L.apply(p + q) == pytest.approx(L.apply(p) + L.apply(q))
    assert L.apply(p) == pytest.approx(1.25 * p((0.3, 0.7)))


def test_functional_degree_guards():
    with pytest.raises(ValueError):
        MomentFunctional(1, 1, {(3,): 1.0})
    L = MomentFunctional.from_atoms(1, 1, [((0.5,), 1.0)])
    with pytest.raises(ValueError):
        L.apply(Polynomial(1, {(3,): 1.0}))
    with pytest.raises(ValueError):
        moment_matrix(L, 2)


@settings(deadline=None, max_examples=25)
@given(st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_dirac_moment_matrix_is_rank_one(point):
    L = MomentFunctional.from_point(2, 2, point)
    M = moment_matrix(L, 2)
    basis = MonomialBasis(2, 2)
    v = np.array([point[0] ** a * point[1] ** b for a, b in basis.monomials])
    np.testing.assert_allclose(M, np.outer(v, v), atol=1e-10)


@settings(deadline=None, max_examples=25)
@given(points)
def test_atomic_moment_matrix_is_psd_with_atom_count_rank(atom_pts):
    atoms = [(p, 1.0) for p in atom_pts]
    L = MomentFunctional.from_atoms(2, 3, atoms)
    M = moment_matrix(L, 3)
    w = np.linalg.eigvalsh(M)
    assert w.min() >= -1e-9
    distinct = {tuple(np.round(p, 12)) for p in atom_pts}
    assert np.sum(w > 1e-9 * max(w.max(), 1.0)) <= len(distinct)


def test_localizing_matrix_against_direct_sum():
    q = Polynomial(2, {(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0})
    atoms = [((0.5, 0.25), 1.5), ((-0.3, 0.1), 0.75)]
    L = MomentFunctional.from_atoms(2, 2, atoms)
    Mq = localizing_matrix(L, q, 2)
    basis = MonomialBasis(2, 1)
    direct = np.zeros((basis.size, basis.size))
    for p, w in atoms:
        v = np.array([p[0] ** a * p[1] ** b for a, b in basis.monomials])
        direct += w * q(p) * np.outer(v, v)
    np.testing.assert_allclose(Mq, direct, atol=1e-12)
    # atoms inside {q >= 0}, so the localizing matrix is PSD
    assert np.linalg.eigvalsh(Mq).min() >= -1e-12


def test_localizing_matrix_flags_outside_atom():
    q = Polynomial(1, {(0,): 1.0, (2,): -1.0})
    L = MomentFunctional.from_point(1, 2, (2.0,))  # q(2) = -3 < 0
    assert np.linalg.eigvalsh(localizing_matrix(L, q, 2)).min() < -1e-6


# ---------------------------------------------------------------- cones

def test_interval_cone_membership():
    cone = IntervalUnivariate(2)
    inside = Polynomial(1, {(0,): 1.0, (2,): -1.0})       # 1 - y^2
    shifted = Polynomial(1, {(0,): 4.0, (1,): -4.0, (2,): 1.0})  # (y-2)^2
    sign_changing = Polynomial(1, {(1,): 1.0})             # y
    assert is_member(inside, cone)
    assert is_member(shifted, cone)
    assert not is_member(sign_changing, cone)


def test_slemma_cone_membership():
    phi = Polynomial(2, {(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0})
    cone = SLemma(phi)
    assert is_member(Polynomial(2, {(0, 0): 2.0, (2, 0): -1.0, (0, 2): -1.0}),
                     cone)  # 1 + phi
    assert is_member(phi, cone)
    assert not is_member(Polynomial(2, {(1, 0): 1.0}), cone)


def test_qmodule_cone_membership():
    gen = Polynomial(1, {(0,): 1.0, (2,): -1.0})
    cone = QModule((gen,), 2)
    assert is_member(gen, cone)
    assert is_member(Polynomial(1, {(0,): 1.25, (1,): -1.0, (2,): 0.25}), cone)
    assert not is_member(Polynomial(1, {(0,): -2.0, (1,): 1.0}), cone)


def test_sos_cone_rejects_nonneg_non_sos():
    motzkin = Polynomial(2, {(4, 2): 1.0, (2, 4): 1.0, (2, 2): -3.0,
                             (0, 0): 1.0})
    assert not is_member(motzkin, SosBounded(6))
    assert is_member(Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0}), SosBounded(2))


def test_membership_margin_sign_and_boundary():
    cone = SosBounded(2)
    interior, _ = membership_margin(Polynomial(1, {(0,): 1.0, (2,): 1.0}), cone)
    boundary, _ = membership_margin(Polynomial(1, {(2,): 1.0}), cone)
    assert interior > 1e-3
    assert boundary == pytest.approx(0.0, abs=1e-6)


def test_membership_degree_guard():
    builder = SdpBuilder()
    with pytest.raises(ValueError):
        sos_membership_blocks(builder, Polynomial(1, {(4,): 1.0}),
                              SosBounded(2), 1)


@settings(deadline=None, max_examples=20)
@given(points)
def test_dual_cone_matrices_psd_for_supported_measures(atom_pts):
    phi = Polynomial(2, {(0, 0): 2.0, (2, 0): -1.0, (0, 2): -1.0})
    cone = QModule((phi,), 2)
    atoms = [(p, 0.5) for p in atom_pts]  # all atoms satisfy phi >= 0
    L = MomentFunctional.from_atoms(2, 2, atoms)
    for mat in dual_cone_matrices(L, cone):
        assert np.linalg.eigvalsh(mat).min() >= -1e-9


def test_dual_cone_matrices_flag_unsupported_measure():
    phi = Polynomial(2, {(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0})
    L = MomentFunctional.from_point(2, 2, (2.0, 0.0))
    mats = dual_cone_matrices(L, QModule((phi,), 2))
    assert min(np.linalg.eigvalsh(m).min() for m in mats) < -1e-6


# ---------------------------------------------------------------- SDP side

def test_moment_var_map_round_trip_and_localizing():
    builder = SdpBuilder()
    mv = MomentVarMap(builder, 1, 2)
    gen = Polynomial(1, {(0,): 1.0, (2,): -1.0})
    mv.add_localizing(gen, "ball")
    builder.add_equality(mv.lin((0,)), 1.0, "mass")
    builder.set_objective(mv.lin_poly(Polynomial(1, {(2,): -1.0})))
    prob = builder.build()
    sol = solve(prob, tol=1e-9)
    assert sol.status == "Optimal"
    L = mv.read_solution(prob, sol)
    # max L(y^2) subject to support in [-1, 1] is 1
    assert L.value((2,)) == pytest.approx(1.0, abs=1e-6)
    assert L.mass() == pytest.approx(1.0, abs=1e-8)


def test_poly_image_in_y_matches_direct_evaluation():
    joint = Polynomial(3, {(2, 0, 1): 1.0, (0, 1, 2): -2.0, (1, 0, 0): 0.5})
    p = BivariatePoly.from_joint(joint, n_x=2, n_y=1)
    atoms = [((0.4, -0.2), 1.0), ((0.1, 0.9), 2.0)]
    L = MomentFunctional.from_atoms(2, 2, atoms)
    img = poly_image_in_y(L, p)
    for y in (-0.7, 0.0, 1.3):
        direct = sum(w * joint((x1, x2, y)) for (x1, x2), w in atoms)
        assert img((y,)) == pytest.approx(direct, abs=1e-12)
