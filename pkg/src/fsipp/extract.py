"""Minimizer recovery from moment functionals.

Point map L(x)/L(1), the flat-truncation rank certificate, and atomic
measure extraction via the column-echelon / multiplication-matrix
procedure (shift operators on a rank factor of the moment matrix, joint
diagonalization through a random convex combination).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateMassError, NumericalTroubleError
from .moment import MomentFunctional, MonomialBasis, moment_matrix
from .poly import monomials_up_to


def numeric_rank(mat: np.ndarray, rel_tol: float = 1e-8):
    """(rank, singular values): count of s.v. above rel_tol * largest."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        return 0, np.zeros(0)
    sv = np.linalg.svd(mat, compute_uv=False)
    top = sv[0] if sv.size else 0.0
    if top <= 0.0:
        return 0, sv
    return int(np.sum(sv > rel_tol * top)), sv


@dataclass
class RankCertificate:
    k_prime: int
    rank_low: int
    rank_high: int
    singular_values_low: np.ndarray
    singular_values_high: np.ndarray
    passed: bool
    k0: int = 1
    rel_tol: float = 1e-8

    def as_dict(self) -> dict:
        return {
            "k_prime": self.k_prime,
            "rank_low": self.rank_low,
            "rank_high": self.rank_high,
            "singular_values_low": [float(s) for s in self.singular_values_low],
            "singular_values_high": [float(s) for s in self.singular_values_high],
            "passed": self.passed,
            "k0": self.k0,
            "rel_tol": self.rel_tol,
        }


def point_from_functional(L: MomentFunctional, tol: float = 1e-10) -> np.ndarray:
    """The normalized first-moment vector (L(x_1), ..., L(x_m)) / L(1)."""
    mass = L.mass()
    if mass <= tol:
        raise DegenerateMassError(f"functional mass {mass} below {tol}")
    return L.point()


def flat_truncation_check(L: MomentFunctional, k: int, k0: int, d_half: int,
                          rel_tol: float = 1e-8) -> RankCertificate | None:
    """Scan k' in [max(d_half, k0), k] for rank M_{k'-k0} = rank M_{k'}.

    Returns the first passing certificate, or None if no order passes.
    """
    lo = max(d_half, k0)
    last = None
    for k_prime in range(lo, k + 1):
        r_lo, sv_lo = numeric_rank(moment_matrix(L, k_prime - k0), rel_tol)
        r_hi, sv_hi = numeric_rank(moment_matrix(L, k_prime), rel_tol)
        cert = RankCertificate(k_prime, r_lo, r_hi, sv_lo, sv_hi,
                               passed=(r_lo == r_hi), k0=k0, rel_tol=rel_tol)
        if cert.passed:
            return cert
        last = cert
    return None


def _column_echelon(V: np.ndarray, piv_tol: float):
    """Gauss-Jordan on the r x N coordinate matrix, pivoting left to right.

    Returns (R, pivots): R[:, c] holds the coordinates of column c in the
    span of the pivot columns; R[:, pivots] is the identity.
    """
    R = np.array(V, dtype=float)
    r, N = R.shape
    pivots = []
    row = 0
    for col in range(N):
        if row >= r:
            break
        sub = R[row:, col]
        imax = int(np.argmax(np.abs(sub)))
        if abs(sub[imax]) <= piv_tol:
            continue
        if imax != 0:
            R[[row, row + imax]] = R[[row + imax, row]]
        R[row] /= R[row, col]
        for rr in range(r):
            if rr != row and R[rr, col] != 0.0:
                R[rr] -= R[rr, col] * R[row]
        pivots.append(col)
        row += 1
    return R, pivots


def extract_atoms(L: MomentFunctional, cert: RankCertificate,
                  recon_tol: float = 1e-6):
    """Recover the atoms of a flat functional as [(point, weight), ...].

    Raises NumericalTrouble when the pivot structure, the joint
    eigendecomposition, the weights, or the moment reconstruction do not
    behave like an r-atomic measure.
    """
    if not cert.passed:
        raise ValueError("rank certificate did not pass")
    m = L.nvars
    k_prime = cert.k_prime
    r = cert.rank_high
    if r == 0:
        return []
    basis = MonomialBasis(m, k_prime)
    M = moment_matrix(L, k_prime)
    w, U = np.linalg.eigh(M)
    w = np.clip(w[-r:], 0.0, None)
    V = U[:, -r:] * np.sqrt(w)  # N x r rank factor, M ~ V V^T
    piv_tol = 1e-7 * max(1.0, float(np.max(np.abs(V))))
    R, pivots = _column_echelon(V.T, piv_tol)
    if len(pivots) < r:
        raise NumericalTroubleError(
            f"rank factor collapsed: {len(pivots)} pivots for rank {r}")
    piv_monos = [basis.monomials[c] for c in pivots]
    if any(sum(mono) > k_prime - 1 for mono in piv_monos):
        raise NumericalTroubleError("pivot monomials exceed degree k'-1")

    mult = []
    for i in range(m):
        Ni = np.empty((r, r))
        for j, mono in enumerate(piv_monos):
            shifted = tuple(e + (1 if idx == i else 0)
                            for idx, e in enumerate(mono))
            Ni[:, j] = R[:, basis.index_of(shifted)]
        mult.append(Ni)

    rng = np.random.default_rng(0)
    coeffs = rng.random(m)
    coeffs /= coeffs.sum()
    N = sum(c * Ni for c, Ni in zip(coeffs, mult))
    T, Q = sla.schur(N, output="real")
    sub = np.diag(T, -1) if r > 1 else np.zeros(0)
    if sub.size and np.max(np.abs(sub)) > 1e-6 * (1.0 + np.max(np.abs(T))):
        raise NumericalTroubleError(
            "joint eigenproblem has complex pairs; operators do not commute")

    points = []
    for j in range(r):
        q = Q[:, j]
        points.append(np.array([float(q @ Ni @ q) for Ni in mult]))

    monos = monomials_up_to(m, 2 * k_prime)
    A = np.empty((len(monos), r))
    bvec = np.empty(len(monos))
    for a, mono in enumerate(monos):
        for j, pt in enumerate(points):
            A[a, j] = float(np.prod(pt ** np.array(mono)))
        bvec[a] = L.value(mono)
    weights, *_ = np.linalg.lstsq(A, bvec, rcond=None)
    if np.min(weights) < -1e-7:
        raise NumericalTroubleError(f"negative atomic weight {np.min(weights)}")

    check_monos = monomials_up_to(m, 2 * (k_prime - cert.k0))
    scale = max(1.0, max(abs(L.value(mo)) for mo in check_monos))
    worst = 0.0
    for mono in check_monos:
        recon = sum(wj * float(np.prod(pt ** np.array(mono)))
                    for pt, wj in zip(points, weights))
        worst = max(worst, abs(recon - L.value(mono)))
    if worst > recon_tol * scale:
        raise NumericalTroubleError(
            f"atomic reconstruction off by {worst:g} (tol {recon_tol:g})")
    return [(pt, float(wj)) for pt, wj in zip(points, weights)]
