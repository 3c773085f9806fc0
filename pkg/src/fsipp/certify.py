"""Candidate certification: lower-level solves over the index set, active
sets, nonnegative least-squares KKT residuals, feasibility margins, a
Slater probe, and the s.o.s-convexity test.

The lower-level engine minimizes a polynomial over a semialgebraic set by
the moment hierarchy (moment matrix plus localizing blocks, normalized
mass).  When flat truncation certifies the solve, the extracted support is
the exact active set; otherwise the best bound is returned together with a
locally refined candidate and ``certified=False``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalTroubleError
from .extract import extract_atoms, flat_truncation_check, point_from_functional
from .moment import MomentVarMap
from .poly import Polynomial, monomials_up_to
from .sdp import LinExpr, SdpBuilder, solve


# --------------------------------------------------------------------------
# nonnegative least squares
# --------------------------------------------------------------------------


def nnls(A: np.ndarray, b: np.ndarray, max_iter: int | None = None):
    """Minimize ||A x - b||_2 over x >= 0 (Lawson-Hanson active set).

    Returns (x, residual_norm).  The iterate satisfies the NNLS KKT system
    to ~1e-10: x >= 0, gradient >= -tol on the active set, complementary
    slackness on the passive set.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if b.shape[0] != m:
        raise ValueError("shape mismatch between matrix and target")
    if n == 0:
        return np.zeros(0), float(np.linalg.norm(b))
    if max_iter is None:
        max_iter = 6 * n + 30
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    scale = max(1.0, float(np.max(np.abs(A.T @ b))) if m else 1.0)
    tol = 1e-11 * scale
    budget = max_iter

    while budget > 0:
        w = A.T @ (b - A @ x)
        w_masked = np.where(passive, -np.inf, w)
        j = int(np.argmax(w_masked))
        if w_masked[j] <= tol:
            return x, float(np.linalg.norm(b - A @ x))
        passive[j] = True
        while budget > 0:
            budget -= 1
            idx = np.flatnonzero(passive)
            s = np.zeros(n)
            s[idx], *_ = np.linalg.lstsq(A[:, idx], b, rcond=None)
            if s[idx].min() > 0:
                x = s
                break
            # inner step: move toward s until the first coordinate hits zero,
            # then drop exactly the blocked coordinates from the passive set
            neg = idx[s[idx] <= 0]
            alpha = float(np.min(x[neg] / (x[neg] - s[neg])))
            x = x + alpha * (s - x)
            blocked = passive & (x <= 1e-12 * max(1.0, float(np.max(np.abs(x))))
                                 ) & (s <= 0)
            passive &= ~blocked
            x[~passive] = 0.0
    raise NumericalTroubleError("nonnegative least squares iteration cap")


# --------------------------------------------------------------------------
# lower-level solve over the index set
# --------------------------------------------------------------------------


def minimize_on_semialgebraic(h: Polynomial, gens, k: int,
                              sdp_tol: float = 1e-8, rank_tol: float = 1e-8):
    """One order of the moment hierarchy for  min h(y) s.t. gens >= 0.

    Returns (bound, L, cert, atoms): the relaxation lower bound, the optimal
    functional, a flat-truncation certificate (or None), and extracted
    atoms (or None).
    """
    builder = SdpBuilder()
    mv = MomentVarMap(builder, h.nvars, k)
    for i, q in enumerate(gens):
        mv.add_localizing(q, f"loc{i}")
    one = (0,) * h.nvars
    builder.add_equality(mv.lin(one), 1.0, "mass")
    builder.set_objective(mv.lin_poly(h))
    prob_sdp = builder.build()
    sol = solve(prob_sdp, tol=sdp_tol)
    if sol.status == "PrimalInfeasible":
        raise NumericalTroubleError(
            f"moment relaxation infeasible at order {k}: empty index set?")
    if sol.status not in ("Optimal",):
        raise NumericalTroubleError(
            f"lower-level SDP ended with status {sol.status} at order {k}")
    L = mv.read_solution(prob_sdp, sol)
    k0 = max([(int(q.degree) + 1) // 2 for q in gens], default=1) or 1
    d_half = max((int(h.degree) + 1) // 2, 1) if not h.is_zero() else 1
    cert = flat_truncation_check(L, k=k, k0=k0, d_half=d_half, rel_tol=rank_tol)
    atoms = None
    if cert is not None:
        try:
            atoms = extract_atoms(L, cert)
        except NumericalTroubleError:
            cert = None
    return float(sol.primal_value), L, cert, atoms


def _local_refine(h: Polynomial, gens, y0: np.ndarray) -> np.ndarray:
    """Polish a candidate minimizer with a constrained local solver."""
    from scipy.optimize import minimize

    cons = [{"type": "ineq", "fun": (lambda y, q=q: q(y)),
             "jac": (lambda y, q=q: q.gradient_at(y))} for q in gens]
    try:
        res = minimize(lambda y: h(y), np.asarray(y0, dtype=float),
                       jac=lambda y: h.gradient_at(y), constraints=cons,
                       method="SLSQP", options={"maxiter": 200, "ftol": 1e-12})
        if res.success:
            return np.asarray(res.x)
    except Exception:
        pass
    return np.asarray(y0, dtype=float)


def lower_level_solve(u, prob, k_range=None, tau: float = 1e-3,
                      sdp_tol: float = 1e-8, rank_tol: float = 1e-8):
    """Globally minimize  -p(u, y)  over the index set.

    Returns (p_star, Lambda, certified): the optimal value (always a valid
    lower bound), the minimizer set (exact support under flat truncation,
    otherwise one locally refined candidate), and whether the value is
    certified exact.

    A y-independent objective short-circuits: the value is exact and the
    index set's representative point stands in for the (whole-set) support.
    """
    u = np.asarray(u, dtype=float)
    h = prob.p.substitute_x(u).scale(-1.0)
    index_set = prob.index_set
    gens = index_set.as_generators()
    if h.degree <= 0:  # constant objective: minimum is the constant
        rep = index_set.representative_point()
        if rep is None:
            rep = np.zeros(prob.p.n_y)
        return float(h.coefficient((0,) * h.nvars)), [np.asarray(rep, dtype=float)], True

    k0 = max([(int(q.degree) + 1) // 2 for q in gens], default=1) or 1
    k_min = max((int(h.degree) + 1) // 2, k0, 1)
    if k_range is None:
        k_range = (k_min, k_min + 1)
    best = -np.inf
    last_L = None
    for k in k_range:
        if k < k_min:
            continue
        bound, L, cert, atoms = minimize_on_semialgebraic(
            h, gens, k, sdp_tol=sdp_tol, rank_tol=rank_tol)
        best = max(best, bound)
        last_L = L
        if cert is not None and atoms is not None:
            return best, [pt for pt, _ in atoms], True
    try:
        y0 = point_from_functional(last_L)
    except Exception:
        y0 = np.zeros(prob.p.n_y)
    return best, [_local_refine(h, gens, y0)], False


# --------------------------------------------------------------------------
# stop-criterion pieces
# --------------------------------------------------------------------------


def active_sets(u, prob, tau: float = 1e-3, lower=None):
    """(Lambda, J): active index points and active constraint indices."""
    if lower is None:
        lower = lower_level_solve(u, prob, tau=tau)
    p_star, Lambda, _ = lower
    lam = list(Lambda) if p_star <= tau else []
    J = [j for j, psi in enumerate(prob.psis) if abs(psi(u)) <= tau]
    return lam, J


def kkt_residual(u, prob, Lambda, J):
    """Squared distance of the scaled-gradient target to the active cone.

    omega = min_{gamma, eta >= 0} || (grad f - (f/g) grad g)(u)
              + sum_y gamma_y grad_x p(u, y) + sum_j eta_j grad psi_j(u) ||^2
    """
    u = np.asarray(u, dtype=float)
    gu = prob.g(u)
    if gu <= 0:
        raise ValueError(f"denominator not positive at the point: g(u) = {gu}")
    ratio = prob.f(u) / gu
    target = -(prob.f.gradient_at(u) - ratio * prob.g.gradient_at(u))
    cols = []
    for y in Lambda:
        cols.append(prob.p.substitute_y(np.asarray(y)).gradient_at(u))
    for j in J:
        cols.append(prob.psis[j].gradient_at(u))
    if cols:
        A = np.column_stack(cols)
    else:
        A = np.zeros((u.size, 0))
    x, resid = nnls(A, target)
    multipliers = {
        "gamma": {tuple(float(c) for c in y): float(x[i])
                  for i, y in enumerate(Lambda)},
        "eta": {int(j): float(x[len(Lambda) + i]) for i, j in enumerate(J)},
    }
    return float(resid ** 2), multipliers


def feasibility_check(u, prob, tau: float = 1e-3, lower=None):
    """(feasible, margin): margin = max(-p_star, psi_j(u))."""
    if lower is None:
        lower = lower_level_solve(u, prob, tau=tau)
    p_star, _, _ = lower
    vals = [-p_star] + [float(psi(u)) for psi in prob.psis]
    margin = max(vals)
    return margin <= tau, float(margin)


def slater_probe(prob, candidate):
    """(strict, slack): does the candidate satisfy every constraint strictly?"""
    _, slack = feasibility_check(candidate, prob, tau=0.0)
    return slack < 0.0, slack


# --------------------------------------------------------------------------
# s.o.s-convexity
# --------------------------------------------------------------------------


def sos_convexity_check(h: Polynomial, tol: float = 1e-8,
                        threshold: float = 1e-7) -> bool:
    """Is the Hessian form z^T grad^2 h(x) z a sum of squares in (x, z)?

    Decided by the sign of the maximal margin t with Gram - t*I still PSD
    on the z-linear basis {x^alpha z_i}; the form is normalized by its
    largest coefficient so the threshold is scale-free.
    """
    m = h.nvars
    if h.degree <= 1:
        return True
    hess = h.hessian()
    terms: dict[tuple, float] = {}
    for i in range(m):
        for j in range(m):
            for exp, c in hess[i][j].terms.items():
                zpart = [0] * m
                zpart[i] += 1
                zpart[j] += 1
                joint = exp + tuple(zpart)
                terms[joint] = terms.get(joint, 0.0) + c
    terms = {e: c for e, c in terms.items() if c != 0.0}
    if not terms:
        return True
    scale = max(abs(c) for c in terms.values())
    terms = {e: c / scale for e, c in terms.items()}

    dz = (int(h.degree) - 2 + 1) // 2  # ceil((deg h - 2)/2)
    xmonos = monomials_up_to(m, dz)
    basis = [xm + tuple(1 if t == i else 0 for t in range(m))
             for i in range(m) for xm in xmonos]
    builder = SdpBuilder()
    G = builder.psd_block(len(basis), "hessgram")
    t = builder.free_block(1, "margin")
    rows: dict[tuple, LinExpr] = {}
    for i1 in range(len(basis)):
        for i2 in range(i1, len(basis)):
            prod = tuple(a + b for a, b in zip(basis[i1], basis[i2]))
            w = 1.0 if i1 == i2 else 2.0
            rows.setdefault(prod, LinExpr()).add_term(
                G.entry_index(i2, i1), w)
    for bmono in basis:
        sq = tuple(2 * e for e in bmono)
        rows.setdefault(sq, LinExpr()).add_term(t.index(0), 1.0)
    for mono in set(rows) | set(terms):
        expr = rows.get(mono, LinExpr()) - LinExpr.constant(terms.get(mono, 0.0))
        builder.add_equality(expr, 0.0)
    builder.set_objective(t.entry(0, -1.0))
    sol = solve(builder.build(), tol=tol)
    if sol.status == "Optimal":
        return -sol.primal_value >= -threshold
    if sol.status == "DualInfeasible":  # margin unbounded above: interior
        return True
    if sol.status == "PrimalInfeasible":
        return False
    raise NumericalTroubleError(
        f"s.o.s-convexity SDP ended with status {sol.status}")


# --------------------------------------------------------------------------
# combined report
# --------------------------------------------------------------------------


@dataclass
class KktReport:
    p_star: float
    Lambda: list
    J: list
    omega: float
    multipliers: dict
    feasible_within_tau: bool
    tau: float
    margin: float = float("nan")
    lower_certified: bool = False

    @property
    def passes(self) -> bool:
        """Stop-criterion success: certified feasibility and a KKT residual
        within tolerance.  An uncertified lower level never passes."""
        return (self.lower_certified and self.feasible_within_tau
                and self.omega <= self.tau)

    def as_dict(self) -> dict:
        return {
            "p_star": self.p_star,
            "Lambda": [[float(c) for c in y] for y in self.Lambda],
            "J": [int(j) for j in self.J],
            "omega": self.omega,
            "multipliers": {
                "gamma": {",".join(repr(c) for c in k): v
                          for k, v in self.multipliers.get("gamma", {}).items()},
                "eta": {str(k): v
                        for k, v in self.multipliers.get("eta", {}).items()},
            },
            "feasible_within_tau": self.feasible_within_tau,
            "tau": self.tau,
            "margin": self.margin,
            "lower_certified": self.lower_certified,
            "passes": self.passes,
        }


def certify_point(u, prob, tau: float = 1e-3, k_range=None,
                  sdp_tol: float = 1e-8, rank_tol: float = 1e-8) -> KktReport:
    """Run the full stop criterion at a candidate point."""
    lower = lower_level_solve(u, prob, k_range=k_range, tau=tau,
                              sdp_tol=sdp_tol, rank_tol=rank_tol)
    p_star, _, certified = lower
    feasible, margin = feasibility_check(u, prob, tau=tau, lower=lower)
    Lambda, J = active_sets(u, prob, tau=tau, lower=lower)
    omega, multipliers = kkt_residual(u, prob, Lambda, J)
    return KktReport(p_star=float(p_star), Lambda=Lambda, J=J, omega=omega,
                     multipliers=multipliers, feasible_within_tau=feasible,
                     tau=tau, margin=margin, lower_certified=certified)
