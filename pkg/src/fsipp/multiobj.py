"""Efficient solutions of multi-objective fractional programs.

For objectives f_1/g_1, ..., f_t/g_t over a common feasible set F (given
by psi_j <= 0 and the semi-infinite family p(., y) <= 0), a point u* in F
is efficient when no x in F improves one component without worsening
another.  The sequential scheme here minimizes one component at a time:
stage i minimizes f_i/g_i subject to the cross-constraints

    g_j(u^(i-1)) f_j(x) - f_j(u^(i-1)) g_j(x) <= 0,   j != i,

which pin the other components at or below their values at the previous
stage's point.  After t stages the point is efficient; the walk stops
early when a stage's minimizer is provably unique (rank-one moment matrix
with a positive definite numerator Hessian under a quadratic-module tag).

The audit is a falsification test: it rasterizes a user-declared box,
keeps the clearly feasible grid points, and searches for one that
dominates the candidate componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certify import feasibility_check
from .errors import NumericalTroubleError
from .poly import BivariatePoly, Polynomial
from .relax import (CaseTag, FsippProblem, IndexSetDesc, Interval, QuadraticSet,
                    RelaxOptions, classify_case, solve_hierarchy)


@dataclass(frozen=True)
class MultiFsippProblem:
    """Min (f_1/g_1, ..., f_t/g_t) over psi_j <= 0, p(., y) <= 0 on the index set."""

    objectives: tuple
    p: BivariatePoly
    index_set: IndexSetDesc
    psis: tuple = ()

    def __post_init__(self):
        objs = tuple((f, g) for f, g in self.objectives)
        object.__setattr__(self, "objectives", objs)
        object.__setattr__(self, "psis", tuple(self.psis))
        if len(objs) < 2:
            raise ValueError("at least two objectives are required")
        m = objs[0][0].nvars
        for f, g in objs:
            if f.nvars != m or g.nvars != m:
                raise ValueError("objectives must share x-variables")
        if any(psi.nvars != m for psi in self.psis):
            raise ValueError("constraints must share x-variables")
        if self.p.n_x != m:
            raise ValueError("constraint family has the wrong x-dimension")
        if self.p.n_y != self.index_set.n_y:
            raise ValueError("constraint family and index set disagree on y")

    @property
    def m(self) -> int:
        return self.objectives[0][0].nvars

    @property
    def t(self) -> int:
        return len(self.objectives)

    def base_problem(self, i: int) -> FsippProblem:
        """The single-objective instance of component i (1-based), without
        cross-constraints."""
        f, g = self.objectives[i - 1]
        return FsippProblem(f, g, self.psis, self.p, self.index_set)

    def objective_vector(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.array([f(u) / g(u) for f, g in self.objectives])


def scalarize(mprob: MultiFsippProblem, i: int, u_prev,
              tau: float = 1e-3, check_feasible: bool = True) -> FsippProblem:
    """The stage-i single-objective instance anchored at the point u_prev.

    Component i (1-based) becomes the objective; every other component j
    contributes the cross-constraint
    g_j(u_prev) f_j(x) - f_j(u_prev) g_j(x) <= 0, appended after any
    original constraints.  The anchor point must be feasible within tau.
    """
    if not 1 <= i <= mprob.t:
        raise ValueError(f"stage index {i} outside 1..{mprob.t}")
    u_prev = np.asarray(u_prev, dtype=float)
    base = mprob.base_problem(i)
    if check_feasible:
        ok, margin = feasibility_check(u_prev, base, tau=tau)
        if not ok:
            raise ValueError(
                f"anchor point infeasible: constraint margin {margin:.3e} > {tau}")
    cross = []
    for j, (fj, gj) in enumerate(mprob.objectives, start=1):
        if j == i:
            continue
        cross.append(fj.scale(gj(u_prev)) - gj.scale(fj(u_prev)))
    fi, gi = mprob.objectives[i - 1]
    return FsippProblem(fi, gi, mprob.psis + tuple(cross), mprob.p,
                        mprob.index_set)


@dataclass
class EfficiencyReport:
    """Outcome of the sequential scheme."""

    path: list  # [(stage, point, stage value), ...]
    final_point: np.ndarray
    stopped_by: str  # "Uniqueness" | "Exhausted_t"
    objective_vector: np.ndarray
    traces: list = field(default_factory=list)


def epsilon_constraint_solve(mprob: MultiFsippProblem, u0, opts: RelaxOptions,
                             k_range: tuple | None = None) -> EfficiencyReport:
    """Run the stages from the initial feasible point u0.

    Each stage scalarizes at the previous point, solves the relaxation,
    and extracts the new point.  The walk returns after a stage whose
    minimizer is verified unique (rank-one certificate plus positive
    definite numerator Hessian under a Case3/Case4 tag), or after all t
    stages.  Failures carry the stage index.
    """
    u_prev = np.asarray(u0, dtype=float)
    ok, margin = feasibility_check(u_prev, mprob.base_problem(1), tau=opts.tau)
    if not ok:
        raise ValueError(
            f"initial point infeasible: constraint margin {margin:.3e} > {opts.tau}")
    path, traces = [], []
    stopped_by = "Exhausted_t"
    for i in range(1, mprob.t + 1):
        try:
            sub = scalarize(mprob, i, u_prev, tau=opts.tau,
                            check_feasible=(i > 1))
            try:
                classify_case(sub, opts.case_override)
                stage_opts = opts
            except ValueError:  # override does not fit this stage's shape
                stage_opts = RelaxOptions(R=opts.R, g_star=opts.g_star, k=opts.k,
                                          tau=opts.tau, rank_tol=opts.rank_tol,
                                          sdp_tol=opts.sdp_tol)
            trace = solve_hierarchy(sub, stage_opts, k_range)
            if trace.candidate is None:
                statuses = [(row.k, row.dual_status, row.error)
                            for row in trace.rows]
                raise NumericalTroubleError(
                    f"no point recovered; per-order outcomes: {statuses}")
        except Exception as exc:
            raise type(exc)(f"stage {i}: {exc}") from exc
        u_prev = np.asarray(trace.candidate, dtype=float)
        path.append((i, u_prev, trace.r_dual))
        traces.append(trace)
        if (trace.tag in (CaseTag.CASE3, CaseTag.CASE4)
                and trace.certificate is not None
                and trace.certificate.rank_high == 1
                and bool(trace.hessian_pd)):
            stopped_by = "Uniqueness"
            break
    return EfficiencyReport(path=path, final_point=u_prev, stopped_by=stopped_by,
                            objective_vector=mprob.objective_vector(u_prev),
                            traces=traces)


# --------------------------------------------------------------------------
# grid audit
# --------------------------------------------------------------------------


def _audit_y_points(index_set: IndexSetDesc) -> np.ndarray:
    """A dense deterministic y-grid for the worst-case constraint sweep."""
    if isinstance(index_set, Interval):
        return np.linspace(-1.0, 1.0, 2001).reshape(-1, 1)
    if isinstance(index_set, QuadraticSet) and index_set.n_y == 2:
        y0 = index_set.representative_point()
        angles = np.linspace(0.0, 2.0 * np.pi, 2000, endpoint=False)
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        phi = index_set.phi
        f0 = phi(y0)
        pts = [y0]
        for d in dirs:
            fp, fm = phi(y0 + d), phi(y0 - d)
            a = 0.5 * (fp + fm) - f0
            b = 0.5 * (fp - fm)
            if a < -1e-12:
                t_edge = (-b - np.sqrt(max(b * b - 4.0 * a * f0, 0.0))) / (2.0 * a)
            else:
                t_edge = 10.0
            for frac in (0.5, 0.8, 0.95, 1.0):
                pts.append(y0 + (frac * t_edge) * d)
        return np.array(pts)
    return index_set.sample_points(4096)


def image_grid(mprob: MultiFsippProblem, box, grid_size: int = 200,
               feas_margin: float = 1e-4):
    """Rasterize the box: grid points, a feasibility mask and the t
    objective values per point.

    A point counts as feasible when its worst constraint value over a
    dense y-sweep stays below ``-feas_margin`` (the margin absorbs the
    sweep's discretization slack), every scalar constraint holds, and all
    denominators are positive.  Returns ``(points, feasible, values)`` of
    shapes (N, m), (N,), (N, t).
    """
    box = [(float(lo), float(hi)) for lo, hi in box]
    if len(box) != mprob.m:
        raise ValueError(f"box has {len(box)} axes for {mprob.m} variables")
    axes = [np.linspace(lo, hi, grid_size) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([g.ravel() for g in mesh])

    # worst constraint value over the y-sweep, evaluated via the y-slices
    ypts = _audit_y_points(mprob.index_set)
    slices = list(mprob.p.slices.items())
    svals = np.vstack([sx.eval_many(pts) for _, sx in slices])  # (nslice, N)
    ypows = np.column_stack([
        np.prod(ypts ** np.array(ymono, dtype=float), axis=1)
        for ymono, _ in slices])  # (ny, nslice)
    worst = np.full(len(pts), -np.inf)
    for start in range(0, len(ypts), 256):
        chunk = ypows[start:start + 256] @ svals  # (chunk, N)
        worst = np.maximum(worst, chunk.max(axis=0))
    feasible = worst <= -feas_margin
    for psi in mprob.psis:
        feasible &= psi.eval_many(pts) <= 0.0

    vals = np.empty((len(pts), mprob.t))
    for idx, (f, g) in enumerate(mprob.objectives):
        den = g.eval_many(pts)
        feasible &= den > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            vals[:, idx] = f.eval_many(pts) / den
    return pts, feasible, vals


def efficiency_audit(mprob: MultiFsippProblem, u_star, grid_size: int = 200,
                     box=None, feas_margin: float = 1e-4,
                     tol: float = 1e-6) -> bool:
    """Search a grid over ``box`` for a feasible point dominating u_star.

    Returns False iff some grid point that is feasible with margin at
    least ``feas_margin`` (guarding against the finite y-sweep) improves
    every component within ``tol`` and at least one strictly beyond it.
    True means the falsification attempt found nothing -- evidence, not
    proof, of efficiency.
    """
    if box is None:
        raise ValueError("a bounding box (one (lo, hi) pair per variable) "
                         "is required")
    pts, feasible, vals = image_grid(mprob, box, grid_size, feas_margin)
    star = mprob.objective_vector(u_star)
    cand = feasible & np.all(vals <= star + tol, axis=1) \
        & np.any(vals < star - tol, axis=1)
    return not bool(np.any(cand))
