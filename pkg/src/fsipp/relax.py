"""Fractional programs over a semi-infinite polynomial constraint family.

An instance asks for  min f(x)/g(x)  subject to finitely many polynomial
constraints psi_j(x) <= 0 and a family  p(x, y) <= 0 for all y in a
compact set Y.  Writing C[x] and C[y] for cones of polynomials
nonnegative on a region containing the feasible set and on Y, the value
equals a conic pair: maximize rho with

    f - rho*g + H(p(., y)) + sum_j eta_j psi_j  in  C[x],

over eta >= 0 and H in the dual cone of C[y]; and, dually, minimize L(f)
over functionals L with L(g) = 1, L(psi_j) <= 0, L in the dual of C[x],
and  y -> -L(p(., y))  in C[y].  This module holds the instance model,
the taxonomy that picks the cones, and the compilers producing the two
semidefinite programs for a given relaxation order, plus the driver that
walks orders until a certificate is found.

Cone choices by tag: with d = max(deg f, deg g, deg psi_j, deg_x p),

* Case1 -- one parameter, Y = [-1, 1], all data s.o.s-convex in x:
  C[x] = sums of squares of degree <= 2d, C[y] = weighted interval cone
  theta0 + theta1*(1 - y^2).  A single exact solve.
* Case2 -- Y a quadratic sublevel set with interior, p quadratic in y,
  data s.o.s-convex: same C[x]; C[y] = theta + lam*phi (S-procedure).
* Case3/Case4 -- same index sets but merely convex data; C[x] becomes
  the truncated quadratic module of {R^2 - |x|^2} at order k, iterated
  over k with a moment-matrix rank test as stopping rule.
* General -- Y semialgebraic; C[x] = quadratic module of
  {R^2 - |x|^2, g - g_star}, C[y] = quadratic module of the Y
  generators, both at order k, with a feasibility/stationarity check at
  the recovered point as stopping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .certify import KktReport, certify_point, sos_convexity_check
from .errors import MissingHintError, NumericalTroubleError, OptimumKnownSignal
from .extract import (RankCertificate, extract_atoms, flat_truncation_check,
                      point_from_functional)
from .moment import (IntervalUnivariate, MomentFunctional, MomentVarMap, QModule,
                     SLemma, SosBounded, dual_cone_blocks, membership_margin,
                     poly_image_in_y_sym, sos_membership_blocks)
from .poly import BivariatePoly, Polynomial
from .sdp import LinExpr, SdpBuilder, SdpProblem, solve


def _ceil_half(deg: int) -> int:
    return (int(deg) + 1) // 2


# --------------------------------------------------------------------------
# index set descriptions
# --------------------------------------------------------------------------


class IndexSetDesc:
    """A compact set Y of constraint indices, described semialgebraically."""

    @property
    def n_y(self) -> int:
        raise NotImplementedError

    def as_generators(self) -> list[Polynomial]:
        """Polynomials q with Y = {y : q(y) >= 0 for all q}."""
        raise NotImplementedError

    def representative_point(self):
        """Some point of Y, or None if none could be located."""
        raise NotImplementedError

    def sample_points(self, count: int) -> np.ndarray:
        """A deterministic spread of points of Y, shape (<=count, n_y)."""
        raise NotImplementedError


@dataclass(frozen=True)
class Interval(IndexSetDesc):
    """Y = [-1, 1] in a single parameter."""

    @property
    def n_y(self) -> int:
        return 1

    def as_generators(self) -> list[Polynomial]:
        return [Polynomial(1, {(0,): 1.0, (2,): -1.0})]

    def representative_point(self):
        return np.zeros(1)

    def sample_points(self, count: int) -> np.ndarray:
        return np.linspace(-1.0, 1.0, count).reshape(-1, 1)


@dataclass(frozen=True)
class QuadraticSet(IndexSetDesc):
    """Y = {y : phi(y) >= 0} for a quadratic phi positive somewhere."""

    phi: Polynomial
    interior_point: tuple

    def __post_init__(self):
        object.__setattr__(self, "interior_point",
                           tuple(float(c) for c in self.interior_point))
        if self.phi.degree != 2:
            raise ValueError(f"defining polynomial has degree {self.phi.degree}, "
                             "expected 2")
        if len(self.interior_point) != self.phi.nvars:
            raise ValueError("interior point has wrong dimension")
        if self.phi(self.interior_point) <= 0:
            raise ValueError("the given point is not interior to the set")

    @property
    def n_y(self) -> int:
        return self.phi.nvars

    def as_generators(self) -> list[Polynomial]:
        return [self.phi]

    def representative_point(self):
        return np.asarray(self.interior_point, dtype=float)

    def sample_points(self, count: int) -> np.ndarray:
        """Points spread along rays from the interior point to the boundary."""
        y0 = np.asarray(self.interior_point, dtype=float)
        n = self.n_y
        fractions = (0.35, 0.7, 0.95, 1.0)
        ndirs = max(4, -(-count // (2 * len(fractions))))
        if n == 2:
            angles = 2.0 * np.pi * np.arange(ndirs) / ndirs
            dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        else:
            rng = np.random.default_rng(2025)
            dirs = rng.standard_normal((ndirs, n))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = [y0]
        for d in dirs:
            # phi along the ray is quadratic; recover it from three samples
            f0 = self.phi(y0)
            fp = self.phi(y0 + d)
            fm = self.phi(y0 - d)
            a = 0.5 * (fp + fm) - f0
            b = 0.5 * (fp - fm)
            for sgn in (1.0, -1.0):
                if a < -1e-12:
                    disc = b * b - 4.0 * a * f0
                    t_edge = (-b - sgn * math.sqrt(max(disc, 0.0))) / (2.0 * a)
                else:  # flat direction: cap the ray
                    t_edge = sgn * 10.0
                for frac in fractions:
                    pts.append(y0 + (frac * t_edge) * d)
                    if len(pts) >= count:
                        return np.array(pts)
        return np.array(pts[:count])


@dataclass(frozen=True)
class Semialgebraic(IndexSetDesc):
    """Y = {y : q_1(y) >= 0, ..., q_kappa(y) >= 0}.

    ``archimedean_hint``, when given, is a bound M such that
    M - |y|^2 >= 0 on Y; the redundant ball constraint is appended to the
    generator list wherever a quadratic module over Y is formed.
    """

    generators: tuple
    archimedean_hint: float | None = None

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise ValueError("at least one generator is required")
        n = gens[0].nvars
        if any(q.nvars != n for q in gens):
            raise ValueError("generators must share their variables")
        if self.archimedean_hint is not None and self.archimedean_hint <= 0:
            raise ValueError("the ball bound must be positive")

    @property
    def n_y(self) -> int:
        return self.generators[0].nvars

    def as_generators(self) -> list[Polynomial]:
        gens = list(self.generators)
        if self.archimedean_hint is not None:
            n = self.n_y
            ball = {(0,) * n: float(self.archimedean_hint)}
            for i in range(n):
                ball[tuple(2 if j == i else 0 for j in range(n))] = -1.0
            gens.append(Polynomial(n, ball))
        return gens

    def _grid(self, per_axis: int) -> np.ndarray:
        bound = math.sqrt(self.archimedean_hint) if self.archimedean_hint else 1.0
        axes = [np.linspace(-bound, bound, per_axis)] * self.n_y
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def representative_point(self):
        pts = self._grid(41)
        slack = np.min(np.column_stack([q.eval_many(pts)
                                        for q in self.generators]), axis=1)
        i = int(np.argmax(slack))
        return pts[i] if slack[i] >= 0 else None

    def sample_points(self, count: int) -> np.ndarray:
        per_axis = max(3, int(math.ceil((4 * count) ** (1.0 / self.n_y))))
        pts = self._grid(per_axis)
        mask = np.ones(len(pts), dtype=bool)
        for q in self.generators:
            mask &= q.eval_many(pts) >= 0
        inside = pts[mask]
        if len(inside) > count:
            stride = np.linspace(0, len(inside) - 1, count).astype(int)
            inside = inside[stride]
        return inside


# --------------------------------------------------------------------------
# instance model and options
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FsippProblem:
    """min f/g  s.t.  psi_j <= 0  and  p(., y) <= 0 for all y in the index set."""

    f: Polynomial
    g: Polynomial
    psis: tuple
    p: BivariatePoly
    index_set: IndexSetDesc
    d: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "psis", tuple(self.psis))
        m = self.f.nvars
        if self.g.nvars != m or any(psi.nvars != m for psi in self.psis):
            raise ValueError("objective and constraints must share x-variables")
        if self.p.n_x != m:
            raise ValueError(f"constraint family has {self.p.n_x} x-variables, "
                             f"expected {m}")
        if self.p.n_y != self.index_set.n_y:
            raise ValueError(f"constraint family has {self.p.n_y} index variables "
                             f"but the index set has {self.index_set.n_y}")
        degs = [self.f.degree, self.g.degree, self.p.d_x]
        degs += [psi.degree for psi in self.psis]
        d = max(int(v) for v in degs if v != float("-inf"))
        object.__setattr__(self, "d", max(d, 1))

    @property
    def m(self) -> int:
        return self.f.nvars

    @property
    def s(self) -> int:
        return len(self.psis)

    def ratio(self, u) -> float:
        """The objective value f(u)/g(u)."""
        return self.f(u) / self.g(u)


class CaseTag(Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"
    CASE4 = "Case4"
    GENERAL = "General"


@dataclass(frozen=True)
class RelaxOptions:
    """Knobs for one relaxation run.

    R and g_star feed the ball and denominator generators of the
    quadratic-module cones (unused by Case1/Case2).  k is the target
    relaxation order.  tau is the feasibility/stationarity tolerance of
    the stop criterion, rank_tol the relative rank threshold of the
    moment-matrix test, sdp_tol the interior-point accuracy.
    """

    R: float | None = None
    g_star: float | None = None
    k: int | None = None
    case_override: CaseTag | None = None
    tau: float = 1e-3
    rank_tol: float = 1e-6
    sdp_tol: float = 1e-8

    def __post_init__(self):
        if self.R is not None and self.R <= 0:
            raise ValueError("R must be positive")
        if self.g_star is not None and self.g_star <= 0:
            raise ValueError("g_star must be positive")
        if self.k is not None and self.k < 1:
            raise ValueError("the relaxation order must be at least 1")


def check_tag(prob: FsippProblem, tag: CaseTag) -> None:
    """Validate that the tag's structural preconditions hold for the instance."""
    if tag in (CaseTag.CASE1, CaseTag.CASE3):
        if not isinstance(prob.index_set, Interval):
            raise ValueError(f"{tag.value} needs the interval index set")
    elif tag in (CaseTag.CASE2, CaseTag.CASE4):
        if not isinstance(prob.index_set, QuadraticSet):
            raise ValueError(f"{tag.value} needs a quadratic index set")
        if prob.p.d_y > 2:
            raise ValueError(f"{tag.value} needs the constraint family quadratic "
                             f"in the index variables (degree {prob.p.d_y})")


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------


def _embed(poly: Polynomial, total: int, offset: int) -> Polynomial:
    """Re-index a polynomial into a wider variable tuple at the given slot."""
    terms = {}
    for exp, c in poly.terms.items():
        wide = [0] * total
        wide[offset:offset + poly.nvars] = exp
        terms[tuple(wide)] = c
    return Polynomial(total, terms)


def _hessian_form_terms(prob: FsippProblem) -> dict:
    """Terms of z^T (d^2 p / dx^2) z in variables (x, y, z)."""
    joint = prob.p.to_joint()
    m, n = prob.m, prob.p.n_y
    total = m + n + m
    terms: dict[tuple, float] = {}
    for i in range(m):
        row = joint.partial(i)
        for j in range(i, m):
            entry = row.partial(j)
            w = 1.0 if i == j else 2.0
            for exp, c in entry.terms.items():
                zpart = [0] * m
                zpart[i] += 1
                zpart[j] += 1
                wide = exp + tuple(zpart)
                terms[wide] = terms.get(wide, 0.0) + w * c
    return {e: c for e, c in terms.items() if c != 0.0}


def _p_sos_convex(prob: FsippProblem) -> bool:
    """Is p(., y) s.o.s-convex in x for every y in the index set?

    Sound path first: the Hessian form is tested as a member of the
    quadratic module generated by the index-set constraints (a certificate
    valid uniformly in y).  If that is inconclusive, fall back to checking
    25 sampled slices; any failure is treated as a refusal.
    """
    m, n = prob.m, prob.p.n_y
    terms = _hessian_form_terms(prob)
    if not terms:
        return True
    if all(all(e == 0 for e in exp[m:m + n]) for exp in terms):
        # Hessian does not involve y: one slice decides
        rep = prob.index_set.representative_point()
        if rep is None:
            rep = np.zeros(n)
        return sos_convexity_check(prob.p.substitute_y(rep))

    total = m + n + m
    target = Polynomial(total, terms)
    gens = tuple(_embed(q, total, m) for q in prob.index_set.as_generators())
    cone = QModule(gens, order=_ceil_half(int(target.degree)))
    try:
        t_star, _ = membership_margin(target, cone)
        if np.isfinite(t_star) and t_star >= -1e-7:
            return True
    except Exception:
        pass
    samples = prob.index_set.sample_points(25)
    if len(samples) == 0:
        return False
    try:
        return all(sos_convexity_check(prob.p.substitute_y(y)) for y in samples)
    except NumericalTroubleError:
        return False


def convexity_findings(prob: FsippProblem) -> list[tuple[str, bool]]:
    """Sum-of-squares-convexity verdict for each datum, in report order:
    f, -g, each constraint, then the family p (uniformly over the index
    set)."""
    out = [("f", sos_convexity_check(prob.f)),
           ("-g", sos_convexity_check(prob.g.scale(-1.0)))]
    for j, psi in enumerate(prob.psis):
        out.append((f"psi[{j}]", sos_convexity_check(psi)))
    out.append(("p", _p_sos_convex(prob)))
    return out


def classify_case(prob: FsippProblem,
                  case_override: CaseTag | None = None) -> CaseTag:
    """The most specific tag whose checkable conditions pass.

    Case3/Case4 are only reachable through ``case_override`` (their extra
    hypothesis concerns an unknown minimizer); anything unverified falls
    back to General.
    """
    if case_override is not None:
        check_tag(prob, case_override)
        return case_override
    if isinstance(prob.index_set, Interval):
        shape = CaseTag.CASE1
    elif isinstance(prob.index_set, QuadraticSet) and prob.p.d_y <= 2:
        shape = CaseTag.CASE2
    else:
        return CaseTag.GENERAL
    if all(ok for _, ok in convexity_findings(prob)):
        return shape
    return CaseTag.GENERAL


# --------------------------------------------------------------------------
# ball radius and denominator floor
# --------------------------------------------------------------------------


def _round_down_sig(v: float) -> float:
    """Largest a*10^e <= v with a single leading digit (guarding roundoff)."""
    v = float(v) * (1.0 + 1e-12)
    e = math.floor(math.log10(v))
    return math.floor(v / 10.0 ** e) * 10.0 ** e


def _aux_min(prob: FsippProblem, numerator: Polynomial, bound) -> float:
    """Minimize ``numerator`` over the feasible set (denominator one)."""
    one = Polynomial.constant(prob.m, 1.0)
    aux = FsippProblem(numerator, one, prob.psis, prob.p, prob.index_set)
    tag = classify_case(aux)
    if tag in (CaseTag.CASE1, CaseTag.CASE2):
        opts = RelaxOptions()
        sdp, vm = build_dual_sdp(aux, opts, tag)
        sol = solve(sdp)
        if sol.status != "Optimal":
            raise NumericalTroubleError(
                f"auxiliary minimization ended with status {sol.status}")
        return float(sol.primal_value)
    if bound is None:
        raise MissingHintError(
            "a bound on the feasible region is needed for the auxiliary solve")
    opts = RelaxOptions(R=1.5 * float(bound), g_star=0.5)
    k0 = max(_ceil_half(aux.d), 1)
    best = -np.inf
    for k in (k0, k0 + 1):
        sdp, vm = build_dual_sdp(aux, RelaxOptions(R=opts.R, g_star=opts.g_star,
                                                   k=k), tag)
        sol = solve(sdp)
        if sol.status == "Optimal":
            best = max(best, float(sol.primal_value))
    if not np.isfinite(best):
        raise NumericalTroubleError("auxiliary minimization did not converge")
    return best


def choose_R_gstar(prob: FsippProblem, hints: dict | None = None):
    """Pick the ball radius R and denominator floor g_star.

    ``hints`` may carry ``bound`` (a radius enclosing the feasible set or
    its minimizers; R = 1.5 * bound) and ``feasible_point`` (a point u' of
    the feasible set, needed when g is neither constant nor affine).

    Recipes: g constant c gives g_star = c/2; g affine gives half the
    minimum of g over the feasible set; otherwise g_star is a rounded-down
    positive number below (g(u')/f(u')) * min f.  A feasible point with
    f(u') = 0 pins the optimal value at zero and raises
    :class:`OptimumKnownSignal` instead of returning.
    """
    hints = dict(hints or {})
    bound = hints.get("bound")
    u_prime = hints.get("feasible_point")
    if bound is None:
        raise MissingHintError("no bound on the minimizers was supplied")
    R = 1.5 * float(bound)

    g = prob.g
    if g.degree <= 0:
        g_star = g.coefficient((0,) * prob.m) / 2.0
        if g_star <= 0:
            raise ValueError("the denominator must be positive")
        return R, g_star
    if g.degree == 1:
        g_min = _aux_min(prob, g, bound)
        if g_min <= 0:
            raise NumericalTroubleError(
                f"denominator minimum {g_min} is not positive")
        return R, 0.5 * g_min
    if u_prime is None:
        raise MissingHintError(
            "a feasible point is needed when the denominator is nonlinear")
    u_prime = np.asarray(u_prime, dtype=float)
    f_u = prob.f(u_prime)
    if f_u == 0.0:
        raise OptimumKnownSignal(0.0, point=u_prime)
    f_min = _aux_min(prob, prob.f, bound)
    if f_min <= 1e-9:
        raise OptimumKnownSignal(0.0, point=None)
    g_star = _round_down_sig(0.5 * (prob.g(u_prime) / f_u) * f_min)
    return R, g_star


# --------------------------------------------------------------------------
# cone selection shared by both compilers
# --------------------------------------------------------------------------


def _ball_poly(m: int, R: float) -> Polynomial:
    terms = {(0,) * m: float(R) ** 2}
    for i in range(m):
        terms[tuple(2 if j == i else 0 for j in range(m))] = -1.0
    return Polynomial(m, terms)


def _y_cone(prob: FsippProblem, opts: RelaxOptions, tag: CaseTag):
    d_y = max(int(prob.p.d_y), 0)
    if tag in (CaseTag.CASE1, CaseTag.CASE3):
        return IntervalUnivariate(2 * _ceil_half(d_y))
    if tag in (CaseTag.CASE2, CaseTag.CASE4):
        return SLemma(prob.index_set.phi)
    if opts.k is None:
        raise ValueError("the general cones need a relaxation order k")
    gens = tuple(prob.index_set.as_generators())
    cone = QModule(gens, order=opts.k)
    if d_y > cone.member_degree_bound():
        raise ValueError(f"degree overflow: the constraint family has degree "
                         f"{d_y} in the index variables, above the cone bound "
                         f"{cone.member_degree_bound()}")
    return cone


def _x_cone(prob: FsippProblem, opts: RelaxOptions, tag: CaseTag):
    if tag in (CaseTag.CASE1, CaseTag.CASE2):
        return SosBounded(2 * prob.d)
    if opts.k is None or opts.k < _ceil_half(prob.d):
        raise ValueError(f"relaxation order must be at least {_ceil_half(prob.d)}")
    if opts.R is None:
        raise MissingHintError("the quadratic-module cones need the radius R")
    gens = [_ball_poly(prob.m, opts.R)]
    if tag is CaseTag.GENERAL and prob.g.degree >= 1:
        if opts.g_star is None:
            raise MissingHintError("the general cone needs the floor g_star")
        gens.append(prob.g - Polynomial.constant(prob.m, opts.g_star))
    return QModule(tuple(gens), order=opts.k)


# --------------------------------------------------------------------------
# the two compilers
# --------------------------------------------------------------------------


@dataclass
class DualSdpMap:
    """Handles into the moment-side SDP."""

    moment: MomentVarMap
    order: int
    slack: object = None
    localizers: list = field(default_factory=list)
    y_membership: dict = field(default_factory=dict)

    def functional(self, sdp: SdpProblem, sol) -> MomentFunctional:
        return self.moment.read_solution(sdp, sol)

    def point(self, sdp: SdpProblem, sol) -> np.ndarray:
        return self.functional(sdp, sol).point()


def build_dual_sdp(prob: FsippProblem, opts: RelaxOptions, tag: CaseTag):
    """Compile  min L(f) : L(g)=1, L(psi_j)<=0, L in C[x]*, -Lp in C[y].

    Returns (SdpProblem, DualSdpMap).  The moment variables range over
    monomials of degree <= 2d for Case1/Case2 and <= 2k otherwise.
    """
    check_tag(prob, tag)
    cone_x = _x_cone(prob, opts, tag)
    cone_y = _y_cone(prob, opts, tag)
    korder = cone_x.dual_order()

    builder = SdpBuilder()
    mv = MomentVarMap(builder, prob.m, korder, "L")
    vmap = DualSdpMap(moment=mv, order=korder)
    for i, q in enumerate(cone_x.dual_generators(prob.m)):
        vmap.localizers.append(mv.add_localizing(q, f"Lloc{i}"))
    builder.add_equality(mv.lin_poly(prob.g), 1.0, "normalize")
    if prob.psis:
        vmap.slack = builder.nonneg_block(prob.s, "psislack")
        for j, psi in enumerate(prob.psis):
            builder.add_equality(mv.lin_poly(psi) + vmap.slack.entry(j),
                                 0.0, f"psi{j}")
    image = poly_image_in_y_sym(mv, prob.p)
    negated = {mono: expr.scaled(-1.0) for mono, expr in image.items()}
    vmap.y_membership = sos_membership_blocks(builder, negated, cone_y,
                                              prob.p.n_y, label="py")
    builder.set_objective(mv.lin_poly(prob.f))
    return builder.build(), vmap


@dataclass
class PrimalSdpMap:
    """Handles into the certificate-side SDP."""

    rho: object
    h_moments: MomentVarMap
    eta: object = None
    y_localizers: list = field(default_factory=list)
    x_membership: dict = field(default_factory=dict)

    def rho_value(self, sol) -> float:
        return -float(sol.primal_value)

    def eta_values(self, sdp: SdpProblem, sol) -> np.ndarray:
        if self.eta is None:
            return np.zeros(0)
        x = sdp.scalarize(sol.primal_point)
        return np.array([x[self.eta.index(i)] for i in range(self.eta.dim)])

    def h_functional(self, sdp: SdpProblem, sol) -> MomentFunctional:
        return self.h_moments.read_solution(sdp, sol)


def build_primal_sdp(prob: FsippProblem, opts: RelaxOptions, tag: CaseTag):
    """Compile  max rho : f - rho*g + H(p) + sum eta_j psi_j in C[x],
    H in C[y]*, eta >= 0.

    Returns (SdpProblem, PrimalSdpMap); the reported objective of the
    emitted minimization problem is -rho.
    """
    check_tag(prob, tag)
    cone_x = _x_cone(prob, opts, tag)
    cone_y = _y_cone(prob, opts, tag)

    builder = SdpBuilder()
    rho = builder.free_block(1, "rho")
    eta = builder.nonneg_block(prob.s, "eta") if prob.psis else None
    hm = MomentVarMap(builder, prob.p.n_y, cone_y.dual_order(), "H")
    vmap = PrimalSdpMap(rho=rho, h_moments=hm, eta=eta)
    vmap.y_localizers = dual_cone_blocks(builder, hm, cone_y, "Hloc")

    target: dict[tuple, LinExpr] = {}

    def bump(mono: tuple, index: int, coef: float):
        target.setdefault(mono, LinExpr()).add_term(index, coef)

    for mono, c in prob.f.terms.items():
        target.setdefault(mono, LinExpr()).const += c
    for mono, c in prob.g.terms.items():
        bump(mono, rho.index(0), -c)
    for ymono, slice_x in prob.p.slices.items():
        hidx = hm.lin(ymono)
        for mono, c in slice_x.terms.items():
            for k, v in hidx.coeffs.items():
                bump(mono, k, c * v)
    for j, psi in enumerate(prob.psis):
        for mono, c in psi.terms.items():
            bump(mono, eta.index(j), c)

    top = max((sum(mono) for mono in target), default=0)
    if top > cone_x.member_degree_bound():
        raise ValueError(f"degree overflow: certificate target has degree {top}, "
                         f"above the cone bound {cone_x.member_degree_bound()}")
    vmap.x_membership = sos_membership_blocks(builder, target, cone_x,
                                              prob.m, label="lx")
    builder.set_objective(rho.entry(0, -1.0))
    return builder.build(), vmap


# --------------------------------------------------------------------------
# hierarchy driver
# --------------------------------------------------------------------------


@dataclass
class HierarchyRow:
    """One relaxation order's outcome."""

    k: int
    r_primal: float = float("-inf")
    r_dual: float = float("inf")
    dual_functional: MomentFunctional | None = None
    eta: np.ndarray | None = None
    y_moments: MomentFunctional | None = None
    dual_status: str = ""
    primal_status: str = ""
    dual_iterations: int = 0
    primal_iterations: int = 0
    error: str | None = None


@dataclass
class HierarchyTrace:
    """The walk over relaxation orders with its stopping evidence."""

    tag: CaseTag
    rows: list = field(default_factory=list)
    candidate: np.ndarray | None = None
    atoms: list | None = None
    certificate: RankCertificate | None = None
    kkt: KktReport | None = None
    hessian_pd: bool | None = None
    stop_reason: str = "exhausted"

    @property
    def r_dual(self) -> float:
        """Best (lowest finite) moment-side value seen."""
        vals = [row.r_dual for row in self.rows if np.isfinite(row.r_dual)]
        return min(vals) if vals else float("inf")

    @property
    def r_primal(self) -> float:
        vals = [row.r_primal for row in self.rows if np.isfinite(row.r_primal)]
        return max(vals) if vals else float("-inf")


def _solve_order(prob, opts, tag, k):
    """Build and solve both SDPs at one order; never raises."""
    row = HierarchyRow(k=k)
    run = RelaxOptions(R=opts.R, g_star=opts.g_star, k=k,
                       case_override=opts.case_override, tau=opts.tau,
                       rank_tol=opts.rank_tol, sdp_tol=opts.sdp_tol)
    try:
        sdp_d, vmap_d = build_dual_sdp(prob, run, tag)
        sol_d = solve(sdp_d, tol=opts.sdp_tol)
        row.dual_status = sol_d.status
        row.dual_iterations = sol_d.iterations
        if sol_d.status == "Optimal":
            row.r_dual = float(sol_d.primal_value)
            row.dual_functional = vmap_d.functional(sdp_d, sol_d)
    except Exception as exc:  # noqa: BLE001 - recorded, not fatal
        row.error = f"moment side: {exc}"
    try:
        sdp_p, vmap_p = build_primal_sdp(prob, run, tag)
        sol_p = solve(sdp_p, tol=opts.sdp_tol)
        row.primal_status = sol_p.status
        row.primal_iterations = sol_p.iterations
        if sol_p.status == "Optimal":
            row.r_primal = vmap_p.rho_value(sol_p)
            row.eta = vmap_p.eta_values(sdp_p, sol_p)
            row.y_moments = vmap_p.h_functional(sdp_p, sol_p)
        elif sol_p.status == "PrimalInfeasible":
            row.r_primal = float("-inf")
    except Exception as exc:  # noqa: BLE001
        note = f"certificate side: {exc}"
        row.error = f"{row.error}; {note}" if row.error else note
    return row


def _hessian_pd(f: Polynomial, u: np.ndarray) -> bool:
    w = np.linalg.eigvalsh(f.hessian_at(u))
    return bool(w.min() > 0)


def solve_hierarchy(prob: FsippProblem, opts: RelaxOptions,
                    k_range: tuple | None = None) -> HierarchyTrace:
    """Walk relaxation orders, recording values and stopping on a certificate.

    Case1/Case2 need a single solve (their cones are order-free).  For the
    iterated tags, each order k in ``k_range`` (inclusive; default from
    ceil(d/2) to opts.k) is compiled and solved on both sides; the walk
    stops once the moment matrix passes the rank test (Case3/Case4 and
    General) or the recovered point passes feasibility plus stationarity
    (General).  Per-order failures are recorded in the row and the walk
    continues.
    """
    tag = classify_case(prob, opts.case_override)
    trace = HierarchyTrace(tag=tag)
    d_half = max(_ceil_half(prob.d), 1)
    if tag in (CaseTag.CASE1, CaseTag.CASE2):
        orders = [prob.d]
    else:
        if k_range is None:
            lo = d_half
            hi = opts.k if opts.k is not None else d_half + 2
            k_range = (lo, max(lo, hi))
        orders = list(range(k_range[0], k_range[1] + 1))

    for k in orders:
        row = _solve_order(prob, opts, tag, k)
        trace.rows.append(row)
        L = row.dual_functional
        if L is None:
            continue
        try:
            trace.candidate = point_from_functional(L)
        except Exception:
            continue

        cert = flat_truncation_check(L, k=k, k0=1, d_half=d_half,
                                     rel_tol=opts.rank_tol)
        if cert is not None:
            try:
                trace.atoms = extract_atoms(L, cert)
            except NumericalTroubleError:
                cert = None
        if cert is not None:
            trace.certificate = cert
            trace.hessian_pd = _hessian_pd(prob.f, trace.candidate)
        if tag in (CaseTag.CASE1, CaseTag.CASE2):
            trace.stop_reason = "single"
            break
        if cert is not None:
            trace.stop_reason = "rank"
            break
        if tag is CaseTag.GENERAL:
            try:
                trace.kkt = certify_point(trace.candidate, prob, tau=opts.tau,
                                          sdp_tol=opts.sdp_tol)
            except NumericalTroubleError:
                trace.kkt = None
            if trace.kkt is not None and trace.kkt.passes:
                trace.stop_reason = "kkt"
                break
    return trace
