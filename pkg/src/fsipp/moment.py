"""Moment and sum-of-squares machinery.

Monomial bases, truncated moment functionals with their moment and
localizing matrices, cone descriptions for the reformulations, and the
compilers that turn cone membership (Gram side) or dual-cone membership
(moment side) into blocks and equality rows of an SDP.

Moment-side variables use a *canonical entry* embedding: the values of a
truncated functional live inside its own moment matrix block.  Each
monomial of degree <= 2k owns one designated entry of the order-k moment
matrix; every other entry that must carry the same value is tied to the
designated one by an equality row.  This avoids free blocks entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly import Polynomial, count_monomials, monomials_up_to
from .sdp import LinExpr, SdpBuilder

# --------------------------------------------------------------------------
# bases and functionals
# --------------------------------------------------------------------------


def _add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


class MonomialBasis:
    """All monomials of degree <= max_degree in graded-lex order."""

    __slots__ = ("nvars", "max_degree", "monomials", "index")

    def __init__(self, nvars: int, max_degree: int):
        self.nvars = nvars
        self.max_degree = max_degree
        self.monomials = monomials_up_to(nvars, max_degree)
        self.index = {m: i for i, m in enumerate(self.monomials)}

    @property
    def size(self) -> int:
        return len(self.monomials)

    def __len__(self) -> int:
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def index_of(self, mono: tuple) -> int:
        return self.index[mono]


class MomentFunctional:
    """Truncated linear functional on R[x]_{2k}: monomial -> value."""

    __slots__ = ("nvars", "order", "values")

    def __init__(self, nvars: int, order: int, values: dict):
        self.nvars = nvars
        self.order = order
        self.values = {tuple(m): float(v) for m, v in values.items()}
        for m in self.values:
            if len(m) != nvars or sum(m) > 2 * order:
                raise ValueError(f"monomial {m} outside N^{nvars}_{2 * order}")

    @classmethod
    def from_atoms(cls, nvars: int, order: int, atoms) -> "MomentFunctional":
        """Moments of the atomic measure sum_j w_j * delta(u_j)."""
        vals = {}
        for mono in monomials_up_to(nvars, 2 * order):
            acc = 0.0
            for point, weight in atoms:
                term = weight
                for e, c in zip(mono, point):
                    term *= float(c) ** e
                acc += term
            vals[mono] = acc
        return cls(nvars, order, vals)

    @classmethod
    def from_point(cls, nvars: int, order: int, point) -> "MomentFunctional":
        return cls.from_atoms(nvars, order, [(tuple(point), 1.0)])

    def value(self, mono: tuple) -> float:
        return self.values.get(tuple(mono), 0.0)

    def mass(self) -> float:
        return self.value((0,) * self.nvars)

    def apply(self, poly: Polynomial) -> float:
        if poly.nvars != self.nvars:
            raise ValueError("variable count mismatch")
        if poly.degree > 2 * self.order:
            raise ValueError(
                f"degree {poly.degree} exceeds functional order bound {2 * self.order}")
        return sum(c * self.value(m) for m, c in poly.terms.items())

    def point(self) -> np.ndarray:
        """The normalized first-order vector (value on x_i over mass)."""
        m = self.mass()
        out = np.zeros(self.nvars)
        for i in range(self.nvars):
            e = tuple(1 if j == i else 0 for j in range(self.nvars))
            out[i] = self.value(e) / m
        return out


def moment_matrix(L: MomentFunctional, k: int) -> np.ndarray:
    """Matrix with entry (alpha, beta) = L(x^(alpha+beta)), rows N^m_k."""
    if k > L.order:
        raise ValueError(f"moment matrix order {k} exceeds functional order {L.order}")
    basis = MonomialBasis(L.nvars, k)
    M = np.empty((basis.size, basis.size))
    for i, a in enumerate(basis.monomials):
        for j in range(i + 1):
            v = L.value(_add(a, basis.monomials[j]))
            M[i, j] = M[j, i] = v
    return M


def localizing_matrix(L: MomentFunctional, q: Polynomial, k: int) -> np.ndarray:
    """Matrix with entry (alpha, beta) = L(q * x^(alpha+beta)).

    Rows and columns are indexed by N^m_{k - ceil(deg q / 2)}.
    """
    if q.is_zero():
        raise ValueError("localizing polynomial must be nonzero")
    if k > L.order:
        raise ValueError(f"localizing order {k} exceeds functional order {L.order}")
    half = (int(q.degree) + 1) // 2
    basis = MonomialBasis(L.nvars, k - half)
    M = np.empty((basis.size, basis.size))
    for i, a in enumerate(basis.monomials):
        for j in range(i + 1):
            prod = _add(a, basis.monomials[j])
            v = sum(c * L.value(_add(prod, d)) for d, c in q.terms.items())
            M[i, j] = M[j, i] = v
    return M


# --------------------------------------------------------------------------
# cone descriptions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SosBounded:
    """Sums of squares intersected with polynomials of degree <= degree."""

    degree: int  # even

    def member_degree_bound(self) -> int:
        return self.degree

    def gram_structure(self, nvars: int):
        return [(Polynomial.constant(nvars, 1.0), self.degree // 2)]

    def scalar_multipliers(self, nvars: int):
        return []

    def dual_order(self) -> int:
        return self.degree // 2

    def dual_generators(self, nvars: int):
        return []


@dataclass(frozen=True)
class IntervalUnivariate:
    """theta0 + theta1*(1-y^2) with deg theta0 <= cap, deg theta1*(1-y^2) <= cap.

    One variable; exact for polynomials nonnegative on [-1, 1] when cap
    covers their degree (even cap).
    """

    cap: int  # even

    def member_degree_bound(self) -> int:
        return self.cap

    def _weight(self) -> Polynomial:
        return Polynomial(1, {(0,): 1.0, (2,): -1.0})

    def gram_structure(self, nvars: int):
        if nvars != 1:
            raise ValueError("interval cone is univariate")
        out = [(Polynomial.constant(1, 1.0), self.cap // 2)]
        if self.cap >= 2:
            out.append((self._weight(), (self.cap - 2) // 2))
        return out

    def scalar_multipliers(self, nvars: int):
        return []

    def dual_order(self) -> int:
        return self.cap // 2

    def dual_generators(self, nvars: int):
        return [self._weight()] if self.cap >= 2 else []


@dataclass(frozen=True)
class SLemma:
    """theta + lam*phi with theta SOS of degree <= 2 and scalar lam >= 0."""

    phi: Polynomial

    def member_degree_bound(self) -> int:
        return 2

    def gram_structure(self, nvars: int):
        return [(Polynomial.constant(nvars, 1.0), 1)]

    def scalar_multipliers(self, nvars: int):
        return [self.phi]

    def dual_order(self) -> int:
        return 1

    def dual_generators(self, nvars: int):
        return [self.phi]


@dataclass(frozen=True)
class QModule:
    """Truncated quadratic module: sigma_0 + sum_i sigma_i q_i, degree <= 2k."""

    generators: tuple
    order: int  # k

    def member_degree_bound(self) -> int:
        return 2 * self.order

    def gram_structure(self, nvars: int):
        out = [(Polynomial.constant(nvars, 1.0), self.order)]
        for q in self.generators:
            half = (int(q.degree) + 1) // 2
            if self.order - half >= 0:
                out.append((q, self.order - half))
        return out

    def scalar_multipliers(self, nvars: int):
        return []

    def dual_order(self) -> int:
        return self.order

    def dual_generators(self, nvars: int):
        return list(self.generators)


ConeSpec = SosBounded | IntervalUnivariate | SLemma | QModule


# --------------------------------------------------------------------------
# Gram side: cone membership as SDP blocks
# --------------------------------------------------------------------------


def _as_affine(target, nvars: int) -> dict:
    """Normalize a Polynomial or {monomial: LinExpr} map to the latter."""
    if isinstance(target, Polynomial):
        if target.nvars != nvars:
            raise ValueError("variable count mismatch")
        return {m: LinExpr.constant(c) for m, c in target.terms.items()}
    return dict(target)


def sos_membership_blocks(builder: SdpBuilder, target, cone: ConeSpec,
                          nvars: int, label: str = "",
                          margin: LinExpr | None = None) -> dict:
    """Emit blocks and rows forcing ``target`` into ``cone``.

    ``target`` is a Polynomial or a map monomial -> LinExpr (affine in other
    SDP variables).  With ``margin`` = t, the identity becomes
    target = gram(+ t on the leading Gram diagonal) + ..., i.e. the leading
    Gram matrix is shifted to G - t*I; maximizing t measures how deep the
    target sits inside the cone.
    """
    aff = _as_affine(target, nvars)
    bound = cone.member_degree_bound()
    for mono in aff:
        if sum(mono) > bound:
            raise ValueError(
                f"target degree {sum(mono)} exceeds cone bound {bound}")
    rows: dict[tuple, LinExpr] = {m: LinExpr() for m in monomials_up_to(nvars, bound)}

    gram_handles = []
    for gi, (gen, gdeg) in enumerate(cone.gram_structure(nvars)):
        basis = monomials_up_to(nvars, gdeg)
        h = builder.psd_block(len(basis), f"{label}gram{gi}")
        gram_handles.append(h)
        for j, bj in enumerate(basis):
            for i in range(j, len(basis)):
                prod = _add(basis[i], bj)
                w = 1.0 if i == j else 2.0
                idx = h.entry_index(i, j)
                for dexp, dcoef in gen.terms.items():
                    rows[_add(prod, dexp)].add_term(idx, w * dcoef)
        if gi == 0 and margin is not None:
            for bmono in basis:
                sq = _add(bmono, bmono)
                for k, v in margin.coeffs.items():
                    rows[sq].add_term(k, v)

    lam_handle = None
    mults = cone.scalar_multipliers(nvars)
    if mults:
        lam_handle = builder.nonneg_block(len(mults), f"{label}lam")
        for li, mult in enumerate(mults):
            for dexp, dcoef in mult.terms.items():
                rows[dexp].add_term(lam_handle.index(li), dcoef)

    for mono in monomials_up_to(nvars, bound):
        expr = rows[mono] - aff.get(mono, LinExpr())
        if not expr.is_zero():
            builder.add_equality(expr, 0.0, f"{label}match{mono}")
    return {"gram": gram_handles, "lam": lam_handle}


def membership_margin(target: Polynomial, cone: ConeSpec,
                      tol: float = 1e-8, max_iter: int = 100):
    """Maximal t with (target - t * sum of squared Gram basis) in the cone.

    Returns (t_star, solution).  The target is normalized by its largest
    coefficient magnitude first, so t_star is scale-free; membership holds
    iff t_star >= 0 up to solver accuracy.
    """
    from .sdp import solve

    scale = max((abs(c) for c in target.terms.values()), default=0.0)
    if scale > 0:
        target = target.scale(1.0 / scale)
    builder = SdpBuilder()
    t = builder.free_block(1, "margin")
    sos_membership_blocks(builder, target, cone, target.nvars,
                          margin=t.entry(0))
    builder.set_objective(t.entry(0, -1.0))  # maximize t
    sol = solve(builder.build(), tol=tol, max_iter=max_iter)
    if sol.status == "Optimal":
        return -sol.primal_value, sol
    if sol.status == "PrimalInfeasible":  # cannot happen for genuine targets
        return float("-inf"), sol
    return float("nan"), sol


def is_member(target: Polynomial, cone: ConeSpec, threshold: float = 1e-7) -> bool:
    """Decide cone membership by the sign of the feasibility margin."""
    t_star, sol = membership_margin(target, cone)
    if not np.isfinite(t_star):
        from .errors import NumericalTroubleError

        if t_star == float("-inf"):
            return False
        raise NumericalTroubleError(
            f"membership solve ended with status {sol.status}")
    return t_star >= -threshold


# --------------------------------------------------------------------------
# moment side: dual-cone membership as SDP blocks
# --------------------------------------------------------------------------


class MomentVarMap:
    """A truncated moment functional embedded in SDP variables.

    The order-k moment matrix is one PSD block; entry (i, j) carries
    L(b_i * b_j).  Each monomial of N^m_{2k} owns a canonical entry; all
    aliases are tied to it with equality rows at construction.
    """

    def __init__(self, builder: SdpBuilder, nvars: int, order: int,
                 label: str = "L"):
        self.builder = builder
        self.nvars = nvars
        self.order = order
        self.basis = MonomialBasis(nvars, order)
        self.block = builder.psd_block(self.basis.size, f"{label}moment")
        self.canon: dict[tuple, tuple[int, int]] = {}
        mons = self.basis.monomials
        for j in range(len(mons)):
            for i in range(j, len(mons)):
                mono = _add(mons[i], mons[j])
                if mono in self.canon:
                    ci, cj = self.canon[mono]
                    if (ci, cj) != (i, j):
                        builder.add_equality(
                            self.block.entry(i, j) - self.block.entry(ci, cj),
                            0.0, f"{label}alias{mono}")
                else:
                    self.canon[mono] = (i, j)

    def lin(self, mono: tuple) -> LinExpr:
        """The SDP variable carrying L(x^mono)."""
        i, j = self.canon[tuple(mono)]
        return self.block.entry(i, j)

    def lin_poly(self, poly: Polynomial) -> LinExpr:
        """Affine expression for L(poly)."""
        expr = LinExpr()
        for m, c in poly.terms.items():
            i, j = self.canon[m]
            expr.add_term(self.block.entry_index(i, j), c)
        return expr

    def add_localizing(self, q: Polynomial, label: str = "loc"):
        """A PSD block pinned to the localizing matrix of q, rows
        N^m_{order - ceil(deg q / 2)}."""
        half = (int(q.degree) + 1) // 2
        rows = MonomialBasis(self.nvars, self.order - half)
        h = self.builder.psd_block(rows.size, label)
        for j, bj in enumerate(rows.monomials):
            for i in range(j, rows.size):
                prod = _add(rows.monomials[i], bj)
                expr = h.entry(i, j)
                for dexp, dcoef in q.terms.items():
                    ci, cj = self.canon[_add(prod, dexp)]
                    expr.add_term(self.block.entry_index(ci, cj), -dcoef)
                self.builder.add_equality(expr, 0.0, f"{label}({i},{j})")
        return h

    def read(self, x: np.ndarray) -> MomentFunctional:
        """Recover the functional from a scalarized solution vector."""
        vals = {m: x[self.block.entry_index(i, j)]
                for m, (i, j) in self.canon.items()}
        return MomentFunctional(self.nvars, self.order, vals)

    def read_solution(self, prob, sol) -> MomentFunctional:
        """Recover the functional from a solved problem's block values."""
        return self.read(prob.scalarize(sol.primal_point))


def dual_cone_blocks(builder: SdpBuilder, momvar: MomentVarMap,
                     cone: ConeSpec, label: str = "loc") -> list:
    """Localizing blocks realizing  (momvar functional) in (cone)*."""
    if cone.dual_order() != momvar.order:
        raise ValueError(
            f"moment variable order {momvar.order} != cone dual order {cone.dual_order()}")
    return [momvar.add_localizing(q, f"{label}{i}")
            for i, q in enumerate(cone.dual_generators(momvar.nvars))]


def dual_cone_matrices(L: MomentFunctional, cone: ConeSpec) -> list[np.ndarray]:
    """Numeric moment + localizing matrices whose PSD-ness states L in (cone)*."""
    k = cone.dual_order()
    mats = [moment_matrix(L, k)]
    for q in cone.dual_generators(L.nvars):
        mats.append(localizing_matrix(L, q, k))
    return mats


def poly_image_in_y(L: MomentFunctional, p) -> Polynomial:
    """Apply L to the x-slices: the polynomial y -> L(p(., y))."""
    terms = {}
    for ymono, slice_x in p.slices.items():
        terms[ymono] = L.apply(slice_x)
    return Polynomial(p.n_y, terms)


def poly_image_in_y_sym(momvar: MomentVarMap, p) -> dict:
    """Symbolic version: map y-monomial -> LinExpr over momvar entries."""
    return {ymono: momvar.lin_poly(slice_x)
            for ymono, slice_x in p.slices.items()}
