"""Data model for linear semidefinite programs in equality form.

A problem is

    minimize    <c, x>
    subject to  A x = b,   x in K,

where x is the concatenation of scalarized block variables and K is a
product of cones:

* ``PsdBlock(s)``  -- an s-by-s symmetric PSD matrix.  Its scalarization is
  the lower triangle in row-major order: (0,0), (1,0), (1,1), (2,0), ...
  A linear functional with coefficient ``a`` on scalar slot (i,j), i > j,
  means ``a * X[i, j]`` counted once (X is symmetric, the two mirror
  entries are a single variable).
* ``NonnegBlock(r)`` -- a vector of r nonnegative scalars.
* ``FreeBlock(t)``   -- a vector of t unconstrained scalars.

Constraints and the objective are stored over this common scalar indexing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class PsdBlock:
    dim: int

    @property
    def scalar_size(self) -> int:
        return self.dim * (self.dim + 1) // 2


@dataclass(frozen=True)
class NonnegBlock:
    dim: int

    @property
    def scalar_size(self) -> int:
        return self.dim


@dataclass(frozen=True)
class FreeBlock:
    dim: int

    @property
    def scalar_size(self) -> int:
        return self.dim


Block = PsdBlock | NonnegBlock | FreeBlock


def tri_indices(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column index arrays of the lower triangle in row-major order."""
    i, j = np.tril_indices(dim)
    # np.tril_indices is already row-major over rows: (0,0),(1,0),(1,1),...
    return i, j


def tri_index(i: int, j: int) -> int:
    """Scalar slot of entry (i, j), i >= j, within one PSD block."""
    if j > i:
        i, j = j, i
    return i * (i + 1) // 2 + j


class SdpProblem:
    """Immutable-ish container: blocks, objective vector, equality rows."""

    def __init__(self, blocks, objective, a_rows, b):
        self.blocks: list[Block] = list(blocks)
        self.num_scalars = sum(bl.scalar_size for bl in self.blocks)
        c = np.asarray(objective, dtype=float).ravel()
        if c.shape != (self.num_scalars,):
            raise ValueError(
                f"objective length {c.size} != scalar count {self.num_scalars}"
            )
        self.objective = c
        if sp.issparse(a_rows):
            A = a_rows.tocsr().astype(float)
        else:
            A = sp.csr_matrix(np.atleast_2d(np.asarray(a_rows, dtype=float)))
        if A.shape[1] != self.num_scalars and A.shape[0] > 0:
            raise ValueError(
                f"constraint width {A.shape[1]} != scalar count {self.num_scalars}"
            )
        self.A = A
        self.b = np.asarray(b, dtype=float).ravel()
        if self.b.shape[0] != A.shape[0]:
            raise ValueError("rhs length != number of constraint rows")

    # -- layout helpers ---------------------------------------------------

    def block_slices(self) -> list[slice]:
        out, off = [], 0
        for bl in self.blocks:
            out.append(slice(off, off + bl.scalar_size))
            off += bl.scalar_size
        return out

    def unscalarize(self, x: np.ndarray) -> list[np.ndarray]:
        """Split a scalar vector into per-block values (PSD -> symmetric matrix)."""
        vals = []
        for bl, sl in zip(self.blocks, self.block_slices()):
            seg = np.asarray(x[sl], dtype=float)
            if isinstance(bl, PsdBlock):
                m = np.zeros((bl.dim, bl.dim))
                ti, tj = tri_indices(bl.dim)
                m[ti, tj] = seg
                m[tj, ti] = seg
                vals.append(m)
            else:
                vals.append(seg)
        return vals

    def scalarize(self, block_values) -> np.ndarray:
        """Inverse of :meth:`unscalarize`."""
        segs = []
        for bl, val in zip(self.blocks, block_values):
            v = np.asarray(val, dtype=float)
            if isinstance(bl, PsdBlock):
                v = 0.5 * (v + v.T)
                ti, tj = tri_indices(bl.dim)
                segs.append(v[ti, tj])
            else:
                segs.append(v.ravel())
        return np.concatenate(segs) if segs else np.zeros(0)

    def functional_as_matrices(self, coeffs: np.ndarray) -> list[np.ndarray]:
        """Represent a scalar functional as true symmetric block matrices.

        For a PSD block, coefficient a on off-diagonal slot (i,j) becomes
        matrix entries a/2 at (i,j) and (j,i), so that <F, X> equals the
        counted-once functional value.
        """
        out = []
        for bl, sl in zip(self.blocks, self.block_slices()):
            seg = np.asarray(coeffs[sl], dtype=float)
            if isinstance(bl, PsdBlock):
                m = np.zeros((bl.dim, bl.dim))
                ti, tj = tri_indices(bl.dim)
                off = ti != tj
                m[ti, tj] = np.where(off, 0.5 * seg, seg)
                m[tj, ti] = m[ti, tj]
                out.append(m)
            else:
                out.append(seg)
        return out


@dataclass
class SdpSolution:
    status: str  # Optimal | PrimalInfeasible | DualInfeasible | NumericalTrouble | IterLimit
    primal_value: float
    dual_value: float
    primal_point: list = field(default_factory=list)  # per-block values
    dual_point: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual_slack: list = field(default_factory=list)  # per-block values
    iterations: int = 0
    residuals: dict = field(default_factory=dict)  # primal / dual / gap


def check_solution(prob: SdpProblem, sol: SdpSolution) -> dict:
    """Recompute residuals from the returned points, independent of the solver.

    Returns raw (unnormalized) measures:
      primal      -- inf-norm of A x - b
      dual        -- worst cone violation of the dual slack c - A^T lam
      gap         -- |<c, x> - <b, lam>|
      primal_cone -- worst cone violation of x
    """
    x = prob.scalarize(sol.primal_point)
    lam = np.asarray(sol.dual_point, dtype=float)
    r_eq = prob.A @ x - prob.b
    primal = float(np.max(np.abs(r_eq))) if r_eq.size else 0.0

    def cone_violation(coeffs: np.ndarray) -> float:
        worst = 0.0
        for bl, val in zip(prob.blocks, prob.functional_as_matrices(coeffs)):
            if isinstance(bl, PsdBlock):
                w = float(max(0.0, -np.linalg.eigvalsh(val)[0])) if bl.dim else 0.0
            elif isinstance(bl, NonnegBlock):
                w = float(max(0.0, -val.min())) if bl.dim else 0.0
            else:  # FreeBlock: primal side unconstrained, dual slack must vanish
                w = float(np.max(np.abs(val))) if bl.dim else 0.0
            worst = max(worst, w)
        return worst

    # primal cone violation (Free blocks are unconstrained)
    worst_x = 0.0
    for bl, val in zip(prob.blocks, sol.primal_point):
        if isinstance(bl, PsdBlock):
            w = float(max(0.0, -np.linalg.eigvalsh(np.asarray(val))[0]))
        elif isinstance(bl, NonnegBlock):
            w = float(max(0.0, -np.min(val))) if bl.dim else 0.0
        else:
            w = 0.0
        worst_x = max(worst_x, w)

    slack = prob.objective - prob.A.T @ lam
    return {
        "primal": primal,
        "dual": cone_violation(slack),
        "gap": float(abs(prob.objective @ x - prob.b @ lam)),
        "primal_cone": worst_x,
    }
