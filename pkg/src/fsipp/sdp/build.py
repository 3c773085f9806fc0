"""Incremental construction of equality-form SDPs.

``SdpBuilder`` hands out block handles whose entries are addressed by
global scalar indices (see :mod:`.model` for the layout), collects sparse
equality rows and an objective as ``LinExpr`` affine expressions, and
finally assembles an :class:`~.model.SdpProblem`.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .model import FreeBlock, NonnegBlock, PsdBlock, SdpProblem, tri_index


class LinExpr:
    """Sparse affine expression  sum_i coeffs[i] * x_i + const."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs=None, const=0.0):
        self.coeffs: dict[int, float] = dict(coeffs) if coeffs else {}
        self.const = float(const)

    @classmethod
    def term(cls, index: int, coef: float = 1.0) -> "LinExpr":
        return cls({index: float(coef)})

    @classmethod
    def constant(cls, value: float) -> "LinExpr":
        return cls(None, value)

    def add_term(self, index: int, coef: float) -> None:
        if coef == 0.0:
            return
        new = self.coeffs.get(index, 0.0) + coef
        if new == 0.0:
            self.coeffs.pop(index, None)
        else:
            self.coeffs[index] = new

    def __iadd__(self, other: "LinExpr") -> "LinExpr":
        for k, v in other.coeffs.items():
            self.add_term(k, v)
        self.const += other.const
        return self

    def __add__(self, other: "LinExpr") -> "LinExpr":
        out = LinExpr(self.coeffs, self.const)
        out += other
        return out

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        out = LinExpr(self.coeffs, self.const)
        for k, v in other.coeffs.items():
            out.add_term(k, -v)
        out.const -= other.const
        return out

    def scaled(self, factor: float) -> "LinExpr":
        if factor == 0.0:
            return LinExpr()
        return LinExpr({k: v * factor for k, v in self.coeffs.items()},
                       self.const * factor)

    def is_zero(self) -> bool:
        return not self.coeffs and self.const == 0.0


class PsdHandle:
    """Addresses the entries of one PSD block."""

    __slots__ = ("offset", "dim", "label")

    def __init__(self, offset: int, dim: int, label: str):
        self.offset = offset
        self.dim = dim
        self.label = label

    def entry_index(self, i: int, j: int) -> int:
        if not (0 <= i < self.dim and 0 <= j < self.dim):
            raise IndexError(f"entry ({i},{j}) outside {self.dim}x{self.dim} block")
        return self.offset + tri_index(i, j)

    def entry(self, i: int, j: int, coef: float = 1.0) -> LinExpr:
        return LinExpr.term(self.entry_index(i, j), coef)

    def value(self, prob: SdpProblem, x: np.ndarray) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i + 1):
                m[i, j] = m[j, i] = x[self.entry_index(i, j)]
        return m


class VecHandle:
    """Addresses the entries of one Nonneg or Free block."""

    __slots__ = ("offset", "dim", "label")

    def __init__(self, offset: int, dim: int, label: str):
        self.offset = offset
        self.dim = dim
        self.label = label

    def index(self, i: int = 0) -> int:
        if not 0 <= i < self.dim:
            raise IndexError(f"entry {i} outside length-{self.dim} block")
        return self.offset + i

    def entry(self, i: int = 0, coef: float = 1.0) -> LinExpr:
        return LinExpr.term(self.index(i), coef)


class SdpBuilder:
    def __init__(self):
        self.blocks = []
        self.handles = []
        self._offset = 0
        self.rows: list[dict[int, float]] = []
        self.rhs: list[float] = []
        self.row_labels: list[str] = []
        self._objective = LinExpr()

    # -- variables --------------------------------------------------------

    def psd_block(self, dim: int, label: str = "") -> PsdHandle:
        h = PsdHandle(self._offset, dim, label)
        self.blocks.append(PsdBlock(dim))
        self.handles.append(h)
        self._offset += dim * (dim + 1) // 2
        return h

    def nonneg_block(self, dim: int, label: str = "") -> VecHandle:
        h = VecHandle(self._offset, dim, label)
        self.blocks.append(NonnegBlock(dim))
        self.handles.append(h)
        self._offset += dim
        return h

    def free_block(self, dim: int, label: str = "") -> VecHandle:
        h = VecHandle(self._offset, dim, label)
        self.blocks.append(FreeBlock(dim))
        self.handles.append(h)
        self._offset += dim
        return h

    # -- rows and objective -------------------------------------------------

    def add_equality(self, expr: LinExpr, rhs: float = 0.0, label: str = "") -> None:
        """Impose  expr == rhs  (the expression's constant moves to the rhs)."""
        self.rows.append(dict(expr.coeffs))
        self.rhs.append(float(rhs) - expr.const)
        self.row_labels.append(label)

    def set_objective(self, expr: LinExpr) -> None:
        """Minimize the expression (its constant is dropped from the model)."""
        self._objective = LinExpr(expr.coeffs, expr.const)

    @property
    def objective_offset(self) -> float:
        return self._objective.const

    def num_rows(self) -> int:
        return len(self.rows)

    # -- assembly -----------------------------------------------------------

    def build(self) -> SdpProblem:
        n = self._offset
        c = np.zeros(n)
        for k, v in self._objective.coeffs.items():
            c[k] = v
        data, indices, indptr = [], [], [0]
        for row in self.rows:
            for k in sorted(row):
                indices.append(k)
                data.append(row[k])
            indptr.append(len(indices))
        A = sp.csr_matrix(
            (np.array(data, dtype=float), np.array(indices, dtype=np.int64),
             np.array(indptr, dtype=np.int64)),
            shape=(len(self.rows), n),
        )
        return SdpProblem(self.blocks, c, A, np.array(self.rhs, dtype=float))
