"""Reader/writer for the sparse SDPA text format.

The file describes

    (file primal)  min c.y   s.t.  sum_i y_i F_i - F_0  PSD
    (file dual)    max <F_0, Y>  s.t.  <F_i, Y> = c_i,  Y PSD

Our equality-form problem (min <C, X> s.t. <A_r, X> = b_r, X in K) maps onto
the file's dual side:  F_0 = -C,  F_r = A_r,  c = b.  Only PSD and
nonnegative (diagonal) blocks are representable; free blocks are rejected.

Numbers are written with ``repr`` so that a write/read cycle reproduces the
problem bit-exactly.
"""

from __future__ import annotations

import re

import numpy as np
import scipy.sparse as sp

from .model import FreeBlock, NonnegBlock, PsdBlock, SdpProblem, tri_index

_TOKEN_SPLIT = re.compile(r"[,\s(){}]+")


def _entries_upper(prob: SdpProblem, coeffs: np.ndarray):
    """Yield (blkno, i, j, matrix_value) for a counted-once functional."""
    for bno, (bl, sl) in enumerate(zip(prob.blocks, prob.block_slices()), 1):
        seg = coeffs[sl]
        if isinstance(bl, PsdBlock):
            k = 0
            for i in range(bl.dim):
                for j in range(i + 1):
                    v = float(seg[k])
                    k += 1
                    if v != 0.0:
                        # functional coefficient -> symmetric matrix entry
                        yield bno, j + 1, i + 1, (v if i == j else v / 2.0)
        else:
            for i in range(bl.dim):
                if seg[i] != 0.0:
                    yield bno, i + 1, i + 1, float(seg[i])


def write_sdpa(prob: SdpProblem, path: str) -> None:
    for bl in prob.blocks:
        if isinstance(bl, FreeBlock):
            raise ValueError("SDPA format has no free blocks")
    lines = []
    p = prob.A.shape[0]
    lines.append(str(p))
    lines.append(str(len(prob.blocks)))
    dims = [bl.dim if isinstance(bl, PsdBlock) else -bl.dim for bl in prob.blocks]
    lines.append(" ".join(str(d) for d in dims))
    lines.append(" ".join(repr(float(v)) for v in prob.b))
    for bno, i, j, v in _entries_upper(prob, -prob.objective):
        lines.append(f"0 {bno} {i} {j} {repr(v)}")
    At = prob.A.tocsr()
    for r in range(p):
        row = np.zeros(prob.num_scalars)
        sl = slice(At.indptr[r], At.indptr[r + 1])
        row[At.indices[sl]] = At.data[sl]
        for bno, i, j, v in _entries_upper(prob, row):
            lines.append(f"{r + 1} {bno} {i} {j} {repr(v)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sdpa(path: str) -> SdpProblem:
    with open(path) as fh:
        raw = [ln.strip() for ln in fh]
    body = [ln for ln in raw if ln and not ln.startswith(("*", '"'))]
    p = int(_TOKEN_SPLIT.split(body[0].strip())[0])
    nblocks = int(_TOKEN_SPLIT.split(body[1].strip())[0])
    dims = [int(t) for t in _TOKEN_SPLIT.split(body[2].strip()) if t]
    if len(dims) != nblocks:
        raise ValueError("block-dimension line does not match block count")
    b_tokens: list[float] = []
    used = 3
    while len(b_tokens) < p:
        b_tokens.extend(float(t) for t in _TOKEN_SPLIT.split(body[used].strip()) if t)
        used += 1
    blocks = [PsdBlock(d) if d > 0 else NonnegBlock(-d) for d in dims]
    offsets = []
    off = 0
    for bl in blocks:
        offsets.append(off)
        off += bl.scalar_size
    n = off

    c = np.zeros(n)
    rows: list[dict[int, float]] = [{} for _ in range(p)]
    for ln in body[used:]:
        toks = [t for t in _TOKEN_SPLIT.split(ln) if t]
        if len(toks) != 5:
            raise ValueError(f"malformed entry line: {ln!r}")
        matno, bno, i, j = (int(t) for t in toks[:4])
        val = float(toks[4])
        bl = blocks[bno - 1]
        if isinstance(bl, NonnegBlock):
            if i != j:
                raise ValueError("off-diagonal entry in a diagonal block")
            idx = offsets[bno - 1] + (i - 1)
            coef = val
        else:
            idx = offsets[bno - 1] + tri_index(i - 1, j - 1)
            coef = val if i == j else 2.0 * val
        if matno == 0:
            c[idx] -= coef  # F_0 = -C
        else:
            row = rows[matno - 1]
            row[idx] = row.get(idx, 0.0) + coef
    data, indices, indptr = [], [], [0]
    for row in rows:
        for k in sorted(row):
            indices.append(k)
            data.append(row[k])
        indptr.append(len(indices))
    A = sp.csr_matrix((data, indices, indptr), shape=(p, n))
    return SdpProblem(blocks, c, A, np.array(b_tokens[:p]))
