"""Primal-dual interior-point solver for equality-form SDPs.

The problem

    min <c, x>   s.t.  A x = b,  x in K

(K a product of PSD cones and a nonnegative orthant; free variables are
split into differences of nonnegative pairs) is embedded in the standard
homogeneous self-dual model with variables (x, lam, z, tau, kappa):

    A x - b tau                 = 0
    -A^T lam + c tau - z        = 0
    b.lam - c.x - kappa         = 0
    x in K, z in K*, tau, kappa >= 0.

Search directions are Newton steps on the complementarity conditions in
scaled form (dX + sym(Z^-1 dZ X) = rhs), i.e. the HKM direction, driven by
a Mehrotra predictor-corrector.  Kept deliberately dense: the Schur
complement is assembled per block with batched matrix products and solved
by Cholesky.  Everything is deterministic -- repeated runs produce
bit-identical iterates.

Internally symmetric matrix variables are scaled vectorizations (off
diagonals carry sqrt(2)) so that inner products of packed vectors equal
matrix inner products; the model layer's counted-once convention is
converted on the way in and out.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .model import (FreeBlock, NonnegBlock, PsdBlock, SdpProblem, SdpSolution,
                    tri_indices)

_SQRT2 = float(np.sqrt(2.0))


class _PsdData:
    """Static per-PSD-block data in internal (svec) coordinates."""

    __slots__ = ("sl", "dim", "ti", "tj", "w", "T", "Asp")

    def __init__(self, sl, dim, A_int):
        self.sl = sl
        self.dim = dim
        self.ti, self.tj = tri_indices(dim)
        self.w = np.where(self.ti == self.tj, 1.0, _SQRT2)
        self.Asp = A_int[:, sl].tocsr()
        cols = self.Asp.toarray()  # (p, nsv)
        p = cols.shape[0]
        T = np.zeros((p, dim, dim))
        vals = cols / self.w
        T[:, self.ti, self.tj] = vals
        T[:, self.tj, self.ti] = vals
        self.T = T

    def mat(self, seg: np.ndarray) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        v = seg / self.w
        m[self.ti, self.tj] = v
        m[self.tj, self.ti] = v
        return m

    def svec(self, m: np.ndarray) -> np.ndarray:
        return m[self.ti, self.tj] * self.w


def _chol(mat: np.ndarray) -> np.ndarray | None:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return None


def _chol_jitter(mat: np.ndarray) -> np.ndarray | None:
    """Cholesky with escalating diagonal jitter; None if hopeless."""
    L = _chol(mat)
    if L is not None:
        return L
    n = mat.shape[0]
    base = float(np.trace(mat)) / max(n, 1)
    if base <= 0.0 or not np.isfinite(base):
        base = 1.0
    jit = 1e-14 * base
    for _ in range(6):
        L = _chol(mat + jit * np.eye(n))
        if L is not None:
            return L
        jit *= 100.0
    return None


def _min_eig_ratio(L: np.ndarray, delta: np.ndarray) -> float:
    """Smallest eigenvalue of L^-1 delta L^-T for Cholesky factor L."""
    s = sla.solve_triangular(L, delta, lower=True)
    s = sla.solve_triangular(L, s.T, lower=True)
    return float(np.linalg.eigvalsh(0.5 * (s + s.T))[0])


class _Internal:
    """Problem in internal coordinates: svec PSD entries, split free vars."""

    def __init__(self, prob: SdpProblem):
        A = prob.A.tocsc()
        parts, c_parts = [], []
        psd_specs = []  # (internal offset, dim)
        lp_idx = []
        self.recover = []  # (kind, model_slice, internal_offset, size)
        off = 0
        free_cols = []
        for bl, sl in zip(prob.blocks, prob.block_slices()):
            nsv = bl.scalar_size
            if isinstance(bl, PsdBlock):
                ti, tj = tri_indices(bl.dim)
                w = np.where(ti == tj, 1.0, _SQRT2)
                parts.append(A[:, sl].multiply(1.0 / w[None, :]))
                c_parts.append(prob.objective[sl] / w)
                psd_specs.append((off, bl.dim))
                self.recover.append(("psd", sl, off, nsv))
            elif isinstance(bl, NonnegBlock):
                parts.append(A[:, sl])
                c_parts.append(prob.objective[sl])
                lp_idx.extend(range(off, off + nsv))
                self.recover.append(("lp", sl, off, nsv))
            else:  # FreeBlock: u - v with u, v >= 0; v columns appended later
                parts.append(A[:, sl])
                c_parts.append(prob.objective[sl])
                lp_idx.extend(range(off, off + nsv))
                free_cols.append((sl, off, nsv))
                self.recover.append(("free", sl, off, nsv))
            off += nsv
        self.free_pairs = []
        for sl, uoff, nsv in free_cols:
            parts.append(-A[:, sl])
            c_parts.append(-prob.objective[sl])
            lp_idx.extend(range(off, off + nsv))
            self.free_pairs.append((uoff, off, nsv))
            off += nsv
        self.n = off
        self.c = (np.concatenate(c_parts) if c_parts else np.zeros(0))
        A_int = (sp.hstack(parts).tocsr() if parts
                 else sp.csr_matrix((A.shape[0], 0)))

        # drop numerically empty rows (builder cancellations), remember map
        row_max = np.zeros(A_int.shape[0])
        if A_int.nnz:
            absA = abs(A_int)
            row_max = np.asarray(absA.max(axis=1).todense()).ravel()
        keep = (row_max > 0.0) | (np.abs(prob.b) > 0.0)
        self.kept_rows = np.flatnonzero(keep)
        A_int = A_int[self.kept_rows]
        b = prob.b[self.kept_rows]

        # row equilibration
        scale = np.maximum(row_max[self.kept_rows], np.abs(b))
        scale[scale == 0.0] = 1.0
        self.row_scale = scale
        D = sp.diags(1.0 / scale)
        self.A = (D @ A_int).tocsr()
        self.b = b / scale
        self.p = self.A.shape[0]
        self.total_rows = prob.A.shape[0]

        self.psd = [_PsdData(slice(o, o + d * (d + 1) // 2), d, self.A)
                    for o, d in psd_specs]
        self.lp = np.array(lp_idx, dtype=np.int64)
        self.A_lp = self.A[:, self.lp].tocsr() if self.lp.size else None
        self.nu = sum(d for _, d in psd_specs) + self.lp.size

    # -- mappings back to model space --------------------------------------

    def model_x(self, prob: SdpProblem, x_int: np.ndarray) -> np.ndarray:
        xm = np.zeros(prob.num_scalars)
        for kind, sl, off, nsv in self.recover:
            seg = x_int[off:off + nsv]
            if kind == "psd":
                dim = int((np.sqrt(8 * nsv + 1) - 1) / 2)
                ti, tj = tri_indices(dim)
                w = np.where(ti == tj, 1.0, _SQRT2)
                xm[sl] = seg / w
            else:
                xm[sl] = seg
        for uoff, voff, nsv in self.free_pairs:
            # locate the matching model slice for the u-part
            for kind, sl, off, n2 in self.recover:
                if kind == "free" and off == uoff:
                    xm[sl] -= x_int[voff:voff + nsv]
                    break
        return xm

    def model_lam(self, lam_int: np.ndarray) -> np.ndarray:
        lam = np.zeros(self.total_rows)
        lam[self.kept_rows] = lam_int / self.row_scale
        return lam


def solve(prob: SdpProblem, tol: float = 1e-8, max_iter: int = 100) -> SdpSolution:
    """Solve an :class:`SdpProblem`; see the module docstring for the method."""
    ii = _Internal(prob)
    n, p = ii.n, ii.p
    A, b, c = ii.A, ii.b, ii.c
    if n == 0:
        status = "Optimal" if (p == 0 or np.max(np.abs(b)) <= tol) else "PrimalInfeasible"
        return SdpSolution(status, 0.0, 0.0, prob.unscalarize(np.zeros(prob.num_scalars)),
                           np.zeros(ii.total_rows), [], 0,
                           {"primal": 0.0, "dual": 0.0, "gap": 0.0})

    x = np.zeros(n)
    z = np.zeros(n)
    for blk in ii.psd:
        e = np.zeros(blk.sl.stop - blk.sl.start)
        e[blk.ti == blk.tj] = 1.0
        x[blk.sl] = e
        z[blk.sl] = e
    x[ii.lp] = 1.0
    z[ii.lp] = 1.0
    lam = np.zeros(p)
    tau = kappa = 1.0
    nu1 = ii.nu + 1.0
    mu0 = (x @ z + tau * kappa) / nu1
    norm_b = 1.0 + np.linalg.norm(b)
    norm_c = 1.0 + np.linalg.norm(c)

    def finish(status: str, iters: int, res: dict) -> SdpSolution:
        if status in ("Optimal", "IterLimit", "NumericalTrouble") and tau > 1e-300:
            xm = ii.model_x(prob, x / tau)
            lm = ii.model_lam(lam / tau)
            pv = float(prob.objective @ xm)
            dv = float(prob.b @ lm)
        elif status == "PrimalInfeasible":
            s = b @ lam
            lm = ii.model_lam(lam / s if s > 0 else lam)
            xm = np.zeros(prob.num_scalars)
            pv = dv = float("nan")
        elif status == "DualInfeasible":
            s = -(c @ x)
            xm = ii.model_x(prob, x / s if s > 0 else x)
            lm = np.zeros(ii.total_rows)
            pv = dv = float("nan")
        else:
            xm = np.zeros(prob.num_scalars)
            lm = np.zeros(ii.total_rows)
            pv = dv = float("nan")
        slack = prob.objective - prob.A.T @ lm
        return SdpSolution(status, pv, dv, prob.unscalarize(xm), lm,
                           prob.functional_as_matrices(slack), iters, res)

    res = {"primal": float("inf"), "dual": float("inf"), "gap": float("inf")}
    stalls = 0
    for it in range(1, max_iter + 1):
        # factor the cone blocks at the current iterate
        blk_state = []  # (Xmat, Zinv, cholX, cholZ)
        ok = True
        for blk in ii.psd:
            X = blk.mat(x[blk.sl])
            Z = blk.mat(z[blk.sl])
            LX = _chol_jitter(X)
            LZ = _chol_jitter(Z)
            if LX is None or LZ is None:
                ok = False
                break
            Zinv = sla.cho_solve((LZ, True), np.eye(blk.dim))
            blk_state.append((X, Zinv, LX, LZ))
        if not ok:
            return finish("NumericalTrouble", it - 1, res)

        r_p = A @ x - b * tau
        r_d = -(A.T @ lam) + c * tau - z
        r_g = float(b @ lam - c @ x - kappa)
        mu = (x @ z + tau * kappa) / nu1

        pv = float(c @ x / tau)
        dv = float(b @ lam / tau)
        pres = float(np.linalg.norm(A @ (x / tau) - b)) / norm_b
        dres = float(np.linalg.norm(A.T @ (lam / tau) + z / tau - c)) / norm_c
        gap = abs(pv - dv) / (1.0 + abs(pv) + abs(dv))
        res = {"primal": pres, "dual": dres, "gap": gap}
        if max(pres, dres, gap) <= tol:
            return finish("Optimal", it - 1, res)

        if kappa > 1e4 * tau:  # likely ray: judge certificate quality
            blam = float(b @ lam)
            cx = float(c @ x)
            if blam > 0 and float(np.linalg.norm(A.T @ lam + z)) <= 1e-7 * blam:
                return finish("PrimalInfeasible", it - 1, res)
            if cx < 0 and float(np.linalg.norm(A @ x)) <= 1e-7 * (-cx):
                return finish("DualInfeasible", it - 1, res)
            if mu < 1e-12 * mu0:
                return finish("NumericalTrouble", it - 1, res)
        elif mu < 1e-14 * mu0 and tau < 1e-8:
            return finish("NumericalTrouble", it - 1, res)

        # Schur complement M = A W A^T (W: HKM scaling at the iterate)
        M = np.zeros((p, p))
        for blk, (X, Zinv, _, _) in zip(ii.psd, blk_state):
            ZA = np.matmul(Zinv, blk.T)
            G = np.matmul(ZA, X)
            G = 0.5 * (G + G.transpose(0, 2, 1))
            rows_sv = G[:, blk.ti, blk.tj] * blk.w  # (p, nsv)
            M += blk.Asp @ rows_sv.T
        if ii.lp.size:
            d = x[ii.lp] / z[ii.lp]
            M += (ii.A_lp.multiply(d[None, :]) @ ii.A_lp.T).toarray()
        M = 0.5 * (M + M.T)
        LM = _chol_jitter(M) if p else None
        if p and LM is None:
            return finish("NumericalTrouble", it - 1, res)

        def m_solve(r):
            if p == 0:
                return r
            return sla.cho_solve((LM, True), r)

        def w_apply(v):
            out = np.zeros_like(v)
            for blk, (X, Zinv, _, _) in zip(ii.psd, blk_state):
                V = blk.mat(v[blk.sl])
                G = Zinv @ V @ X
                out[blk.sl] = blk.svec(0.5 * (G + G.T))
            if ii.lp.size:
                out[ii.lp] = (x[ii.lp] / z[ii.lp]) * v[ii.lp]
            return out

        Wc = w_apply(c)
        AWc = A @ Wc
        h = m_solve(AWc + b)
        WRd = w_apply(-r_d)
        cWc = float(c @ Wc)
        bAWc = b - AWc
        denom = float(bAWc @ h) + cWc + kappa / tau
        if not np.isfinite(denom) or abs(denom) < 1e-300:
            return finish("NumericalTrouble", it - 1, res)

        def newton(rc, r_tau):
            r1 = -r_p - A @ rc - A @ WRd
            v = m_solve(r1)
            r2 = -r_g + float(c @ rc) + float(c @ WRd) + r_tau / tau
            dtau = (r2 - float(bAWc @ v)) / denom
            dlam = v + h * dtau
            dz = -(A.T @ dlam) + c * dtau + r_d
            dx = rc - w_apply(dz)
            dkap = (r_tau - kappa * dtau) / tau
            return dx, dlam, dz, dtau, dkap

        def step_bound(dx, dz, dtau, dkap):
            a = 1e10
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            if ii.lp.size:
                for cur, dlt in ((x[ii.lp], dx[ii.lp]), (z[ii.lp], dz[ii.lp])):
                    neg = dlt < 0
                    if np.any(neg):
                        a = min(a, float(np.min(-cur[neg] / dlt[neg])))
            for blk, (X, Zinv, LX, LZ) in zip(ii.psd, blk_state):
                for L, dlt in ((LX, blk.mat(dx[blk.sl])), (LZ, blk.mat(dz[blk.sl]))):
                    lmin = _min_eig_ratio(L, dlt)
                    if lmin < 0:
                        a = min(a, -1.0 / lmin)
            return a

        # predictor (affine scaling direction)
        rc_aff = -x
        dxa, dla, dza, dta, dka = newton(rc_aff, -tau * kappa)
        a_aff = min(1.0, step_bound(dxa, dza, dta, dka))
        mu_aff = ((x + a_aff * dxa) @ (z + a_aff * dza)
                  + (tau + a_aff * dta) * (kappa + a_aff * dka)) / nu1
        sigma = (max(mu_aff, 0.0) / mu) ** 3
        sigma = min(max(sigma, 1e-8), 1.0 - 1e-8)

        # corrector (combined direction)
        rc = np.zeros(n)
        for blk, (X, Zinv, _, _) in zip(ii.psd, blk_state):
            dZ = blk.mat(dza[blk.sl])
            dX = blk.mat(dxa[blk.sl])
            corr = Zinv @ dZ @ dX
            tgt = sigma * mu * Zinv - X - 0.5 * (corr + corr.T)
            rc[blk.sl] = blk.svec(0.5 * (tgt + tgt.T))
        if ii.lp.size:
            xl, zl = x[ii.lp], z[ii.lp]
            rc[ii.lp] = (sigma * mu - xl * zl - dxa[ii.lp] * dza[ii.lp]) / zl
        r_tau = sigma * mu - tau * kappa - dta * dka

        dx, dlam, dz, dtau, dkap = newton(rc, r_tau)
        alpha = min(1.0, 0.99 * step_bound(dx, dz, dtau, dkap))
        if alpha < 1e-8:
            stalls += 1
            if stalls >= 3:
                return finish("NumericalTrouble", it, res)
        else:
            stalls = 0
        x = x + alpha * dx
        lam = lam + alpha * dlam
        z = z + alpha * dz
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkap

    return finish("IterLimit", max_iter, res)
