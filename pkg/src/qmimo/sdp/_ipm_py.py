"""Primal-dual interior-point kernel for block-diagonal complex Hermitian SDPs (numpy).

Primal:  max  Re<C, X>   s.t.  Re<A_i, X> = b_i,  X >= 0
Dual:    min  b.y        s.t.  sum_i y_i A_i - Z = C,  Z >= 0

Blocks are stored flat and row-major, concatenated in block order; ``A`` has
one flattened constraint per row. Search directions use Nesterov-Todd
scaling with a Mehrotra predictor-corrector.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

STATUS_OPTIMAL = 0
STATUS_MAX_ITER = 1
STATUS_NUMERICAL = 2

STEP_FRACTION = 0.98


def _blocks(flat, sizes, offsets):
    return [flat[o:o + n * n].reshape(n, n) for n, o in zip(sizes, offsets)]


def _herm(m):
    return 0.5 * (m + m.conj().swapaxes(-1, -2))


def _max_step(s_inv_sqrt, d_scaled):
    """Largest alpha with diag(s) + alpha * d_scaled >= 0."""
    t = s_inv_sqrt[:, None] * d_scaled * s_inv_sqrt[None, :]
    lam = np.linalg.eigvalsh(_herm(t))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def ipm_solve(C, A, b, sizes, tol=1e-9, max_iter=200):
    """Return (x, y, z, info) with info = (status, iterations, pobj, dobj, pinf, dinf)."""
    C = np.ascontiguousarray(C, dtype=complex)
    A = np.ascontiguousarray(A, dtype=complex)
    b = np.ascontiguousarray(b, dtype=float)
    sizes = [int(n) for n in sizes]
    offsets = np.concatenate([[0], np.cumsum([n * n for n in sizes])[:-1]]).astype(int)
    m = A.shape[0]
    n_total = sum(sizes)

    x = np.concatenate([np.eye(n, dtype=complex).ravel() for n in sizes])
    z = x.copy()
    y = np.zeros(m)
    Cb = _blocks(C, sizes, offsets)
    Ab = [A[:, o:o + n * n].reshape(m, n, n) for n, o in zip(sizes, offsets)]
    norm_b = 1.0 + np.linalg.norm(b)
    norm_c = 1.0 + np.linalg.norm(C)

    status = STATUS_MAX_ITER
    it = 0
    pobj = dobj = pinf = dinf = np.nan
    for it in range(1, max_iter + 1):
        rp = b - (A.conj() @ x).real
        rd = C - (y @ A) + z
        pobj = float(np.vdot(C, x).real)
        dobj = float(b @ y)
        pinf = np.linalg.norm(rp) / norm_b
        dinf = np.linalg.norm(rd) / norm_c
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if gap < tol and pinf < tol and dinf < tol:
            status = STATUS_OPTIMAL
            break
        mu = float(np.vdot(x, z).real) / n_total

        Xb = _blocks(x, sizes, offsets)
        Zb = _blocks(z, sizes, offsets)
        Rdb = _blocks(rd, sizes, offsets)
        try:
            G, s, At, Rds = [], [], [], []
            for k, n in enumerate(sizes):
                L = np.linalg.cholesky(_herm(Xb[k]))
                Rz = np.linalg.cholesky(_herm(Zb[k]))
                U, sv, Vh = np.linalg.svd(Rz.conj().T @ L)
                g = L @ Vh.conj().T / np.sqrt(sv)[None, :]
                G.append(g)
                s.append(sv)
                At.append(g.conj().T @ Ab[k] @ g)
                Rds.append(g.conj().T @ Rdb[k] @ g)
        except np.linalg.LinAlgError:
            status = STATUS_NUMERICAL
            break
        At_flat = np.concatenate([a.reshape(m, -1) for a in At], axis=1)
        M = (At_flat.conj() @ At_flat.T).real
        try:
            chol = sla.cho_factor(M)
        except np.linalg.LinAlgError:
            status = STATUS_NUMERICAL
            break

        def direction(D):
            rhs = np.zeros(m)
            for k in range(len(sizes)):
                rhs += np.einsum("kij,ij->k", At[k].conj(), D[k] + Rds[k]).real
            dy = sla.cho_solve(chol, rhs - rp)
            dzs = [np.einsum("k,kij->ij", dy, At[k]) - Rds[k] for k in range(len(sizes))]
            dxs = [D[k] - dzs[k] for k in range(len(sizes))]
            return dy, _herm_list(dxs), _herm_list(dzs)

        s_isq = [1.0 / np.sqrt(v) for v in s]

        # predictor
        dy, dxs, dzs = direction([-np.diag(v).astype(complex) for v in s])
        ap = min(1.0, STEP_FRACTION * min(_max_step(q, d) for q, d in zip(s_isq, dxs)))
        ad = min(1.0, STEP_FRACTION * min(_max_step(q, d) for q, d in zip(s_isq, dzs)))
        mu_aff = sum(
            np.vdot(np.diag(v) + ap * dx, np.diag(v) + ad * dz).real for v, dx, dz in zip(s, dxs, dzs)
        ) / n_total
        sigma = min(1.0, (mu_aff / mu) ** 3)

        # corrector
        D = []
        for v, dx, dz in zip(s, dxs, dzs):
            R = sigma * mu * np.eye(len(v)) - np.diag(v * v) - _herm(dx @ dz)
            D.append(2.0 * R / (v[:, None] + v[None, :]))
        dy, dxs, dzs = direction(D)
        ap = min(1.0, STEP_FRACTION * min(_max_step(q, d) for q, d in zip(s_isq, dxs)))
        ad = min(1.0, STEP_FRACTION * min(_max_step(q, d) for q, d in zip(s_isq, dzs)))

        dx_full = np.concatenate([(g @ d @ g.conj().T).ravel() for g, d in zip(G, dxs)])
        dz_full = dy @ A - rd
        x = x + ap * dx_full
        y = y + ad * dy
        z = z + ad * dz_full
        # keep iterates exactly Hermitian
        x = np.concatenate([_herm(X).ravel() for X in _blocks(x, sizes, offsets)])
        z = np.concatenate([_herm(Z).ravel() for Z in _blocks(z, sizes, offsets)])

    return x, y, z, (status, it, pobj, dobj, float(pinf), float(dinf))


def _herm_list(ms):
    return [_herm(m) for m in ms]
