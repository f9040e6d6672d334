# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of ``_ipm_py.ipm_solve``.

Blocks are read as column-major. For Hermitian data that is the complex
conjugate of the row-major layout used by the numpy kernel, so the kernel
solves the conjugated problem and hands back exactly the row-major solution.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zpotrf, zgesvd, zheev, dpotrf, dpotrs

cnp.import_array()

ctypedef double complex cplx

cdef double STEP_FRACTION = 0.98


cdef inline double re_inner(const cplx* a, const cplx* b, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += a[i].real * b[i].real + a[i].imag * b[i].imag
    return s


cdef inline void herm(cplx* a, int n) noexcept nogil:
    cdef int r, c
    cdef cplx u, v
    for c in range(n):
        a[c + c * n] = a[c + c * n].real
        for r in range(c + 1, n):
            u = a[r + c * n]
            v = a[c + r * n]
            a[r + c * n] = 0.5 * (u + v.conjugate())
            a[c + r * n] = a[r + c * n].conjugate()


cdef inline void mm(char ta, char tb, int n, const cplx* A, const cplx* B, cplx* C) noexcept nogil:
    cdef cplx one = 1.0
    cdef cplx zero = 0.0
    if n == 1:
        C[0] = (A[0].conjugate() if ta == b'C' else A[0]) * (B[0].conjugate() if tb == b'C' else B[0])
        return
    zgemm(&ta, &tb, &n, &n, &n, &one, <cplx*>A, &n, <cplx*>B, &n, &zero, C, &n)


cdef inline int chol_lower(cplx* a, int n) noexcept nogil:
    cdef char lo = b'L'
    cdef int info = 0, r, c
    if n == 1:
        if not a[0].real > 0:
            return 1
        a[0] = sqrt(a[0].real)
        return 0
    zpotrf(&lo, &n, a, &n, &info)
    for c in range(n):
        for r in range(c):
            a[r + c * n] = 0.0
    return info


cdef double min_eig(cplx* a, int n, double* w, cplx* work, int lwork, double* rwork) noexcept nogil:
    cdef char jobz = b'N'
    cdef char lo = b'L'
    cdef int info = 0
    cdef double tr, df, off2
    if n == 1:
        return a[0].real
    if n == 2:
        tr = 0.5 * (a[0].real + a[3].real)
        df = 0.5 * (a[0].real - a[3].real)
        off2 = a[1].real * a[1].real + a[1].imag * a[1].imag
        return tr - sqrt(df * df + off2)
    zheev(&jobz, &lo, &n, a, &n, w, work, &lwork, rwork, &info)
    if info != 0:
        return -INFINITY
    return w[0]


cdef double max_step(const cplx* d, const double* s, int n, cplx* tmp,
                     double* w, cplx* work, int lwork, double* rwork) noexcept nogil:
    cdef int r, c
    for c in range(n):
        for r in range(n):
            tmp[r + c * n] = d[r + c * n] / sqrt(s[r] * s[c])
    herm(tmp, n)
    cdef double lam = min_eig(tmp, n, w, work, lwork, rwork)
    if lam >= 0:
        return INFINITY
    return -1.0 / lam


def ipm_solve(C_in, A_in, b_in, sizes_in, double tol=1e-9, int max_iter=200):
    cdef cnp.ndarray[cplx, ndim=1] Cv = np.ascontiguousarray(C_in, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=2] Av = np.ascontiguousarray(A_in, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] bv = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sz = np.ascontiguousarray(sizes_in, dtype=np.int64)

    cdef int nb = sz.shape[0]
    cdef int m = Av.shape[0]
    cdef Py_ssize_t L = Cv.shape[0]
    cdef int k, i, j, r, c, n, nmax = 0, n_total = 0
    cdef Py_ssize_t off, l

    cdef cnp.ndarray[cnp.int64_t, ndim=1] offs = np.zeros(nb, dtype=np.int64)
    for k in range(nb):
        offs[k] = 0 if k == 0 else offs[k - 1] + sz[k - 1] * sz[k - 1]
        nmax = max(nmax, <int>sz[k])
        n_total += <int>sz[k]

    cdef cnp.ndarray[cplx, ndim=1] x = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] z = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] y = np.zeros(m, dtype=np.float64)
    for k in range(nb):
        n = sz[k]
        for r in range(n):
            x[offs[k] + r + r * n] = 1.0
            z[offs[k] + r + r * n] = 1.0

    # workspaces
    cdef cnp.ndarray[cplx, ndim=1] rd = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] rp = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] rhs = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dy = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[cplx, ndim=1] G = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] sv = np.zeros(n_total, dtype=np.float64)
    cdef cnp.ndarray[cplx, ndim=2] At = np.zeros((m, L), dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] Rds = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] D = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] dxs = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] dzs = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] dxa = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] dza = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] dxf = np.zeros(L, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=2] M = np.zeros((m, m), dtype=np.float64)
    cdef cnp.ndarray[cplx, ndim=2] Mc = np.zeros((m, m), dtype=np.complex128)
    cdef int nn = nmax * nmax
    cdef cnp.ndarray[cplx, ndim=1] w1 = np.zeros(nn, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] w2 = np.zeros(nn, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] w3 = np.zeros(nn, dtype=np.complex128)
    cdef int lwork = max(64, 8 * nmax)
    cdef cnp.ndarray[cplx, ndim=1] zwork = np.zeros(lwork, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] rwork = np.zeros(max(8, 5 * nmax), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ew = np.zeros(nmax, dtype=np.float64)

    cdef cplx* px = &x[0]
    cdef cplx* pz = &z[0]
    cdef cplx* pC = &Cv[0]
    cdef cplx* pA = &Av[0, 0]
    cdef cplx* pAt = &At[0, 0]
    cdef cplx* pG = &G[0]
    cdef cplx* prd = &rd[0]
    cdef cplx* pRds = &Rds[0]
    cdef cplx* pD = &D[0]
    cdef cplx* pdxs = &dxs[0]
    cdef cplx* pdzs = &dzs[0]
    cdef cplx* pdxa = &dxa[0]
    cdef cplx* pdza = &dza[0]
    cdef cplx* pdxf = &dxf[0]
    cdef cplx* pw1 = &w1[0]
    cdef cplx* pw2 = &w2[0]
    cdef cplx* pw3 = &w3[0]
    cdef cplx* pzw = &zwork[0]
    cdef double* prw = &rwork[0]
    cdef double* pew = &ew[0]
    cdef double* psv = &sv[0]
    cdef double* py = &y[0]
    cdef double* pdy = &dy[0]
    cdef double* prp = &rp[0]
    cdef double* prhs = &rhs[0]
    cdef double* pb = &bv[0]
    cdef double* pM = &M[0, 0]
    cdef cplx* pMc = &Mc[0, 0]
    cdef Py_ssize_t* po = <Py_ssize_t*>malloc(nb * sizeof(Py_ssize_t))
    cdef int* pn = <int*>malloc(nb * sizeof(int))
    cdef int* ps0 = <int*>malloc(nb * sizeof(int))
    for k in range(nb):
        po[k] = offs[k]
        pn[k] = sz[k]
        ps0[k] = 0 if k == 0 else ps0[k - 1] + pn[k - 1]

    cdef double norm_b = 0.0, norm_c = 0.0, pobj = 0.0, dobj = 0.0, pinf = 0.0, dinf = 0.0
    cdef double gap, mu, mu_aff, sigma, ap, ad, a, t
    cdef int status = 1, it = 0, info = 0, pass_
    cdef char cN = b'N', cC = b'C', cA = b'A', lo = b'L'
    cdef int one_i = 1, ldL
    cdef cplx zone = 1.0, zzero = 0.0
    cdef double* s
    cdef cplx *Xk
    cdef cplx *Gk

    for i in range(m):
        norm_b += pb[i] * pb[i]
    norm_b = 1.0 + sqrt(norm_b)
    norm_c = 1.0 + sqrt(re_inner(pC, pC, L))

    with nogil:
        for it in range(1, max_iter + 1):
            # residuals and objectives
            for i in range(m):
                prp[i] = pb[i] - re_inner(pA + i * L, px, L)
            for l in range(L):
                prd[l] = pC[l] + pz[l]
            for i in range(m):
                t = py[i]
                for l in range(L):
                    prd[l] = prd[l] - t * pA[i * L + l]
            pobj = re_inner(pC, px, L)
            dobj = 0.0
            pinf = 0.0
            for i in range(m):
                dobj += pb[i] * py[i]
                pinf += prp[i] * prp[i]
            pinf = sqrt(pinf) / norm_b
            dinf = sqrt(re_inner(prd, prd, L)) / norm_c
            gap = fabs(pobj - dobj) / (1.0 + fabs(pobj) + fabs(dobj))
            if gap < tol and pinf < tol and dinf < tol:
                status = 0
                break
            mu = re_inner(px, pz, L) / n_total

            # Nesterov-Todd scaling per block
            for k in range(nb):
                n = pn[k]
                off = po[k]
                s = psv + ps0[k]
                Gk = pG + off
                for l in range(n * n):
                    pw1[l] = px[off + l]
                    pw2[l] = pz[off + l]
                if chol_lower(pw1, n) != 0 or chol_lower(pw2, n) != 0:
                    status = 2
                    break
                # w3 = Rz^H L ; svd -> s, V^H in w2
                mm(cC, cN, n, pw2, pw1, pw3)
                if n == 1:
                    s[0] = sqrt(pw3[0].real * pw3[0].real + pw3[0].imag * pw3[0].imag)
                    pw2[0] = 1.0
                    info = 0 if s[0] > 0 else 1
                else:
                    zgesvd(&cN, &cA, &n, &n, pw3, &n, s, NULL, &n, pw2, &n, pzw, &lwork, prw, &info)
                if info != 0:
                    status = 2
                    break
                # G = L V diag(s)^{-1/2}
                mm(cN, cC, n, pw1, pw2, Gk)
                for c in range(n):
                    t = 1.0 / sqrt(s[c])
                    for r in range(n):
                        Gk[r + c * n] = Gk[r + c * n] * t
                # scaled constraint matrices and dual residual
                for i in range(m):
                    mm(cN, cN, n, pA + i * L + off, Gk, pw1)
                    mm(cC, cN, n, Gk, pw1, pAt + i * L + off)
                mm(cN, cN, n, prd + off, Gk, pw1)
                mm(cC, cN, n, Gk, pw1, pRds + off)
            if status == 2:
                break

            # Schur complement M_ij = Re <At_i, At_j>
            ldL = <int>L
            zgemm(&cC, &cN, &m, &m, &ldL, &zone, pAt, &ldL, pAt, &ldL, &zzero, pMc, &m)
            for i in range(m * m):
                pM[i] = pMc[i].real
            dpotrf(&lo, &m, pM, &m, &info)
            if info != 0:
                status = 2
                break

            for pass_ in range(2):
                if pass_ == 0:
                    # predictor: D = -diag(s)
                    for l in range(L):
                        pD[l] = 0.0
                    for k in range(nb):
                        n = pn[k]
                        for r in range(n):
                            pD[po[k] + r + r * n] = -psv[ps0[k] + r]
                else:
                    # corrector from the affine step
                    for k in range(nb):
                        n = pn[k]
                        off = po[k]
                        s = psv + ps0[k]
                        mm(cN, cN, n, pdxa + off, pdza + off, pw1)
                        herm(pw1, n)
                        for c in range(n):
                            for r in range(n):
                                a = sigma * mu - s[r] * s[r] if r == c else 0.0
                                pD[off + r + c * n] = 2.0 * (a - pw1[r + c * n]) / (s[r] + s[c])
                # solve for dy
                for i in range(m):
                    prhs[i] = -prp[i]
                    for l in range(L):
                        prhs[i] += (pAt[i * L + l].real * (pD[l].real + pRds[l].real)
                                    + pAt[i * L + l].imag * (pD[l].imag + pRds[l].imag))
                    pdy[i] = prhs[i]
                dpotrs(&lo, &m, &one_i, pM, &m, pdy, &m, &info)
                for l in range(L):
                    pdzs[l] = -pRds[l]
                for i in range(m):
                    t = pdy[i]
                    for l in range(L):
                        pdzs[l] = pdzs[l] + t * pAt[i * L + l]
                for l in range(L):
                    pdxs[l] = pD[l] - pdzs[l]
                ap = INFINITY
                ad = INFINITY
                for k in range(nb):
                    n = pn[k]
                    off = po[k]
                    herm(pdxs + off, n)
                    herm(pdzs + off, n)
                    ap = min(ap, max_step(pdxs + off, psv + ps0[k], n, pw1, pew, pzw, lwork, prw))
                    ad = min(ad, max_step(pdzs + off, psv + ps0[k], n, pw1, pew, pzw, lwork, prw))
                ap = min(1.0, STEP_FRACTION * ap)
                ad = min(1.0, STEP_FRACTION * ad)
                if pass_ == 0:
                    mu_aff = 0.0
                    for k in range(nb):
                        n = pn[k]
                        off = po[k]
                        s = psv + ps0[k]
                        for c in range(n):
                            for r in range(n):
                                l = off + r + c * n
                                if r == c:
                                    mu_aff += ((s[r] + ap * pdxs[l].real) * (s[r] + ad * pdzs[l].real)
                                               + ap * ad * pdxs[l].imag * pdzs[l].imag)
                                else:
                                    mu_aff += ap * ad * (pdxs[l].real * pdzs[l].real + pdxs[l].imag * pdzs[l].imag)
                        for l in range(n * n):
                            pdxa[off + l] = pdxs[off + l]
                            pdza[off + l] = pdzs[off + l]
                    mu_aff /= n_total
                    sigma = (mu_aff / mu) ** 3
                    if sigma > 1.0:
                        sigma = 1.0

            # unscale and update
            for k in range(nb):
                n = pn[k]
                off = po[k]
                mm(cN, cC, n, pdxs + off, pG + off, pw1)
                mm(cN, cN, n, pG + off, pw1, pdxf + off)
            for l in range(L):
                px[l] = px[l] + ap * pdxf[l]
                pz[l] = pz[l] - ad * prd[l]
            for i in range(m):
                py[i] += ad * pdy[i]
                t = ad * pdy[i]
                for l in range(L):
                    pz[l] = pz[l] + t * pA[i * L + l]
            for k in range(nb):
                herm(px + po[k], pn[k])
                herm(pz + po[k], pn[k])

    free(po)
    free(pn)
    free(ps0)
    return x, y, z, (status, it, pobj, dobj, pinf, dinf)
