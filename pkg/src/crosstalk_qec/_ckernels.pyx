# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled MPS kernels (same interface as ``_mpskernels``).

Site tensors are C-ordered ``(left, 2, right)`` complex arrays.  LAPACK is
column-major, so a C-ordered ``m x n`` matrix is handed over as the
column-major ``n x m`` matrix of its transpose; every factorization below is
written in that transposed picture (a QR of a C matrix is an LQ of its
buffer, and so on).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy, memset
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zgelqf, zgeqp3, zgesdd, zgesvd, zungqr, zunglq

cnp.import_array()

ctypedef double complex dc


cdef inline double _abs2(dc v) noexcept nogil:
    return v.real * v.real + v.imag * v.imag


cdef cnp.ndarray _empty3(int a, int b, int c):
    cdef cnp.npy_intp dims[3]
    dims[0] = a
    dims[1] = b
    dims[2] = c
    return cnp.PyArray_EMPTY(3, dims, cnp.NPY_COMPLEX128, 0)


cdef cnp.ndarray _empty2(int a, int b):
    cdef cnp.npy_intp dims[2]
    dims[0] = a
    dims[1] = b
    return cnp.PyArray_EMPTY(2, dims, cnp.NPY_COMPLEX128, 0)


cdef inline cnp.ndarray _c3(object t):
    return np.ascontiguousarray(t, dtype=np.complex128)


cdef void _gemm(char ta, char tb, int m, int n, int k, dc alpha, dc* a, int lda,
                dc* b, int ldb, dc beta, dc* c, int ldc) noexcept nogil:
    zgemm(&ta, &tb, &m, &n, &k, &alpha, a, &lda, b, &ldb, &beta, c, &ldc)


# ---------------------------------------------------------------------------
# single-site operator

cdef void _apply_op(dc* op, dc* src, dc* dst, int dl, int dr) noexcept nogil:
    cdef int a, b
    cdef dc x0, x1
    cdef dc o00 = op[0], o01 = op[1], o10 = op[2], o11 = op[3]
    for a in range(dl):
        for b in range(dr):
            x0 = src[(a * 2) * dr + b]
            x1 = src[(a * 2 + 1) * dr + b]
            dst[(a * 2) * dr + b] = o00 * x0 + o01 * x1
            dst[(a * 2 + 1) * dr + b] = o10 * x0 + o11 * x1


def apply_site(op, t):
    cdef cnp.ndarray top = _c3(op)
    cdef cnp.ndarray tt = _c3(t)
    cdef int dl = tt.shape[0], dr = tt.shape[2]
    cdef cnp.ndarray out = _empty3(dl, 2, dr)
    _apply_op(<dc*> top.data, <dc*> tt.data, <dc*> out.data, dl, dr)
    return out


# ---------------------------------------------------------------------------
# factorizations

cdef int _pqr(dc* a, int m, int n, double cutoff, dc* rp, double* dropped, double* tot) except -1:
    """Column-pivoted QR of the column-major ``m x n`` matrix ``a`` (in place).

    On return the first ``keep`` columns of ``a`` hold Q and ``rp`` (column
    major ``keep x n``) holds R with the pivoting undone, so ``a ~ Q rp``.
    ``keep`` is the numerical rank: diagonal entries of R at or below
    ``cutoff * |R_00|`` are dropped, with their rows' weight in ``dropped``.
    """
    cdef int kk = m if m < n else n
    cdef int info = 0, lwork = -1, i, j, keep, col
    cdef dc wq
    cdef dc* tau = <dc*> malloc(kk * sizeof(dc))
    cdef int* jpvt = <int*> malloc(n * sizeof(int))
    cdef double* rwork = <double*> malloc(2 * n * sizeof(double))
    cdef dc* work
    memset(jpvt, 0, n * sizeof(int))
    zgeqp3(&m, &n, a, &m, jpvt, tau, &wq, &lwork, rwork, &info)
    lwork = <int> wq.real
    if lwork < 1:
        lwork = 1
    work = <dc*> malloc(lwork * sizeof(dc))
    zgeqp3(&m, &n, a, &m, jpvt, tau, work, &lwork, rwork, &info)
    free(work)
    free(rwork)
    cdef double d0 = sqrt(_abs2(a[0]))
    keep = kk
    if cutoff > 0.0 and d0 > 0.0:
        keep = 0
        for i in range(kk):
            if sqrt(_abs2(a[i * m + i])) > cutoff * d0:
                keep += 1
        if keep < 1:
            keep = 1
    cdef double t = 0.0, dr = 0.0, v
    for j in range(n):
        col = jpvt[j] - 1
        for i in range(kk):
            if i <= j:
                v = _abs2(a[j * m + i])
                t += v
                if i >= keep:
                    dr += v
                elif rp != NULL:
                    rp[col * keep + i] = a[j * m + i]
            elif i < keep and rp != NULL:
                rp[col * keep + i] = 0
    dropped[0] = dr
    tot[0] = t
    free(jpvt)
    lwork = -1
    zungqr(&m, &keep, &keep, a, &m, tau, &wq, &lwork, &info)
    lwork = <int> wq.real
    if lwork < 1:
        lwork = 1
    work = <dc*> malloc(lwork * sizeof(dc))
    zungqr(&m, &keep, &keep, a, &m, tau, work, &lwork, &info)
    free(work)
    free(tau)
    return keep


cdef tuple _split_left(cnp.ndarray t, double cutoff):
    """Pivoted QR of ``t`` as a (2*dl x dr) matrix.

    Returns (left-isometric tensor (dl, 2, k), R as C matrix (k x dr),
    squared norm of the dropped block, squared norm of the whole R).
    """
    cdef int dl = t.shape[0], dr = t.shape[2]
    cdef int m = 2 * dl
    cdef int i, j, keep
    cdef dc* src = <dc*> t.data
    # transpose into a column-major m x dr buffer
    cdef dc* a = <dc*> malloc(m * dr * sizeof(dc))
    cdef dc* rf = <dc*> malloc((m if m < dr else dr) * dr * sizeof(dc))
    cdef double dropped = 0.0, tot = 0.0
    for i in range(m):
        for j in range(dr):
            a[j * m + i] = src[i * dr + j]
    try:
        keep = _pqr(a, m, dr, cutoff, rf, &dropped, &tot)
        q = _empty3(dl, 2, keep)
        r = _empty2(keep, dr)
        qp = <dc*> (<cnp.ndarray> q).data
        rp = <dc*> (<cnp.ndarray> r).data
        for i in range(m):
            for j in range(keep):
                qp[i * keep + j] = a[j * m + i]
        for i in range(keep):
            for j in range(dr):
                rp[i * dr + j] = rf[j * keep + i]
    finally:
        free(a)
        free(rf)
    return q, r, dropped, tot


cdef tuple _split_right_qr(cnp.ndarray t, double cutoff):
    """Pivoted LQ of ``t`` as a (dl x 2*dr) matrix.

    Returns (right-isometric tensor (k, 2, dr), X as C matrix (dl x k),
    squared norm of the dropped block, squared norm of the whole R).
    """
    cdef int dl = t.shape[0], dr = t.shape[2]
    cdef int m = 2 * dr
    cdef int keep
    cdef double dropped = 0.0, tot = 0.0
    # the C buffer already is the column-major (2*dr x dl) transpose
    cdef cnp.ndarray buf = t.copy()
    cdef dc* rf = <dc*> malloc((m if m < dl else dl) * dl * sizeof(dc))
    try:
        keep = _pqr(<dc*> buf.data, m, dl, cutoff, rf, &dropped, &tot)
        x = _empty2(dl, keep)
        memcpy(<dc*> (<cnp.ndarray> x).data, rf, keep * dl * sizeof(dc))
        y = _empty3(keep, 2, dr)
        memcpy(<dc*> (<cnp.ndarray> y).data, <dc*> buf.data, keep * m * sizeof(dc))
    finally:
        free(rf)
    return y, x, dropped, tot


cdef tuple _split_right_svd(cnp.ndarray t, int chi, double cutoff):
    """SVD of ``t`` as a (dl x 2*dr) matrix keeping the largest values.

    Returns (right-isometric tensor, X = V* S as C matrix, relative discarded weight).
    """
    cdef int dl = t.shape[0], dr = t.shape[2]
    cdef int m = 2 * dr
    cdef int mn = m if m < dl else dl
    cdef int info = 0, lwork = -1, i, j, keep
    cdef cnp.ndarray buf = t.copy()
    cdef cnp.ndarray save = t.copy()
    cdef dc* a = <dc*> buf.data
    cdef double* s = <double*> malloc(mn * sizeof(double))
    cdef dc* u = <dc*> malloc(m * mn * sizeof(dc))
    cdef dc* vt = <dc*> malloc(mn * dl * sizeof(dc))
    cdef int lrw = 5 * mn * mn + 7 * mn
    cdef int lrw2 = 2 * mn * (m if m > dl else dl) + 2 * mn * mn + mn
    if lrw2 > lrw:
        lrw = lrw2
    cdef double* rwork = <double*> malloc(lrw * sizeof(double))
    cdef int* iwork = <int*> malloc(8 * mn * sizeof(int))
    cdef dc wq
    cdef dc* work
    cdef char jobz = b'S'
    zgesdd(&jobz, &m, &dl, a, &m, s, u, &m, vt, &mn, &wq, &lwork, rwork, iwork, &info)
    lwork = <int> wq.real
    if lwork < 1:
        lwork = 1
    work = <dc*> malloc(lwork * sizeof(dc))
    zgesdd(&jobz, &m, &dl, a, &m, s, u, &m, vt, &mn, work, &lwork, rwork, iwork, &info)
    free(work)
    if info != 0:
        # divide and conquer failed to converge: fall back to QR iteration
        memcpy(a, <dc*> save.data, m * dl * sizeof(dc))
        lwork = -1
        zgesvd(&jobz, &jobz, &m, &dl, a, &m, s, u, &m, vt, &mn, &wq, &lwork, rwork, &info)
        lwork = <int> wq.real
        if lwork < 1:
            lwork = 1
        work = <dc*> malloc(lwork * sizeof(dc))
        zgesvd(&jobz, &jobz, &m, &dl, a, &m, s, u, &m, vt, &mn, work, &lwork, rwork, &info)
        free(work)
    free(rwork)
    free(iwork)
    if info != 0:
        free(s)
        free(u)
        free(vt)
        raise np.linalg.LinAlgError("SVD did not converge")
    keep = mn
    if cutoff > 0.0 and s[0] > 0.0:
        keep = 0
        for i in range(mn):
            if s[i] > cutoff * s[0]:
                keep += 1
    if chi > 0 and keep > chi:
        keep = chi
    if keep < 1:
        keep = 1
    cdef double tot = 0.0, dropped = 0.0
    for i in range(mn):
        tot += s[i] * s[i]
        if i >= keep:
            dropped += s[i] * s[i]
    cdef cnp.ndarray y = _empty3(keep, 2, dr)
    memcpy(<dc*> y.data, u, keep * m * sizeof(dc))
    cdef cnp.ndarray x = _empty2(dl, keep)
    cdef dc* xp = <dc*> x.data
    for j in range(dl):
        for i in range(keep):
            xp[j * keep + i] = s[i] * vt[j * mn + i]
    free(s)
    free(u)
    free(vt)
    return y, x, (dropped / tot if tot > 0.0 else 0.0)


cdef cnp.ndarray _absorb_right(cnp.ndarray a, cnp.ndarray x):
    """``a`` (dl', 2, dl) times ``x`` (dl x k) -> (dl', 2, k)."""
    cdef int d0 = a.shape[0], dl = a.shape[2], k = x.shape[1]
    cdef cnp.ndarray ac = _c3(a)
    cdef cnp.ndarray out = _empty3(d0, 2, k)
    _gemm(b'N', b'N', k, 2 * d0, dl, 1.0, <dc*> x.data, k, <dc*> ac.data, dl, 0.0,
          <dc*> out.data, k)
    return out


cdef cnp.ndarray _absorb_left(cnp.ndarray r, cnp.ndarray b):
    """``r`` (k x dr) times ``b`` (dr, 2, dr') -> (k, 2, dr')."""
    cdef int k = r.shape[0], dr = r.shape[1], d2 = b.shape[2]
    cdef cnp.ndarray bc = _c3(b)
    cdef cnp.ndarray out = _empty3(k, 2, d2)
    _gemm(b'N', b'N', 2 * d2, k, dr, 1.0, <dc*> bc.data, 2 * d2, <dc*> r.data, dr, 0.0,
          <dc*> out.data, 2 * d2)
    return out


def shift_right(a, b):
    """QR on ``a``; the triangular factor moves into ``b``."""
    q, r, _, _ = _split_left(_c3(a), 0.0)
    return q, _absorb_left(r, b)


def shift_left(a, b):
    """LQ on ``b``; the triangular factor moves into ``a``."""
    y, x, _, _ = _split_right_qr(_c3(b), 0.0)
    return _absorb_right(a, x), y


cdef double _svd_step(list tensors, int j, int chi, double cutoff) except? -1.0:
    y, x, dw = _split_right_svd(_c3(tensors[j]), chi, cutoff)
    tensors[j] = y
    tensors[j - 1] = _absorb_right(tensors[j - 1], x)
    return dw


def svd_sweep_left(list tensors, int lo, int hi, int chi, double cutoff):
    """Truncating SVD sweep from ``hi`` (the center) down to ``lo``."""
    cdef double discarded = 0.0
    cdef int j
    for j in range(hi, lo, -1):
        discarded += _svd_step(tensors, j, chi, cutoff)
    return discarded


def compress_sweep_left(list tensors, int lo, int hi, int chi, double cutoff):
    """Rank-revealing LQ sweep; sites whose rank exceeds ``chi`` use an SVD."""
    cdef double discarded = 0.0
    cdef double dropped, tot
    cdef int j
    for j in range(hi, lo, -1):
        y, x, dropped, tot = _split_right_qr(_c3(tensors[j]), cutoff)
        if chi > 0 and x.shape[1] > chi:
            discarded += _svd_step(tensors, j, chi, cutoff)
            continue
        if dropped > 0.0 and tot > 0.0:
            discarded += dropped / tot
        tensors[j] = y
        tensors[j - 1] = _absorb_right(tensors[j - 1], x)
    return discarded


def expectation_interval(list tensors, int lo, int hi, list ops):
    """``<M|O|M>`` for a product operator on ``[lo, hi]`` (center inside)."""
    cdef cnp.ndarray t, ot, env, nenv, tmp
    cdef int j, s, dl, dr, i
    cdef dc acc = 0
    t = _c3(tensors[lo])
    dl = t.shape[0]
    env = np.eye(dl, dtype=np.complex128)
    for j in range(lo, hi + 1):
        t = _c3(tensors[j])
        dl = t.shape[0]
        dr = t.shape[2]
        op = ops[j - lo]
        ot = t if op is None else apply_site(op, t)
        # column-major picture: E' = sum_s B_s^T E conj(A_s)
        tmp = _empty2(dl, dr)
        nenv = _empty2(dr, dr)
        for s in range(2):
            _gemm(b'N', b'N', dr, dl, dl, 1.0, (<dc*> ot.data) + s * dr, 2 * dr,
                  <dc*> env.data, dl, 0.0, <dc*> tmp.data, dr)
            _gemm(b'N', b'C', dr, dr, dl, 1.0, <dc*> tmp.data, dr,
                  (<dc*> t.data) + s * dr, 2 * dr, 1.0 if s else 0.0, <dc*> nenv.data, dr)
        env = nenv
    cdef dc* ep = <dc*> env.data
    for i in range(env.shape[0]):
        acc += ep[i * env.shape[0] + i]
    return complex(acc.real, acc.imag)


def apply_two_term(list tensors, int center, int lo, int hi, ca, a_ops, cb, b_ops, int chi, double cutoff):
    """Apply ``ca * A + cb * B`` on ``[lo, hi]``, recompress, center -> ``lo``."""
    cdef dc zca = ca, zcb = cb
    cdef cnp.ndarray t, ta, tb, blk
    cdef int j, dl, dr, a, s, b, idx, n
    cdef dc* bp
    cdef dc* pa
    cdef dc* pb
    cdef double nrm
    if hi == lo:
        t = _c3(tensors[lo])
        ta = t if a_ops[0] is None else apply_site(a_ops[0], t)
        tb = t if b_ops[0] is None else apply_site(b_ops[0], t)
        blk = _empty3(t.shape[0], 2, t.shape[2])
        n = t.shape[0] * 2 * t.shape[2]
        bp = <dc*> blk.data
        pa = <dc*> ta.data
        pb = <dc*> tb.data
        nrm = 0.0
        for idx in range(n):
            bp[idx] = zca * pa[idx] + zcb * pb[idx]
            nrm += _abs2(bp[idx])
        nrm = sqrt(nrm)
        for idx in range(n):
            bp[idx] = bp[idx] / nrm
        tensors[lo] = blk
        return 0.0

    for j in range(lo, hi + 1):
        t = _c3(tensors[j])
        dl = t.shape[0]
        dr = t.shape[2]
        ta = t if a_ops[j - lo] is None else apply_site(a_ops[j - lo], t)
        tb = t if b_ops[j - lo] is None else apply_site(b_ops[j - lo], t)
        pa = <dc*> ta.data
        pb = <dc*> tb.data
        if j == lo:
            blk = _empty3(dl, 2, 2 * dr)
            bp = <dc*> blk.data
            for a in range(2 * dl):
                for b in range(dr):
                    bp[a * 2 * dr + b] = zca * pa[a * dr + b]
                    bp[a * 2 * dr + dr + b] = zcb * pb[a * dr + b]
        elif j == hi:
            blk = _empty3(2 * dl, 2, dr)
            bp = <dc*> blk.data
            n = dl * 2 * dr
            memcpy(bp, pa, n * sizeof(dc))
            memcpy(bp + n, pb, n * sizeof(dc))
        else:
            blk = np.zeros((2 * dl, 2, 2 * dr), dtype=np.complex128)
            bp = <dc*> blk.data
            for a in range(dl):
                for s in range(2):
                    memcpy(bp + (a * 2 + s) * 2 * dr, pa + (a * 2 + s) * dr, dr * sizeof(dc))
                    memcpy(bp + ((a + dl) * 2 + s) * 2 * dr + dr, pb + (a * 2 + s) * dr,
                           dr * sizeof(dc))
        tensors[j] = blk

    cdef double discarded = 0.0, dropped, tot
    for j in range(lo, hi):
        q, r, dropped, tot = _split_left(<cnp.ndarray> tensors[j], cutoff)
        if dropped > 0.0 and tot > 0.0:
            discarded += dropped / tot
        tensors[j] = q
        tensors[j + 1] = _absorb_left(r, tensors[j + 1])
    discarded += compress_sweep_left(tensors, lo, hi, chi, cutoff)
    t = _c3(tensors[lo])
    n = t.shape[0] * 2 * t.shape[2]
    bp = <dc*> t.data
    nrm = 0.0
    for idx in range(n):
        nrm += _abs2(bp[idx])
    if nrm == 0.0:
        raise FloatingPointError("operator annihilated the state")
    nrm = sqrt(nrm)
    blk = _empty3(t.shape[0], 2, t.shape[2])
    pa = <dc*> blk.data
    for idx in range(n):
        pa[idx] = bp[idx] / nrm
    tensors[lo] = blk
    return discarded
