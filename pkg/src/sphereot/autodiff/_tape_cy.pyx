# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled tape executor: same op semantics as _tape_py, C loops + BLAS."""

from libc.math cimport exp, log, log1p, sqrt, acos, fabs
from scipy.linalg.cython_blas cimport dgemm

name = "compiled"


def prepare(program):
    return (program.instrs, program.aux, program.arena)


def run(prepared):
    instrs, aux, arena = prepared
    _run(instrs, aux, arena)


cdef inline double _softplus(double x) noexcept nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef void _run(const long long[:, ::1] instrs, const double[::1] aux,
               double[::1] arena) noexcept nogil:
    cdef Py_ssize_t idx, i, j
    cdef int op, m, n, k, mi, ni, ki
    cdef long long out, a, b
    cdef double c, acc, v
    cdef double one = 1.0, zero = 0.0
    cdef char cn = b'N', ct = b'T'
    cdef double *po
    cdef double *pa
    cdef double *pb

    for idx in range(instrs.shape[0]):
        op = <int> instrs[idx, 0]
        out = instrs[idx, 1]
        a = instrs[idx, 2]
        b = instrs[idx, 3]
        m = <int> instrs[idx, 4]
        n = <int> instrs[idx, 5]
        k = <int> instrs[idx, 6]
        c = aux[idx]
        po = &arena[out]
        pa = &arena[a]
        pb = &arena[b]

        if op == 1:    # out[m,n] = A[m,k] @ B[k,n]
            dgemm(&cn, &cn, &n, &m, &k, &one, pb, &n, pa, &k, &zero, po, &n)
        elif op == 2:  # out[m,n] = A[k,m]^T @ B[k,n]
            dgemm(&cn, &ct, &n, &m, &k, &one, pb, &n, pa, &m, &zero, po, &n)
        elif op == 3:  # out[m,n] = A[m,k] @ B[n,k]^T
            dgemm(&ct, &cn, &n, &m, &k, &one, pb, &k, pa, &k, &zero, po, &n)
        elif op == 4:
            for i in range(m * n):
                po[i] = pa[i] + pb[i]
        elif op == 5:
            for i in range(m * n):
                po[i] = pa[i] - pb[i]
        elif op == 6:
            for i in range(m * n):
                po[i] = pa[i] * pb[i]
        elif op == 7:
            for i in range(m * n):
                po[i] = -pa[i]
        elif op == 8:  # add_rowvec
            for i in range(m):
                for j in range(n):
                    po[i * n + j] = pa[i * n + j] + pb[j]
        elif op == 9:  # colsum over k input rows
            for j in range(n):
                acc = 0.0
                for i in range(k):
                    acc += pa[i * n + j]
                po[j] = acc
        elif op == 10:  # broadcast_rows
            for i in range(m):
                for j in range(n):
                    po[i * n + j] = pa[j]
        elif op == 11:  # scale_rows
            for i in range(m):
                v = pb[i]
                for j in range(n):
                    po[i * n + j] = pa[i * n + j] * v
        elif op == 12:  # dot_rows over k columns
            for i in range(m):
                acc = 0.0
                for j in range(k):
                    acc += pa[i * k + j] * pb[i * k + j]
                po[i] = acc
        elif op == 13:  # sum of k elements
            acc = 0.0
            for i in range(k):
                acc += pa[i]
            po[0] = acc
        elif op == 14:  # broadcast_fill
            v = pa[0]
            for i in range(m * n):
                po[i] = v
        elif op == 15:
            for i in range(m * n):
                po[i] = pa[i] * c
        elif op == 16:
            for i in range(m * n):
                po[i] = pa[i] + c
        elif op == 17:
            for i in range(m * n):
                po[i] = _softplus(pa[i])
        elif op == 18:
            for i in range(m * n):
                po[i] = _sigmoid(pa[i])
        elif op == 19:
            for i in range(m * n):
                po[i] = exp(pa[i])
        elif op == 20:
            for i in range(m * n):
                po[i] = log(pa[i])
        elif op == 21:
            for i in range(m * n):
                po[i] = sqrt(pa[i])
        elif op == 22:
            for i in range(m * n):
                po[i] = 1.0 / pa[i]
        elif op == 23:
            for i in range(m * n):
                po[i] = acos(pa[i])
        elif op == 24:
            for i in range(m * n):
                po[i] = pa[i] if pa[i] > c else c
        elif op == 25:
            for i in range(m * n):
                po[i] = pa[i] if pa[i] < c else c
        elif op == 26:
            for i in range(m * n):
                po[i] = 1.0 if pa[i] >= c else 0.0
        elif op == 27:
            for i in range(m * n):
                po[i] = 1.0 if pa[i] <= c else 0.0
        elif op == 28:  # clamp_away_zero
            for i in range(m * n):
                v = fabs(pa[i])
                if v < c:
                    v = c
                po[i] = v if pa[i] >= 0.0 else -v
        elif op == 29:  # away_mask
            for i in range(m * n):
                po[i] = 1.0 if fabs(pa[i]) >= c else 0.0
        elif op == 30:  # transpose of (n, m) input
            for i in range(m):
                for j in range(n):
                    po[i * n + j] = pa[j * m + i]
