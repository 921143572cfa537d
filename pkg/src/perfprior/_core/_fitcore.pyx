# Leave-one-out scoring kernel for hypothesis search.
#
# Receives column-scaled design matrices; for every hypothesis it forms the
# normal system once and downdates it per fold. Folds whose Cholesky pivot
# falls below the guard mark the hypothesis not-ok so the caller can rescore
# it on the exact (SVD) path. Semantics match _fallback.loo_cv_batch.

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF MAX_K = 16
DEF PIVOT_GUARD = 1e-10


cdef inline bint _cholesky_solve(double* g, double* b, double* x, int k) noexcept nogil:
    # In-place Cholesky of g (k x k, row-major) and solve g x = b.
    cdef int i, j, l
    cdef double s
    for i in range(k):
        for j in range(i, k):
            s = g[i * k + j]
            for l in range(i):
                s -= g[i * k + l] * g[j * k + l]
            if i == j:
                if s < PIVOT_GUARD:
                    return False
                g[i * k + i] = s ** 0.5
            else:
                g[j * k + i] = s / g[i * k + i]
    # forward substitution: L z = b
    for i in range(k):
        s = b[i]
        for l in range(i):
            s -= g[i * k + l] * x[l]
        x[i] = s / g[i * k + i]
    # back substitution: L^T x = z
    for i in range(k - 1, -1, -1):
        s = x[i]
        for l in range(i + 1, k):
            s -= g[l * k + i] * x[l]
        x[i] = s / g[i * k + i]
    return True


def loo_cv_batch(a_stack, y):
    """Mean symmetric relative LOO error per hypothesis; see _fallback."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] a = np.ascontiguousarray(
        a_stack, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] yv = np.ascontiguousarray(
        y, dtype=np.float64
    )
    cdef Py_ssize_t h = a.shape[0], n = a.shape[1], k = a.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scores = np.full(h, np.nan)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.zeros(h, dtype=np.uint8)
    if k > MAX_K or n < 1:
        return scores, ok.view(bool)

    cdef double gram[MAX_K * MAX_K]
    cdef double rhs[MAX_K]
    cdef double g_fold[MAX_K * MAX_K]
    cdef double b_fold[MAX_K]
    cdef double coef[MAX_K]
    cdef Py_ssize_t hi, i, r, c
    cdef double acc, pred, denom, yi, err
    cdef bint good
    cdef double* row

    with nogil:
        for hi in range(h):
            for r in range(k):
                rhs[r] = 0.0
                for c in range(k):
                    gram[r * k + c] = 0.0
            for i in range(n):
                row = &a[hi, i, 0]
                yi = yv[i]
                for r in range(k):
                    rhs[r] += row[r] * yi
                    for c in range(r, k):
                        gram[r * k + c] += row[r] * row[c]
            for r in range(k):
                for c in range(r):
                    gram[r * k + c] = gram[c * k + r]
            err = 0.0
            good = True
            for i in range(n):
                row = &a[hi, i, 0]
                yi = yv[i]
                for r in range(k):
                    b_fold[r] = rhs[r] - row[r] * yi
                    for c in range(k):
                        g_fold[r * k + c] = gram[r * k + c] - row[r] * row[c]
                if not _cholesky_solve(g_fold, b_fold, coef, <int>k):
                    good = False
                    break
                pred = 0.0
                for r in range(k):
                    pred += row[r] * coef[r]
                denom = (yi if yi >= 0 else -yi) + (pred if pred >= 0 else -pred)
                if denom > 0:
                    acc = pred - yi
                    err += (acc if acc >= 0 else -acc) / denom
            if good:
                scores[hi] = err / n
                ok[hi] = 1
    return scores, ok.view(bool)
