# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: word-tree enumeration and spectral radii.

Mirror of ``_kernels_py``; every function takes and returns the same values.
The enumeration runs without the GIL so callers may partition first digits
across threads.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, fabs, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()

cdef enum:
    SQUARINGS = 60

cdef double FIXED_POINT_TOL = 1e-15


cdef inline double _norm1(const double* A, Py_ssize_t n) noexcept nogil:
    cdef double best = 0.0, s
    cdef Py_ssize_t i, j
    for j in range(n):
        s = 0.0
        for i in range(n):
            s += fabs(A[i * n + j])
        if s > best:
            best = s
    return best


cdef inline double _norminf(const double* A, Py_ssize_t n) noexcept nogil:
    cdef double best = 0.0, s
    cdef Py_ssize_t i, j
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += fabs(A[i * n + j])
        if s > best:
            best = s
    return best


cdef inline void _matmul(const double* A, const double* B, double* C, Py_ssize_t n) noexcept nogil:
    # C = A @ B, row-major
    cdef Py_ssize_t i, j, l
    cdef double a
    for i in range(n * n):
        C[i] = 0.0
    for i in range(n):
        for l in range(n):
            a = A[i * n + l]
            if a != 0.0:
                for j in range(n):
                    C[i * n + j] += a * B[l * n + j]


cdef inline void _scale(double* A, double c, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n * n):
        A[i] *= c


cdef double _log_rho(const double* A, Py_ssize_t n, double* w1, double* w2) noexcept nogil:
    """log spectral radius by scaled repeated squaring; -inf when nilpotent."""
    cdef double lr = 0.0, scale = 1.0, c, lam, diff, t
    cdef double* B = w1
    cdef double* B2 = w2
    cdef double* tmp
    cdef Py_ssize_t it, i
    memcpy(B, A, n * n * sizeof(double))
    for it in range(SQUARINGS):
        c = _norm1(B, n)
        if c <= 0.0:
            return -INFINITY
        lr += scale * log(c)
        _scale(B, 1.0 / c, n)
        _matmul(B, B, B2, n)
        lam = _norm1(B2, n)
        if lam <= 0.0:
            return -INFINITY
        diff = 0.0
        for i in range(n * n):
            t = fabs(B2[i] / lam - B[i])
            if t > diff:
                diff = t
        if diff <= FIXED_POINT_TOL:
            # every later normalized squaring has norm lam
            return lr + scale * log(lam)
        tmp = B
        B = B2
        B2 = tmp
        scale *= 0.5
    c = _norm1(B, n)
    if c <= 0.0:
        return -INFINITY
    return lr + scale * log(c)


def log_spectral_radius(A):
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef double* w1 = <double*>malloc(n * n * sizeof(double))
    cdef double* w2 = <double*>malloc(n * n * sizeof(double))
    cdef double r
    try:
        r = _log_rho(&a[0, 0], n, w1, w2)
    finally:
        free(w1)
        free(w2)
    return r


def batch_log_spectral_radius(A):
    cdef const double[:, :, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t N = a.shape[0], n = a.shape[1], i
    out = np.empty(N)
    cdef double[::1] o = out
    cdef double* w1 = <double*>malloc(n * n * sizeof(double))
    cdef double* w2 = <double*>malloc(n * n * sizeof(double))
    try:
        with nogil:
            for i in range(N):
                o[i] = _log_rho(&a[i, 0, 0], n, w1, w2)
    finally:
        free(w1)
        free(w2)
    return out


def batch_products(mats, words):
    cdef const double[:, :, ::1] M = np.ascontiguousarray(mats, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] W = np.ascontiguousarray(words, dtype=np.int64)
    cdef Py_ssize_t N = W.shape[0], k = W.shape[1], n = M.shape[1], r, i, j
    logs_a = np.zeros(N)
    P_a = np.zeros((N, n, n))
    cdef double[::1] logs = logs_a
    cdef double[:, :, ::1] P = P_a
    cdef double* cur = <double*>malloc(n * n * sizeof(double))
    cdef double* nxt = <double*>malloc(n * n * sizeof(double))
    cdef double* tmp
    cdef double c, acc
    try:
        with nogil:
            for r in range(N):
                for i in range(n * n):
                    cur[i] = 0.0
                for i in range(n):
                    cur[i * n + i] = 1.0
                acc = 0.0
                for i in range(k):
                    _matmul(&M[W[r, i], 0, 0], cur, nxt, n)
                    c = _norm1(nxt, n)
                    if c > 0.0:
                        _scale(nxt, 1.0 / c, n)
                        acc += log(c)
                    else:
                        acc = -INFINITY
                    tmp = cur
                    cur = nxt
                    nxt = tmp
                logs[r] = acc
                memcpy(&P[r, 0, 0], cur, n * n * sizeof(double))
    finally:
        free(cur)
        free(nxt)
    return logs_a, P_a


def neg_log_norms(mats, words):
    logs, _ = batch_products(mats, words)
    return -logs


cdef struct Walk:
    const double* mats
    Py_ssize_t n
    Py_ssize_t n_dig
    Py_ssize_t k
    double* P          # (k + 1) * n * n normalized products by depth
    double* logs       # (k + 1) log scales
    double* logw       # (k + 1) accumulated log weights
    const double* logp
    const double* tail
    bint prune
    double* w1
    double* w2
    double best_rho
    double best_norm
    double total
    long long leaves


cdef inline bint _extend(Walk* s, Py_ssize_t depth, Py_ssize_t c) noexcept nogil:
    # P[depth + 1] = M_c @ P[depth]; False when the product vanishes
    cdef Py_ssize_t nn = s.n * s.n
    cdef double* dst = s.P + (depth + 1) * nn
    cdef double nrm
    _matmul(s.mats + c * nn, s.P + depth * nn, dst, s.n)
    nrm = _norm1(dst, s.n)
    if nrm <= 0.0:
        return False
    _scale(dst, 1.0 / nrm, s.n)
    s.logs[depth + 1] = s.logs[depth] + log(nrm)
    if s.logp != NULL:
        s.logw[depth + 1] = s.logw[depth] + s.logp[c]
    return True


cdef void _dfs_max(Walk* s, Py_ssize_t depth) noexcept nogil:
    cdef Py_ssize_t c, nn = s.n * s.n
    cdef double bound, r, ninf
    cdef double* leaf
    if depth == s.k:
        s.leaves += 1
        if s.logs[depth] > s.best_norm:
            s.best_norm = s.logs[depth]
        leaf = s.P + depth * nn
        ninf = _norminf(leaf, s.n)
        bound = s.logs[depth] + (log(ninf) if ninf < 1.0 else 0.0)
        if bound > s.best_rho:
            r = s.logs[depth] + _log_rho(leaf, s.n, s.w1, s.w2)
            if r > s.best_rho:
                s.best_rho = r
        return
    for c in range(s.n_dig):
        if not _extend(s, depth, c):
            continue
        if s.prune and s.logs[depth + 1] + s.tail[s.k - depth - 1] <= s.best_rho:
            continue
        _dfs_max(s, depth + 1)


cdef void _dfs_min(Walk* s, Py_ssize_t depth) noexcept nogil:
    cdef Py_ssize_t c, i, j, nn = s.n * s.n
    cdef double lower, t, r
    cdef double* leaf
    if depth == s.k:
        s.leaves += 1
        leaf = s.P + depth * nn
        # rho >= max diagonal entry, min row sum and min column sum
        lower = 0.0
        for i in range(s.n):
            if leaf[i * s.n + i] > lower:
                lower = leaf[i * s.n + i]
        t = INFINITY
        for i in range(s.n):
            r = 0.0
            for j in range(s.n):
                r += leaf[i * s.n + j]
            if r < t:
                t = r
        if t > lower:
            lower = t
        t = INFINITY
        for j in range(s.n):
            r = 0.0
            for i in range(s.n):
                r += leaf[i * s.n + j]
            if r < t:
                t = r
        if t > lower:
            lower = t
        if lower > 0.0 and s.logs[depth] + log(lower) >= s.best_rho:
            return
        r = s.logs[depth] + _log_rho(leaf, s.n, s.w1, s.w2)
        if r < s.best_rho:
            s.best_rho = r
        return
    for c in range(s.n_dig):
        if not _extend(s, depth, c):
            if -INFINITY < s.best_rho:
                s.best_rho = -INFINITY
            continue
        _dfs_min(s, depth + 1)


cdef void _dfs_lyap(Walk* s, Py_ssize_t depth) noexcept nogil:
    cdef Py_ssize_t c
    if depth == s.k:
        s.leaves += 1
        s.total += exp(s.logw[depth]) * (-s.logs[depth])
        return
    for c in range(s.n_dig):
        if not _extend(s, depth, c):
            s.total = INFINITY
            continue
        _dfs_lyap(s, depth + 1)


cdef Walk* _walk_new(const double[:, :, ::1] M, Py_ssize_t k) except NULL:
    cdef Walk* s = <Walk*>malloc(sizeof(Walk))
    cdef Py_ssize_t n = M.shape[1], i
    s.mats = &M[0, 0, 0]
    s.n = n
    s.n_dig = M.shape[0]
    s.k = k
    s.P = <double*>malloc((k + 1) * n * n * sizeof(double))
    s.logs = <double*>malloc((k + 1) * sizeof(double))
    s.logw = <double*>malloc((k + 1) * sizeof(double))
    s.w1 = <double*>malloc(n * n * sizeof(double))
    s.w2 = <double*>malloc(n * n * sizeof(double))
    s.logp = NULL
    s.tail = NULL
    s.prune = False
    s.best_rho = -INFINITY
    s.best_norm = -INFINITY
    s.total = 0.0
    s.leaves = 0
    for i in range(n * n):
        s.P[i] = 0.0
    for i in range(n):
        s.P[i * n + i] = 1.0
    s.logs[0] = 0.0
    s.logw[0] = 0.0
    return s


cdef void _walk_free(Walk* s) noexcept:
    free(s.P)
    free(s.logs)
    free(s.logw)
    free(s.w1)
    free(s.w2)
    free(s)


def word_extremes(mats, Py_ssize_t k, first_digits, bint prune=False, tail=None):
    cdef const double[:, :, ::1] M = np.ascontiguousarray(mats, dtype=np.float64)
    cdef const cnp.int64_t[::1] first = np.ascontiguousarray(first_digits, dtype=np.int64)
    cdef const double[::1] tl = np.ascontiguousarray(
        tail if tail is not None else np.zeros(k + 1), dtype=np.float64)
    cdef Walk* s = _walk_new(M, k)
    cdef Py_ssize_t f
    try:
        s.prune = prune
        s.tail = &tl[0]
        with nogil:
            for f in range(first.shape[0]):
                if not _extend(s, 0, first[f]):
                    continue
                _dfs_max(s, 1)
        return s.best_rho, s.best_norm, s.leaves
    finally:
        _walk_free(s)


def word_min_rho(mats, Py_ssize_t k, first_digits):
    cdef const double[:, :, ::1] M = np.ascontiguousarray(mats, dtype=np.float64)
    cdef const cnp.int64_t[::1] first = np.ascontiguousarray(first_digits, dtype=np.int64)
    cdef Walk* s = _walk_new(M, k)
    cdef Py_ssize_t f
    try:
        s.best_rho = INFINITY
        with nogil:
            for f in range(first.shape[0]):
                if not _extend(s, 0, first[f]):
                    s.best_rho = -INFINITY
                    continue
                _dfs_min(s, 1)
        return s.best_rho
    finally:
        _walk_free(s)


def lyapunov_exact(mats, logp, Py_ssize_t k, first_digits):
    cdef const double[:, :, ::1] M = np.ascontiguousarray(mats, dtype=np.float64)
    cdef const double[::1] lp = np.ascontiguousarray(logp, dtype=np.float64)
    cdef const cnp.int64_t[::1] first = np.ascontiguousarray(first_digits, dtype=np.int64)
    cdef Walk* s = _walk_new(M, k)
    cdef Py_ssize_t f
    try:
        s.logp = &lp[0]
        with nogil:
            for f in range(first.shape[0]):
                if not _extend(s, 0, first[f]):
                    s.total = INFINITY
                    continue
                _dfs_lyap(s, 1)
        return s.total
    finally:
        _walk_free(s)
