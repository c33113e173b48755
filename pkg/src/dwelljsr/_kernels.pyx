# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: simplex pivoting and product enumeration.

Semantics match ``_pykernels`` exactly; see that module for documentation.
"""
import numpy as np

from libc.math cimport sqrt, fabs, hypot, log, exp
from scipy.linalg.cython_lapack cimport dgeev, dsyev

cdef enum:
    OPTIMAL = 0
    UNBOUNDED = 1
    ITERATION_LIMIT = 2


cdef int _simplex(double[:, ::1] T, Py_ssize_t[::1] basis, Py_ssize_t n_enter,
                  Py_ssize_t max_iter, double opttol, double pivtol,
                  Py_ssize_t dantzig_limit, Py_ssize_t *iters_out) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t ncol = T.shape[1]
    cdef Py_ssize_t rhs = ncol - 1
    cdef Py_ssize_t iters = 0
    cdef Py_ssize_t i, j, k, r, jj
    cdef double cmin, ratio, best, f, piv, tol
    while iters < max_iter:
        j = -1
        if iters < dantzig_limit:
            cmin = -opttol
            for jj in range(n_enter):
                if T[m, jj] < cmin:
                    cmin = T[m, jj]
                    j = jj
        else:
            for jj in range(n_enter):
                if T[m, jj] < -opttol:
                    j = jj
                    break
        if j < 0:
            iters_out[0] = iters
            return OPTIMAL
        # ratio test, ties broken by the smallest basic index
        r = -1
        best = 0.0
        for i in range(m):
            if T[i, j] > pivtol:
                ratio = T[i, rhs] / T[i, j]
                if r < 0 or ratio < best:
                    best = ratio
                    r = i
        if r < 0:
            iters_out[0] = iters
            return UNBOUNDED
        tol = best + 1e-12 * (fabs(best) if fabs(best) > 1.0 else 1.0)
        for i in range(m):
            if T[i, j] > pivtol:
                ratio = T[i, rhs] / T[i, j]
                if ratio <= tol and basis[i] < basis[r]:
                    r = i
        piv = T[r, j]
        for k in range(ncol):
            T[r, k] /= piv
        for i in range(m + 1):
            if i == r:
                continue
            f = T[i, j]
            if f != 0.0:
                for k in range(ncol):
                    T[i, k] -= f * T[r, k]
        basis[r] = j
        iters += 1
    iters_out[0] = iters
    return ITERATION_LIMIT


def simplex_iterate(double[:, ::1] T, Py_ssize_t[::1] basis, Py_ssize_t n_enter,
                    Py_ssize_t max_iter, double opttol, double pivtol,
                    Py_ssize_t dantzig_limit):
    cdef Py_ssize_t iters = 0
    cdef int status
    with nogil:
        status = _simplex(T, basis, n_enter, max_iter, opttol, pivtol, dantzig_limit, &iters)
    return status, iters


cdef class _Work:
    """Scratch space for LAPACK calls on d x d matrices."""
    cdef int d, lwork
    cdef double[::1] a, wr, wi, work
    cdef double[::1] dummy

    def __init__(self, int d):
        self.d = d
        self.lwork = 8 * d + 8
        self.a = np.empty(d * d)
        self.wr = np.empty(d)
        self.wi = np.empty(d)
        self.work = np.empty(self.lwork)
        self.dummy = np.empty(1)


cdef double _radius(const double *M, int d, _Work w):
    cdef double a, b, c, e, h, disc, best, mod
    cdef int i, info, one = 1, n = d, lwork = w.lwork
    cdef char jobn = b'N'
    if d == 1:
        return fabs(M[0])
    if d == 2:
        a = M[0]; b = M[1]; c = M[2]; e = M[3]
        h = 0.5 * (a + e)
        disc = (0.5 * (a - e)) * (0.5 * (a - e)) + b * c
        if disc >= 0.0:
            return fabs(h) + sqrt(disc)
        return sqrt(fabs(a * e - b * c))
    for i in range(d * d):
        w.a[i] = M[i]
    dgeev(&jobn, &jobn, &n, &w.a[0], &n, &w.wr[0], &w.wi[0], &w.dummy[0], &one,
          &w.dummy[0], &one, &w.work[0], &lwork, &info)
    best = 0.0
    for i in range(d):
        mod = hypot(w.wr[i], w.wi[i])
        if mod > best:
            best = mod
    return best


cdef double _norm(const double *M, int d, _Work w):
    cdef double a, b, c, e, s, best
    cdef int i, j, k, info, n = d, lwork = w.lwork
    cdef char jobn = b'N'
    cdef char uplo = b'U'
    if d == 1:
        return fabs(M[0])
    if d == 2:
        a = M[0]; b = M[1]; c = M[2]; e = M[3]
        return 0.5 * (hypot(a + e, b - c) + hypot(a - e, b + c))
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += M[k * d + i] * M[k * d + j]
            w.a[i * d + j] = s
    dsyev(&jobn, &uplo, &n, &w.a[0], &n, &w.wr[0], &w.work[0], &lwork, &info)
    best = w.wr[d - 1]
    return sqrt(best) if best > 0.0 else 0.0


cdef inline void _matmul(const double *A, const double *B, double *C, int d) noexcept nogil:
    cdef int i, j, k
    cdef double s
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += A[i * d + k] * B[k * d + j]
            C[i * d + j] = s


cdef inline double _root(double value, double weight) noexcept nogil:
    if value <= 0.0:
        return 0.0
    return exp(log(value) / weight)


def paths_max_norm(double[:, :, ::1] mats, double[::1] weights, Py_ssize_t[::1] tails,
                   Py_ssize_t[::1] heads, Py_ssize_t k):
    cdef int E = mats.shape[0]
    cdef int d = mats.shape[1]
    cdef int dd = d * d
    if k < 1:
        return -1.0, ()
    cdef double[:, ::1] prods = np.zeros((k + 1, dd))
    cdef Py_ssize_t[::1] word = np.zeros(k, dtype=np.intp)
    cdef Py_ssize_t[::1] best_word = np.zeros(k, dtype=np.intp)
    cdef Py_ssize_t[::1] nxt = np.zeros(k + 1, dtype=np.intp)
    cdef double[::1] wsum = np.zeros(k + 1)
    cdef double best = -1.0, v
    cdef int i, t, e
    cdef _Work w = _Work(d)
    for i in range(d):
        prods[0, i * d + i] = 1.0
    t = 0
    nxt[0] = 0
    while t >= 0:
        e = nxt[t]
        if e >= E:
            t -= 1
            continue
        nxt[t] = e + 1
        if t > 0 and tails[e] != heads[word[t - 1]]:
            continue
        word[t] = e
        _matmul(&mats[e, 0, 0], &prods[t, 0], &prods[t + 1, 0], d)
        wsum[t + 1] = wsum[t] + weights[e]
        if t + 1 == k:
            v = _root(_norm(&prods[t + 1, 0], d, w), wsum[t + 1])
            if v > best:
                best = v
                best_word[:] = word
        else:
            t += 1
            nxt[t] = 0
    return best, tuple(best_word)


def closed_path_search(double[:, :, ::1] mats, double[::1] weights, Py_ssize_t[::1] tails,
                       Py_ssize_t[::1] heads, Py_ssize_t max_len, double max_weight,
                       double tie_rtol, Py_ssize_t max_nodes):
    cdef int E = mats.shape[0]
    cdef int d = mats.shape[1]
    cdef int dd = d * d
    if max_len < 1:
        return -1.0, [], 0, False
    cdef double[:, ::1] prods = np.zeros((max_len + 1, dd))
    cdef Py_ssize_t[::1] a = np.zeros(max_len + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] per = np.zeros(max_len + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] nxt = np.zeros(max_len + 2, dtype=np.intp)
    cdef double[::1] wsum = np.zeros(max_len + 1)
    cdef double limit = max_weight + 1e-12
    cdef double best = -1.0, v, wt, cut
    cdef Py_ssize_t nodes = 0
    cdef bint truncated = False
    cdef int i, t, c, p, q
    cdef _Work w = _Work(d)
    hits = []
    for i in range(d):
        prods[0, i * d + i] = 1.0
    # level t chooses a[t]; per[t - 1] is the period of the prefix a[1..t-1]
    t = 1
    per[0] = 1
    nxt[1] = 0
    while t >= 1:
        c = nxt[t]
        if c >= E:
            t -= 1
            continue
        nxt[t] = c + 1
        p = per[t - 1]
        if t > 1 and c < a[t - p]:
            continue
        if t > 1 and tails[c] != heads[a[t - 1]]:
            continue
        wt = wsum[t - 1] + weights[c]
        if wt > limit:
            continue
        if nodes >= max_nodes:
            truncated = True
            break
        nodes += 1
        a[t] = c
        wsum[t] = wt
        _matmul(&mats[c, 0, 0], &prods[t - 1, 0], &prods[t, 0], d)
        q = p if (t > 1 and c == a[t - p]) else t
        per[t] = q
        if q == t and heads[c] == tails[a[1]]:
            v = _root(_radius(&prods[t, 0], d, w), wt)
            if v > best:
                best = v
                cut = v * (1.0 - tie_rtol)
                hits = [h for h in hits if h[0] >= cut]
                hits.append((v, tuple(a[1 : t + 1])))
            elif v >= best * (1.0 - tie_rtol):
                hits.append((v, tuple(a[1 : t + 1])))
        if t < max_len:
            t += 1
            nxt[t] = 0
    cut = best * (1.0 - tie_rtol)
    words = [h[1] for h in hits if h[0] >= cut]
    return best, words, nodes, truncated
