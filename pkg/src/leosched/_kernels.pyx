# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_kernels_py``; results are bit-identical."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free, qsort
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


def dtw_distance(a, b):
    cdef double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] B = np.ascontiguousarray(b, dtype=np.float64)
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("empty sequence")
    return _dtw(A, B)


cdef double _dtw(double[:, ::1] A, double[:, ::1] B):
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], i, j
    cdef double *prev = <double *> malloc(m * sizeof(double))
    cdef double *cur = <double *> malloc(m * sizeof(double))
    cdef double *tmp
    cdef double dx, dy, c, best, out
    for i in range(n):
        for j in range(m):
            dx = A[i, 0] - B[j, 0]
            dy = A[i, 1] - B[j, 1]
            c = sqrt(dx * dx + dy * dy)
            if i == 0 and j == 0:
                best = 0.0
            elif i == 0:
                best = cur[j - 1]
            elif j == 0:
                best = prev[j]
            else:
                best = prev[j - 1]
                if prev[j] < best:
                    best = prev[j]
                if cur[j - 1] < best:
                    best = cur[j - 1]
            cur[j] = c + best
        tmp = prev
        prev = cur
        cur = tmp
    out = prev[m - 1]
    free(prev)
    free(cur)
    return out


def dtw_many(a, cands):
    cdef double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, :, ::1] C = np.ascontiguousarray(cands, dtype=np.float64)
    cdef Py_ssize_t k, K = C.shape[0]
    out = np.empty(K, dtype=np.float64)
    cdef double[::1] O = out
    for k in range(K):
        O[k] = _dtw(A, C[k])
    return out


# ------------------------------------------------------------------ trees

cdef struct ValCls:
    double v
    int c


cdef int _cmp_valcls(const void *a, const void *b) noexcept nogil:
    cdef double x = (<ValCls *> a).v
    cdef double y = (<ValCls *> b).v
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


cdef inline uint64_t _splitmix(uint64_t *state) noexcept nogil:
    state[0] += <uint64_t> 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t> 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t> 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef class _TreeBuilder:
    cdef double[:, ::1] X
    cdef int[::1] y
    cdef int n_classes, n_features, max_depth, min_samples_split, max_features
    cdef uint64_t state
    cdef list feature, threshold, left, right, leaf_start, leaf_len, leaf_class, leaf_count
    cdef int *perm
    cdef ValCls *buf
    cdef int64_t *cnt_l
    cdef int64_t *cnt_r
    cdef int64_t *counts

    def __cinit__(self, X, y, int n_classes, int max_depth, int min_samples_split, int max_features, uint64_t seed, Py_ssize_t n_buf):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.y = np.ascontiguousarray(y, dtype=np.int32)
        self.n_classes = n_classes
        self.n_features = self.X.shape[1]
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.state = seed
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.leaf_start = []
        self.leaf_len = []
        self.leaf_class = []
        self.leaf_count = []
        self.perm = <int *> malloc(self.n_features * sizeof(int))
        for i in range(self.n_features):
            self.perm[i] = i
        self.buf = <ValCls *> malloc(max(1, n_buf) * sizeof(ValCls))
        self.cnt_l = <int64_t *> malloc(n_classes * sizeof(int64_t))
        self.cnt_r = <int64_t *> malloc(n_classes * sizeof(int64_t))
        self.counts = <int64_t *> malloc(n_classes * sizeof(int64_t))

    def __dealloc__(self):
        free(self.perm)
        free(self.buf)
        free(self.cnt_l)
        free(self.cnt_r)
        free(self.counts)

    cdef void _leaf(self, int node, int64_t *counts):
        cdef int c, k = 0
        self.feature[node] = -1
        self.leaf_start[node] = len(self.leaf_class)
        for c in range(self.n_classes):
            if counts[c] > 0:
                self.leaf_class.append(c)
                self.leaf_count.append(counts[c])
                k += 1
        self.leaf_len[node] = k

    cdef int grow(self, cnp.intp_t[::1] idx, int depth):
        cdef int node = len(self.feature)
        cdef Py_ssize_t n = idx.shape[0], p, i, j
        cdef int c, f, nz = 0, best_f = -1, visited = 0, tmp
        cdef double best_score = -1.0, best_t = 0.0, score, v, lo, hi
        cdef int64_t sq_l, sq_r, nl
        cdef int64_t *counts = <int64_t *> malloc(self.n_classes * sizeof(int64_t))
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_start.append(0)
        self.leaf_len.append(0)
        for c in range(self.n_classes):
            counts[c] = 0
        for p in range(n):
            counts[self.y[idx[p]]] += 1
        for c in range(self.n_classes):
            if counts[c] > 0:
                nz += 1
        if nz <= 1 or n < self.min_samples_split or (self.max_depth >= 0 and depth >= self.max_depth):
            self._leaf(node, counts)
            free(counts)
            return node

        for i in range(self.n_features):
            if visited >= self.max_features:
                break
            j = i + <Py_ssize_t> (_splitmix(&self.state) % <uint64_t> (self.n_features - i))
            tmp = self.perm[i]
            self.perm[i] = self.perm[j]
            self.perm[j] = tmp
            f = self.perm[i]
            lo = self.X[idx[0], f]
            hi = lo
            for p in range(1, n):
                v = self.X[idx[p], f]
                if v < lo:
                    lo = v
                elif v > hi:
                    hi = v
            if lo == hi:
                continue
            for p in range(n):
                self.buf[p].v = self.X[idx[p], f]
                self.buf[p].c = self.y[idx[p]]
            qsort(self.buf, n, sizeof(ValCls), _cmp_valcls)
            visited += 1
            sq_l = 0
            sq_r = 0
            for c in range(self.n_classes):
                self.cnt_l[c] = 0
                self.cnt_r[c] = counts[c]
                sq_r += counts[c] * counts[c]
            for p in range(n - 1):
                c = self.buf[p].c
                sq_l += 2 * self.cnt_l[c] + 1
                self.cnt_l[c] += 1
                sq_r -= 2 * self.cnt_r[c] - 1
                self.cnt_r[c] -= 1
                if self.buf[p].v == self.buf[p + 1].v:
                    continue
                nl = p + 1
                score = (<double> sq_l) / (<double> nl) + (<double> sq_r) / (<double> (n - nl))
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_t = 0.5 * (self.buf[p].v + self.buf[p + 1].v)

        if best_f < 0:
            self._leaf(node, counts)
            free(counts)
            return node
        free(counts)
        cdef Py_ssize_t nleft = 0
        for p in range(n):
            if self.X[idx[p], best_f] <= best_t:
                nleft += 1
        left_idx = np.empty(nleft, dtype=np.intp)
        right_idx = np.empty(n - nleft, dtype=np.intp)
        cdef cnp.intp_t[::1] L = left_idx
        cdef cnp.intp_t[::1] R = right_idx
        cdef Py_ssize_t a = 0, b = 0
        for p in range(n):
            if self.X[idx[p], best_f] <= best_t:
                L[a] = idx[p]
                a += 1
            else:
                R[b] = idx[p]
                b += 1
        self.feature[node] = best_f
        self.threshold[node] = best_t
        self.left[node] = self.grow(L, depth + 1)
        self.right[node] = self.grow(R, depth + 1)
        return node


def build_tree(X, y, samples, int n_classes, int max_depth, int min_samples_split, int max_features, seed):
    cdef uint64_t s = <uint64_t> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef cnp.intp_t[::1] idx = np.ascontiguousarray(samples, dtype=np.intp)
    builder = _TreeBuilder(X, y, n_classes, max_depth, min_samples_split, max_features, s, idx.shape[0])
    (<_TreeBuilder> builder).grow(idx, 0)
    b = <_TreeBuilder> builder
    return (
        np.array(b.feature, dtype=np.int32),
        np.array(b.threshold, dtype=np.float64),
        np.array(b.left, dtype=np.int32),
        np.array(b.right, dtype=np.int32),
        np.array(b.leaf_start, dtype=np.int32),
        np.array(b.leaf_len, dtype=np.int32),
        np.array(b.leaf_class, dtype=np.int32),
        np.array(b.leaf_count, dtype=np.int32),
    )
