# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Arithmetic order matches ``_pykernels`` term for term."""

import numpy as np

from libc.math cimport fabs, isnan, pow, sqrt


def var_distances(const double[:, ::1] A, const double[:, ::1] B, const int[::1] kinds,
                  const double[::1] theta, const double[::1] delta, bint symmetric=False):
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], nv = A.shape[1]
    out = np.zeros((nv, na, nb), dtype=np.float64)
    cdef double[:, :, ::1] D = out
    cdef Py_ssize_t v, i, j, j0
    cdef double a, b, d
    cdef int kind
    for v in range(nv):
        kind = kinds[v]
        for i in range(na):
            j0 = i if symmetric else 0
            for j in range(j0, nb):
                a = A[i, v]
                b = B[j, v]
                if isnan(a):
                    d = 0.0 if isnan(b) else delta[v]
                elif isnan(b):
                    d = delta[v]
                elif kind == 0:
                    d = theta[v] * (fabs(a - b) / (sqrt(a * a + 1.0) * sqrt(b * b + 1.0)))
                elif kind == 1:
                    d = 0.0 if a == b else theta[v]
                else:
                    d = theta[v] * fabs(a - b)
                D[v, i, j] = d
                if symmetric:
                    D[v, j, i] = d
    return out


def weighted_sum(const double[:, :, ::1] T, const double[::1] weights, bint squared=False):
    cdef Py_ssize_t m = T.shape[0], na = T.shape[1], nb = T.shape[2]
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] K = out
    cdef Py_ssize_t k, i, j
    cdef double acc, t
    for i in range(na):
        for j in range(nb):
            acc = 0.0
            for k in range(m):
                t = T[k, i, j]
                if squared:
                    t = t * t
                acc += weights[k] * t
            K[i, j] = acc
    return out


def minkowski(const double[:, :, ::1] D, double p):
    cdef Py_ssize_t m = D.shape[0], na = D.shape[1], nb = D.shape[2]
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] R = out
    cdef Py_ssize_t k, i, j
    cdef double acc, t
    for i in range(na):
        for j in range(nb):
            acc = 0.0
            for k in range(m):
                t = D[k, i, j]
                if p == 1.0:
                    acc += t
                elif p == 2.0:
                    acc += t * t
                else:
                    acc += pow(t, p)
            if p == 1.0:
                R[i, j] = acc
            elif p == 2.0:
                R[i, j] = sqrt(acc)
            else:
                R[i, j] = pow(acc, 1.0 / p)
    return out


def forward_reduce(const double[:, ::1] L, const double[:, ::1] Kc, const double[::1] alpha):
    """Return ``(Kc.T @ alpha, column sums of (L^-1 Kc)**2)`` with fixed summation order."""
    cdef Py_ssize_t n = L.shape[0], m = Kc.shape[1]
    mean = np.empty(m, dtype=np.float64)
    sq = np.empty(m, dtype=np.float64)
    work = np.empty(n, dtype=np.float64)
    cdef double[::1] mu = mean, s2 = sq, v = work
    cdef Py_ssize_t c, i, j
    cdef double acc, s
    for c in range(m):
        acc = 0.0
        for j in range(n):
            acc += alpha[j] * Kc[j, c]
        mu[c] = acc
        acc = 0.0
        for i in range(n):
            s = Kc[i, c]
            for j in range(i):
                s -= L[i, j] * v[j]
            v[i] = s / L[i, i]
            acc += v[i] * v[i]
        s2[c] = acc
    return mean, sq
