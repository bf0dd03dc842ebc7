# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference numpy versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def window_profile_integrals(levels, double halfwidth):
    cdef const double[::1] s = np.ascontiguousarray(levels, dtype=np.float64)
    cdef Py_ssize_t K = s.shape[0]
    cdef Py_ssize_t i = 0, j = 0
    cdef long cnt = 0
    cdef double prev, x, w, tot1 = 0.0, tot2 = 0.0
    if K == 0:
        return 0.0, 0.0
    prev = s[0] - halfwidth
    # merge of the sorted opening edges s-h and closing edges s+h
    while j < K:
        if i < K and s[i] - halfwidth <= s[j] + halfwidth:
            x = s[i] - halfwidth
            w = x - prev
            tot1 += cnt * w
            tot2 += <double>cnt * cnt * w
            prev = x
            cnt += 1
            i += 1
        else:
            x = s[j] + halfwidth
            w = x - prev
            tot1 += cnt * w
            tot2 += <double>cnt * cnt * w
            prev = x
            cnt -= 1
            j += 1
    return tot1, tot2


def tent_pair_sum(freq, a_idx, b_idx, coef, gamma, double tau):
    cdef const double[::1] f = np.ascontiguousarray(freq, dtype=np.float64)
    cdef const cnp.int64_t[::1] a = np.ascontiguousarray(a_idx, dtype=np.int64)
    cdef const cnp.int64_t[::1] b = np.ascontiguousarray(b_idx, dtype=np.int64)
    cdef const double complex[::1] c = np.ascontiguousarray(coef, dtype=np.complex128)
    cdef const double complex[:, ::1] G = np.ascontiguousarray(gamma, dtype=np.complex128)
    cdef Py_ssize_t P = f.shape[0]
    cdef Py_ssize_t p, q, lo = 0
    cdef double width = 2.0 / tau, half_tau = tau / 2.0, t
    cdef double complex up, cp, w, total = 0.0
    cdef double complex[::1] u = np.empty(P, dtype=np.complex128)
    for p in range(P):
        u[p] = c[p] * G[a[p], b[p]]
    for p in range(P):
        while f[p] - f[lo] >= width:
            lo += 1
        up = u[p]
        cp = c[p]
        q = lo
        while q < P and f[q] - f[p] < width:
            t = 1.0 - fabs(f[p] - f[q]) * half_tau
            if t > 0.0:
                w = up * u[q].conjugate()
                if b[p] == b[q]:
                    w = w + cp * c[q].conjugate() * G[a[p], a[q]] * (1.0 - G[b[q], b[p]])
                else:
                    w = w - cp * c[q].conjugate() * G[a[p], a[q]] * G[b[q], b[p]]
                total = total + t * w
            q += 1
    return complex(total)
