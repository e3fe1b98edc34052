# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Cyclic Jacobi eigensolver for dense symmetric matrices (compiled core)."""
from libc.math cimport fabs, sqrt

import numpy as np


cdef double _off_norm(double[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t p, q
    for p in range(n):
        for q in range(n):
            if p != q:
                s += a[p, q] * a[p, q]
    return sqrt(s)


def jacobi_eigh(a_in, double rtol=1e-14, int max_sweeps=100):
    """Return ``(w, V, sweeps)`` with ``a_in = V diag(w) V'``, unsorted."""
    a_arr = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] a = a_arr
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n)
    cdef double[:, ::1] v = v_arr
    cdef double scale = np.linalg.norm(a_arr)
    cdef double app, aqq, apq, theta, t, c, s, akp, akq
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0

    with nogil:
        while sweep < max_sweeps:
            if _off_norm(a, n) <= rtol * scale:
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    app = a[p, p]
                    aqq = a[q, q]
                    theta = (aqq - app) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(n):
                        if k == p or k == q:
                            continue
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[k, q] = s * akp + c * akq
                        a[p, k] = a[k, p]
                        a[q, k] = a[k, q]
                    a[p, p] = app - t * apq
                    a[q, q] = aqq + t * apq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for k in range(n):
                        akp = v[k, p]
                        akq = v[k, q]
                        v[k, p] = c * akp - s * akq
                        v[k, q] = s * akp + c * akq

    w = np.array([a[k, k] for k in range(n)])
    return w, v_arr, sweep
