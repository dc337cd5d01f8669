# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loops in _kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow

cnp.import_array()


def gather_correlate(c, g, starts):
    cdef double[:, ::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef long long[::1] sv = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t R = cv.shape[0], T = gv.shape[0], NP = sv.shape[0]
    out = np.zeros((R, NP))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t r, p, t, s
    cdef double acc
    with nogil:
        for r in range(R):
            for p in range(NP):
                s = sv[p]
                acc = 0.0
                for t in range(T):
                    acc = acc + gv[t] * cv[r, s + t]
                ov[r, p] = acc
    return out


def increment_norms(Y, P, Q, offsets, base, weights, bounds, double p, bint use_max):
    cdef double[:, ::1] yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t Dy = yv.shape[1]
    cdef bint has_p = P is not None
    cdef bint has_q = Q is not None
    cdef double[:, :, ::1] pv
    cdef double[:, :, ::1] qv
    cdef Py_ssize_t D = Dy
    if has_p:
        pv = np.ascontiguousarray(P, dtype=np.float64)
        D = pv.shape[1]
    else:
        pv = np.zeros((1, 1, 1))
    if has_q:
        qv = np.ascontiguousarray(Q, dtype=np.float64)
    else:
        qv = np.zeros((1, 1, 1))
    cdef long long[::1] ov_ = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef long long[::1] bv = np.ascontiguousarray(base, dtype=np.int64)
    cdef double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef long long[::1] lb = np.ascontiguousarray(bounds, dtype=np.int64)
    cdef Py_ssize_t NO = ov_.shape[0], NX = bv.shape[0], NL = lb.shape[0] - 1
    out = np.zeros((NO, NL))
    cdef double[:, ::1] res = out
    cdef double[::1] diff = np.zeros(Dy)
    cdef double[::1] v = np.zeros(D)
    cdef Py_ssize_t j, x, i, k, l, i0, i1
    cdef double acc, nrm
    cdef bint square = p == 2.0
    with nogil:
        for j in range(NO):
            for x in range(NX):
                i0 = bv[x]
                i1 = i0 + ov_[j]
                for i in range(Dy):
                    acc = yv[i1, i]
                    if has_q:
                        for k in range(Dy):
                            acc = acc - qv[j, i, k] * yv[i0, k]
                    else:
                        acc = acc - yv[i0, i]
                    diff[i] = acc
                if has_p:
                    for i in range(D):
                        acc = 0.0
                        for k in range(Dy):
                            acc = acc + pv[i1, i, k] * diff[k]
                        v[i] = acc
                else:
                    for i in range(D):
                        v[i] = diff[i]
                for l in range(NL):
                    acc = 0.0
                    for i in range(lb[l], lb[l + 1]):
                        acc = acc + v[i] * v[i]
                    if use_max:
                        nrm = sqrt(acc)
                        if wv[x] > 0 and nrm > res[j, l]:
                            res[j, l] = nrm
                    elif square:
                        res[j, l] = res[j, l] + wv[x] * acc
                    else:
                        res[j, l] = res[j, l] + wv[x] * pow(sqrt(acc), p)
    return out
