# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled split-search kernel; contract mirrors _split_kernel_py."""

import numpy as np

# mirror of GAIN_EPS in the fallback: zero-gain splits allowed
DEF GAIN_EPS = 1e-12


def backend_name():
    return "cython"


def best_split(double[:, ::1] xt, long long[:, ::1] sidx, double[::1] g,
               double[::1] h, int min_leaf, double lam):
    cdef Py_ssize_t f = sidx.shape[0]
    cdef Py_ssize_t m = sidx.shape[1]
    cdef Py_ssize_t j, i
    cdef long long r
    cdef double gl, hl, gtot, htot, gr, hr, gain, parent
    cdef double best_gain = -GAIN_EPS
    cdef Py_ssize_t best_feat = -1
    cdef Py_ssize_t best_pos = -1
    cdef double best_thresh = 0.0

    if m < 2 * min_leaf or m < 2:
        return -1, -1, 0.0, 0.0

    for j in range(f):
        gtot = 0.0
        htot = 0.0
        for i in range(m):
            r = sidx[j, i]
            gtot = gtot + g[r]
            htot = htot + h[r]
        parent = gtot * gtot / (htot + lam)
        gl = 0.0
        hl = 0.0
        for i in range(m - 1):
            r = sidx[j, i]
            gl = gl + g[r]
            hl = hl + h[r]
            if i + 1 < min_leaf or m - i - 1 < min_leaf:
                continue
            if xt[j, sidx[j, i]] == xt[j, sidx[j, i + 1]]:
                continue
            gr = gtot - gl
            hr = htot - hl
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
            if gain > best_gain:
                best_gain = gain
                best_feat = j
                best_pos = i
                best_thresh = xt[j, sidx[j, i + 1]]

    if best_feat < 0:
        return -1, -1, 0.0, 0.0
    return best_feat, best_pos, best_gain, best_thresh


def partition(long long[:, ::1] sidx, left_mask, Py_ssize_t m_left):
    cdef Py_ssize_t f = sidx.shape[0]
    cdef Py_ssize_t m = sidx.shape[1]
    cdef unsigned char[::1] mask = left_mask.view(np.uint8)
    left_arr = np.empty((f, m_left), dtype=np.int64)
    right_arr = np.empty((f, m - m_left), dtype=np.int64)
    cdef long long[:, ::1] left = left_arr
    cdef long long[:, ::1] right = right_arr
    cdef Py_ssize_t j, i, li, ri
    cdef long long r
    for j in range(f):
        li = 0
        ri = 0
        for i in range(m):
            r = sidx[j, i]
            if mask[r]:
                left[j, li] = r
                li += 1
            else:
                right[j, ri] = r
                ri += 1
    return left_arr, right_arr
