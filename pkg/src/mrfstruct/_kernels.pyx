# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: subset counting, pair counting, state enumeration,
Gibbs sweeps.  Mirrors mrfstruct._kernels_py; keep loop order in sync."""

from libc.math cimport exp, INFINITY

import numpy as np


BACKEND = "cython"


def count_subset(const unsigned char[:, ::1] data, const long long[::1] cols, int A):
    cdef Py_ssize_t k = data.shape[0]
    cdef Py_ssize_t m = cols.shape[0]
    cdef Py_ssize_t i, j
    cdef long long code, size = 1
    for j in range(m):
        size *= A
    out_arr = np.zeros(size, dtype=np.int64)
    cdef long long[::1] out = out_arr
    if m == 0:
        out_arr[0] = k
        return out_arr
    for i in range(k):
        code = 0
        for j in range(m):
            code = code * A + data[i, cols[j]]
        out[code] += 1
    return out_arr


def pair_counts(const unsigned char[:, ::1] data, int A):
    cdef Py_ssize_t k = data.shape[0]
    cdef Py_ssize_t n = data.shape[1]
    cdef Py_ssize_t i, u, v
    out_arr = np.zeros((n, n, A, A), dtype=np.int64)
    cdef long long[:, :, :, ::1] out = out_arr
    for i in range(k):
        for u in range(n):
            for v in range(u + 1, n):
                out[u, v, data[i, u], data[i, v]] += 1
    return out_arr


def enum_log_weights(int n, int A,
                     const long long[::1] clique_flat, const long long[::1] clique_ptr,
                     const double[::1] table_flat, const long long[::1] table_ptr):
    cdef Py_ssize_t P = clique_ptr.shape[0] - 1
    cdef long long S = 1
    cdef Py_ssize_t i
    for i in range(n):
        S *= A
    out_arr = np.zeros(S, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long long[::1] digits = np.zeros(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t p, j, m, v
    cdef long long s, idx, lo, toff
    for p in range(P):
        lo = clique_ptr[p]
        m = clique_ptr[p + 1] - lo
        toff = table_ptr[p]
        for v in range(n):
            digits[v] = 0
        # walk states in order, keeping the digit odometer instead of divmods
        for s in range(S):
            idx = 0
            for j in range(m):
                idx = idx * A + digits[clique_flat[lo + j]]
            out[s] += table_flat[toff + idx]
            v = n - 1
            while v >= 0:
                digits[v] += 1
                if digits[v] < A:
                    break
                digits[v] = 0
                v -= 1
    return out_arr


def gibbs_sweeps(unsigned char[::1] state, const double[:, ::1] uniforms, int A,
                 const long long[::1] site_pot_ptr, const long long[::1] site_pot_idx,
                 const long long[::1] clique_flat, const long long[::1] clique_ptr,
                 const double[::1] table_flat, const long long[::1] table_ptr,
                 long long record_every, unsigned char[:, ::1] out, long long out_start):
    cdef Py_ssize_t n_sweeps = uniforms.shape[0]
    cdef Py_ssize_t n = uniforms.shape[1]
    cdef long long row = out_start
    cdef double[::1] w = np.zeros(A, dtype=np.float64)
    cdef Py_ssize_t sweep, s, a, j
    cdef long long t, p, lo, m, base, stride_s, weight, toff, c
    cdef double wmax, total, target, acc
    cdef int pick
    for sweep in range(n_sweeps):
        for s in range(n):
            for a in range(A):
                w[a] = 0.0
            for t in range(site_pot_ptr[s], site_pot_ptr[s + 1]):
                p = site_pot_idx[t]
                lo = clique_ptr[p]
                m = clique_ptr[p + 1] - lo
                base = 0
                stride_s = 0
                weight = 1
                for j in range(m - 1, -1, -1):
                    c = clique_flat[lo + j]
                    if c == s:
                        stride_s = weight
                    else:
                        base += weight * state[c]
                    weight *= A
                toff = table_ptr[p]
                for a in range(A):
                    w[a] += table_flat[toff + base + stride_s * a]
            wmax = -INFINITY
            for a in range(A):
                if w[a] > wmax:
                    wmax = w[a]
            if wmax == -INFINITY:
                return -1
            total = 0.0
            for a in range(A):
                w[a] = exp(w[a] - wmax)
                total += w[a]
            target = uniforms[sweep, s] * total
            acc = 0.0
            pick = A - 1
            for a in range(A):
                acc += w[a]
                if target < acc:
                    pick = a
                    break
            state[s] = <unsigned char>pick
        if record_every > 0 and (sweep + 1) % record_every == 0:
            out[row, :] = state
            row += 1
    return row - out_start
