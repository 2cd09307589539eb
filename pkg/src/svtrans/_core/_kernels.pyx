# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Fused kernels for the trainer hot loop.

One pass over the n x n similarity block computes the normalized matrix,
both loss terms, the weighted subgradient, and the row/column contractions
the cosine-mode backward pass needs. Matrix products stay in BLAS on the
caller's side; this module only replaces the elementwise middle section.
"""

from libc.math cimport fabs, sqrt

import numpy as np

NAME = "cython"


def similarity_core(double[:, ::1] shat, double[::1] inv_a, double[::1] inv_b, double lam):
    """Same contract as ``_numpy_backend.similarity_core``."""
    cdef Py_ssize_t n = shat.shape[0]
    if shat.shape[1] != n:
        raise ValueError("similarity block must be square")
    if inv_a.shape[0] != n or inv_b.shape[0] != n:
        raise ValueError("norm vectors must have length n")

    S_arr = np.empty((n, n), dtype=np.float64)
    U_arr = np.empty((n, n), dtype=np.float64)
    row_arr = np.zeros(n, dtype=np.float64)
    col_arr = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] S = S_arr
    cdef double[:, ::1] U = U_arr
    cdef double[::1] row_us = row_arr
    cdef double[::1] col_us = col_arr

    cdef double w_diag = (1.0 - lam) / n
    cdef double w_off = lam / (n * (n - 1.0)) if n > 1 else 0.0
    cdef double diag_acc = 0.0
    cdef double off_acc = 0.0
    cdef double s, u, g
    cdef Py_ssize_t j, k

    for j in range(n):
        for k in range(n):
            s = shat[j, k] * inv_a[j] * inv_b[k]
            S[j, k] = s
            if j == k:
                u = s - 1.0
                diag_acc += fabs(u)
                g = w_diag * (1.0 if u > 0.0 else (-1.0 if u < 0.0 else 0.0))
            else:
                off_acc += fabs(s)
                g = w_off * (1.0 if s > 0.0 else (-1.0 if s < 0.0 else 0.0))
            U[j, k] = g
            row_us[j] += g * s
            col_us[k] += g * s

    cdef double diag_loss = diag_acc / n
    cdef double nondiag_loss = off_acc / (n * (n - 1.0)) if n > 1 else 0.0
    return S_arr, U_arr, row_arr, col_arr, diag_loss, nondiag_loss


def rmsprop_update(double[:, ::1] w, double[:, ::1] grad, double[:, ::1] state,
                   double lr, double decay, double eps):
    """One elementwise RMSprop step, in place on ``w`` and ``state``."""
    cdef Py_ssize_t rows = w.shape[0]
    cdef Py_ssize_t cols = w.shape[1]
    if grad.shape[0] != rows or grad.shape[1] != cols:
        raise ValueError("gradient shape mismatch")
    if state.shape[0] != rows or state.shape[1] != cols:
        raise ValueError("state shape mismatch")
    cdef Py_ssize_t i, j
    cdef double g, s
    for i in range(rows):
        for j in range(cols):
            g = grad[i, j]
            s = state[i, j] * decay + (1.0 - decay) * g * g
            state[i, j] = s
            w[i, j] = w[i, j] - lr * g / sqrt(s + eps)
