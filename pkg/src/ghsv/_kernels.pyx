# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the sampler hot loops (see ``_kernels_py`` for the
reference implementation and documentation)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, expm1, pow, lgamma, ceil

cnp.import_array()


cdef inline double _psi(double s, double alpha, double b) noexcept nogil:
    if alpha == 0.0:
        return log1p(s / b)
    if b == 0.0:
        return pow(s, alpha) / alpha
    return pow(b, alpha) * expm1(alpha * log1p(s / b)) / alpha


def psi_gen_gamma(s, double alpha, double b):
    cdef cnp.ndarray[double, ndim=1] arr = np.ascontiguousarray(np.ravel(s), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(arr)
    cdef Py_ssize_t k
    for k in range(arr.shape[0]):
        out[k] = _psi(arr[k], alpha, b)
    return out.reshape(np.shape(s))


cdef double _log_mult(long[:] m) noexcept nogil:
    cdef Py_ssize_t j, n = m.shape[0]
    cdef long s = 0, v, free
    cdef double out = 0.0
    for j in range(n):
        v = m[j]
        if v == 0:
            free = s - j
            if free <= 0:
                return -1e308
            out += log(<double>free)
        else:
            out -= lgamma(<double>v)
        s += v
    return out


def log_multiplicity(m):
    cdef long[:] mv = np.ascontiguousarray(m, dtype=np.int64)
    cdef double v = _log_mult(mv)
    return -np.inf if v <= -1e308 else v


def spath_mh_steps(long[:] m, double[:, :] logphi, long[:] prop_i, long[:] prop_j,
                   double[:] log_u, Py_ssize_t start=0, bint use_multiplicity=True):
    cdef Py_ssize_t n = m.shape[0], ncol = logphi.shape[1], K = prop_i.shape[0]
    cdef Py_ssize_t t = start, i, j, kk
    cdef long mi, mj, s
    cdef long acc = 0
    cdef double ratio, before
    cdef bint ok
    for kk in range(n):
        if m[kk] < 0 or m[kk] >= ncol:
            raise ValueError("every m_i needs a column in logphi")
    while t < K:
        i = prop_i[t]
        j = prop_j[t]
        mi = m[i]
        if mi == 0:
            t += 1
            continue
        if m[j] + 1 >= ncol:
            return t, acc
        if i < j:
            s = 0
            for kk in range(i):
                s += m[kk]
            ok = True
            for kk in range(i, j):
                s += m[kk]
                if s - 1 < kk + 1:
                    ok = False
                    break
            if not ok:
                t += 1
                continue
        mj = m[j]
        ratio = logphi[i, mi - 1] + logphi[j, mj + 1] - logphi[i, mi] - logphi[j, mj]
        if use_multiplicity:
            before = _log_mult(m)
            m[i] -= 1
            m[j] += 1
            ratio += _log_mult(m) - before
            m[i] += 1
            m[j] -= 1
        if log_u[t] < ratio:
            m[i] -= 1
            m[j] += 1
            acc += 1
        t += 1
    return K, acc


cdef inline double _psi_c(double s, double alpha, double inv_b, double bpow, int kind) noexcept nogil:
    # kind 0: alpha = 0; 1: stable (b = 0); 2: general
    if kind == 0:
        return log1p(s * inv_b)
    if kind == 1:
        return pow(s, alpha) / alpha
    return bpow * expm1(alpha * log1p(s * inv_b)) / alpha


def laplace_w_scan(double[::1] w, double[::1] R, double[:, ::1] psi_piece, double[::1] psi_tail,
                   double[::1] w_prop, double[::1] lr_prop, double[::1] lr_cur, double[::1] log_u,
                   double lam, double delta, double[::1] a_x, double[::1] e_x,
                   double[:, ::1] W_piece, double[::1] u_tail, double[::1] W_tail,
                   double alpha, double b, double cutoff=50.0):
    cdef Py_ssize_t n = w.shape[0], Q = a_x.shape[0], Qt = u_tail.shape[0]
    cdef Py_ssize_t i, kk, q, lo, lag
    cdef double C = -expm1(-lam * delta) / lam
    cdef double d, dl, sh, wk, rk, v, r0, dtotal = 0.0
    cdef double inv_b = 1.0 / b if b > 0 else 0.0
    cdef double bpow = pow(b, alpha) if b > 0 else 0.0
    cdef int kind = 0 if alpha == 0.0 else (1 if b == 0.0 else 2)
    cdef bint tail_on
    cdef cnp.ndarray[cnp.int8_t, ndim=1] accepted = np.zeros(n, dtype=np.int8)
    cdef double[:, ::1] buf = np.empty((n, Q))
    cdef double[::1] tbuf = np.empty(Qt)
    lag = <Py_ssize_t>ceil(cutoff / (lam * delta))
    if lag < 1:
        lag = 1
    for i in range(n):
        d = w_prop[i] - w[i]
        lo = i - lag
        if lo < 0:
            lo = 0
        dl = 0.0
        for kk in range(lo, i + 1):
            if kk < i:
                sh = C * d * exp(-lam * delta * (i - kk - 1.0))
                wk = w[kk]
            else:
                sh = 0.0
                wk = w[kk] + d
            rk = R[kk + 1] + sh
            for q in range(Q):
                v = _psi_c(wk * a_x[q] + rk * e_x[q], alpha, inv_b, bpow, kind)
                buf[kk, q] = v
                dl += W_piece[kk, q] * (v - psi_piece[kk, q])
        tail_on = lam * delta * i <= cutoff
        if tail_on:
            r0 = R[0] + C * d * exp(-lam * delta * i)
            for q in range(Qt):
                v = _psi_c(r0 * u_tail[q], alpha, inv_b, bpow, kind)
                tbuf[q] = v
                dl += W_tail[q] * (v - psi_tail[q])
        if log_u[i] < -dl + lr_prop[i] - lr_cur[i]:
            accepted[i] = 1
            dtotal += dl
            w[i] = w_prop[i]
            for kk in range(lo, i + 1):
                for q in range(Q):
                    psi_piece[kk, q] = buf[kk, q]
            if tail_on:
                for q in range(Qt):
                    psi_tail[q] = tbuf[q]
            for kk in range(i + 1):
                R[kk] += C * d * exp(-lam * delta * (i - kk))
    return accepted, dtotal
