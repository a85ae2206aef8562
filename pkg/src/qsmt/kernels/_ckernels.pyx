# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot numerical kernels.

Mirrors ``qsmt.kernels.pykernels`` function for function; see that module
for the contracts. The state iteration and the transition log-likelihood
evaluations are called thousands of times per fit inside the bootstrap, so
they are written as straight loops over typed memoryviews.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, fabs, log, sin, sqrt

cnp.import_array()

BACKEND = "compiled"

cdef double DEGENERATE_PROB = 1e-12
cdef double PROB_FLOOR = 1e-300
cdef double NEG_INF = float("-inf")


cdef double _jacobi_max_eig(double[:, ::1] a, int n) nogil:
    """Largest eigenvalue of a real symmetric matrix via cyclic Jacobi.

    Destroys the input buffer.
    """
    cdef int p, q, i, sweep
    cdef double off, frob, thresh, apq, app, aqq, phi, c, s, xp, xq, best
    frob = 0.0
    for p in range(n):
        for q in range(n):
            frob += a[p, q] * a[p, q]
    thresh = frob * 1e-28 + 1e-300
    for sweep in range(60):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off <= thresh:
            break
        for p in range(n):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                phi = 0.5 * atan2(2.0 * apq, aqq - app)
                c = cos(phi)
                s = sin(phi)
                for i in range(n):
                    xp = a[i, p]
                    xq = a[i, q]
                    a[i, p] = c * xp - s * xq
                    a[i, q] = s * xp + c * xq
                for i in range(n):
                    xp = a[p, i]
                    xq = a[q, i]
                    a[p, i] = c * xp - s * xq
                    a[q, i] = s * xp + c * xq
    best = a[0, 0]
    for p in range(1, n):
        if a[p, p] > best:
            best = a[p, p]
    return best


cdef double _max_eig_embed(double complex[:, ::1] h, double[:, ::1] scratch, int d) nogil:
    """Embed a d x d Hermitian matrix as real symmetric 2d x 2d and take max eig."""
    cdef int i, j
    cdef double re, im
    for i in range(d):
        for j in range(d):
            re = h[i, j].real
            im = h[i, j].imag
            scratch[i, j] = re
            scratch[i + d, j + d] = re
            scratch[i, j + d] = -im
            scratch[i + d, j] = im
    return _jacobi_max_eig(scratch, 2 * d)


def max_eig_hermitian(a):
    """Largest eigenvalue of a Hermitian matrix."""
    cdef double complex[:, ::1] h = np.ascontiguousarray(a, dtype=np.complex128)
    cdef int d = h.shape[0]
    cdef double[:, ::1] scratch = np.empty((2 * d, 2 * d), dtype=np.float64)
    return _max_eig_embed(h, scratch, d)


def project_rows_to_simplex(m):
    """Euclidean projection of every row onto the probability simplex."""
    v = np.atleast_2d(np.ascontiguousarray(m, dtype=np.float64))
    cdef double[:, ::1] vv = v
    cdef int r = vv.shape[0]
    cdef int n = vv.shape[1]
    out = np.empty((r, n), dtype=np.float64)
    cdef double[:, ::1] oo = out
    cdef double[::1] u = np.empty(n, dtype=np.float64)
    cdef int i, j, k, rho
    cdef double key, css, theta, x
    for i in range(r):
        for j in range(n):
            u[j] = vv[i, j]
        # insertion sort, descending (rows are short)
        for j in range(1, n):
            key = u[j]
            k = j - 1
            while k >= 0 and u[k] < key:
                u[k + 1] = u[k]
                k -= 1
            u[k + 1] = key
        css = 0.0
        rho = 0
        theta = u[0] - 1.0
        for j in range(n):
            css += u[j]
            if u[j] - (css - 1.0) / (j + 1) > 0.0:
                rho = j
                theta = (css - 1.0) / (j + 1)
        # theta at the last index where the condition held
        css = 0.0
        for j in range(rho + 1):
            css += u[j]
        theta = (css - 1.0) / (rho + 1)
        for j in range(n):
            x = vv[i, j] - theta
            oo[i, j] = x if x > 0.0 else 0.0
    return out


def l2_value(q, pops, counts):
    """Transition log-likelihood; -inf when a counted outcome has prob <= 0."""
    cdef double[:, ::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] pp = np.ascontiguousarray(pops, dtype=np.float64)
    cdef double[:, ::1] hh = np.ascontiguousarray(counts, dtype=np.float64)
    cdef int nk = qq.shape[0]
    cdef int nc = qq.shape[1]
    cdef int ne = pp.shape[1]
    cdef int e, c, k
    cdef double prob, value = 0.0, h
    for e in range(ne):
        for c in range(nc):
            h = hh[e, c]
            if h > 0.0:
                prob = 0.0
                for k in range(nk):
                    prob += pp[k, e] * qq[k, c]
                if prob <= 0.0:
                    return NEG_INF
                value += h * log(prob)
    return value


def l2_value_grad(q, pops, counts):
    """Value and gradient of the transition log-likelihood."""
    cdef double[:, ::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] pp = np.ascontiguousarray(pops, dtype=np.float64)
    cdef double[:, ::1] hh = np.ascontiguousarray(counts, dtype=np.float64)
    cdef int nk = qq.shape[0]
    cdef int nc = qq.shape[1]
    cdef int ne = pp.shape[1]
    grad = np.zeros((nk, nc), dtype=np.float64)
    cdef double[:, ::1] gg = grad
    cdef int e, c, k
    cdef double prob, value = 0.0, h, w
    for e in range(ne):
        for c in range(nc):
            h = hh[e, c]
            if h > 0.0:
                prob = 0.0
                for k in range(nk):
                    prob += pp[k, e] * qq[k, c]
                if prob <= 0.0:
                    grad[:] = 0.0
                    return NEG_INF, grad
                value += h * log(prob)
                w = h / prob
                for k in range(nk):
                    gg[k, c] += w * pp[k, e]
    return value, grad


cdef void _probs(double complex[:, :, ::1] ops, double complex[:, ::1] sigma,
                 double[::1] out, int m, int d) nogil:
    cdef int o, i, j
    cdef double acc
    for o in range(m):
        acc = 0.0
        for i in range(d):
            for j in range(d):
                acc += (ops[o, i, j] * sigma[j, i]).real
        out[o] = acc


cdef double _loglike(double[::1] counts, double[::1] probs, int m) nogil:
    cdef int o
    cdef double value = 0.0
    for o in range(m):
        if counts[o] > 0.0:
            if probs[o] <= 0.0:
                return NEG_INF
            value += counts[o] * log(probs[o])
    return value


cdef bint _degenerate(double[::1] counts, double[::1] probs, int m) nogil:
    cdef int o
    for o in range(m):
        if counts[o] > 0.0 and probs[o] < DEGENERATE_PROB:
            return True
    return False


cdef void _mix_identity(double complex[:, ::1] sigma, double eps, int d) nogil:
    cdef int i, j
    for i in range(d):
        for j in range(d):
            sigma[i, j] = (1.0 - eps) * sigma[i, j]
        sigma[i, i] = sigma[i, i] + eps / d


def rrr_solve(ops, counts, sigma0, double n_tot, double threshold,
              long max_iter, double mix_eps=1e-9):
    """Fixed-point state update sigma <- N(R sigma R) with a stopping bound.

    Same contract as the numpy fallback: returns (sigma, s_sigma,
    iterations, loglike) with s_sigma = max_eig(R) - n_tot evaluated at the
    returned iterate; likelihood-decreasing updates are rejected.
    """
    ops_arr = np.ascontiguousarray(ops, dtype=np.complex128)
    cnt_arr = np.ascontiguousarray(counts, dtype=np.float64)
    cdef double complex[:, :, ::1] F = ops_arr
    cdef double[::1] H = cnt_arr
    cdef int m = F.shape[0]
    cdef int d = F.shape[1]

    sigma_arr = np.array(sigma0, dtype=np.complex128, order="C")
    new_arr = np.empty((d, d), dtype=np.complex128)
    tmp_arr = np.empty((d, d), dtype=np.complex128)
    r_arr = np.empty((d, d), dtype=np.complex128)
    p_arr = np.empty(m, dtype=np.float64)
    pn_arr = np.empty(m, dtype=np.float64)
    scratch = np.empty((2 * d, 2 * d), dtype=np.float64)
    cdef double complex[:, ::1] sigma = sigma_arr
    cdef double complex[:, ::1] new = new_arr
    cdef double complex[:, ::1] tmp = tmp_arr
    cdef double complex[:, ::1] r = r_arr
    cdef double[::1] p = p_arr
    cdef double[::1] pn = pn_arr
    cdef double[:, ::1] sc = scratch

    cdef long iterations = 0
    cdef int o, i, j, k, attempt
    cdef double w, s_sigma, ll, ll_new, tr
    cdef double complex acc, zero = 0.0

    _probs(F, sigma, p, m, d)
    for attempt in range(3):
        if not _degenerate(H, p, m):
            break
        _mix_identity(sigma, mix_eps, d)
        _probs(F, sigma, p, m, d)
    ll = _loglike(H, p, m)

    while True:
        # R = sum_o (H_o / p_o) F_o, hermitized
        for i in range(d):
            for j in range(d):
                r[i, j] = zero
        for o in range(m):
            if H[o] > 0.0:
                w = H[o] / (p[o] if p[o] > PROB_FLOOR else PROB_FLOOR)
                for i in range(d):
                    for j in range(d):
                        r[i, j] = r[i, j] + w * F[o, i, j]
        for i in range(d):
            for j in range(i, d):
                acc = 0.5 * (r[i, j] + r[j, i].conjugate())
                r[i, j] = acc
                r[j, i] = acc.conjugate()

        s_sigma = _max_eig_embed(r, sc, d) - n_tot
        if s_sigma <= threshold or iterations >= max_iter:
            return sigma_arr, float(s_sigma), int(iterations), float(ll)

        # new = R sigma R, hermitized and trace-normalized
        for i in range(d):
            for j in range(d):
                acc = zero
                for k in range(d):
                    acc = acc + r[i, k] * sigma[k, j]
                tmp[i, j] = acc
        for i in range(d):
            for j in range(d):
                acc = zero
                for k in range(d):
                    acc = acc + tmp[i, k] * r[k, j]
                new[i, j] = acc
        for i in range(d):
            for j in range(i, d):
                acc = 0.5 * (new[i, j] + new[j, i].conjugate())
                new[i, j] = acc
                new[j, i] = acc.conjugate()
        tr = 0.0
        for i in range(d):
            tr += new[i, i].real
        if tr <= 0.0:
            return sigma_arr, float(s_sigma), int(iterations), float(ll)
        for i in range(d):
            for j in range(d):
                new[i, j] = new[i, j] / tr

        _probs(F, new, pn, m, d)
        for attempt in range(3):
            if not _degenerate(H, pn, m):
                break
            _mix_identity(new, mix_eps, d)
            _probs(F, new, pn, m, d)
        ll_new = _loglike(H, pn, m)
        if ll_new < ll - 1e-9:
            return sigma_arr, float(s_sigma), int(iterations), float(ll)

        for i in range(d):
            for j in range(d):
                sigma[i, j] = new[i, j]
        for o in range(m):
            p[o] = pn[o]
        ll = ll_new
        iterations += 1
