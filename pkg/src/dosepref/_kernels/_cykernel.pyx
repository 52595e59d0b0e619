# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython pseudo-likelihood accumulation kernel.

Same contract as dosepref._kernels._pykernel.accumulate; one pass over
observations with O(m) temporaries instead of (n, m) intermediates.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log

cnp.import_array()

BACKEND_NAME = "cython"


def accumulate(double[:, ::1] qy_grid, double[:, ::1] qz_grid,
               double[::1] qy_obs, double[::1] qz_obs,
               double[:, ::1] xw, double[::1] quad_w,
               double[::1] theta, double beta):
    cdef Py_ssize_t n = qy_grid.shape[0]
    cdef Py_ssize_t m = qy_grid.shape[1]
    cdef Py_ssize_t q = xw.shape[1]
    cdef Py_ssize_t i, j, k, l

    score_np = np.zeros(1 + q)
    hess_np = np.zeros((1 + q, 1 + q))
    bmat_np = np.zeros((1 + q, 1 + q))
    cdef double[::1] score = score_np
    cdef double[:, ::1] hess = hess_np
    cdef double[:, ::1] bmat = bmat_np

    cdef double loglik = 0.0
    cdef double eta, w, wp, wpp, r_obs, qt_obs
    cdef double umax, u, z, pj, qt, r
    cdef double eq, er, eqq, err, eqr, vq, vr, cqr, dr
    cdef double sb, st, hbt, btt

    for i in range(n):
        eta = 0.0
        for k in range(q):
            eta += xw[i, k] * theta[k]
        if eta >= 0.0:
            w = 1.0 / (1.0 + exp(-eta))
        else:
            w = exp(eta) / (1.0 + exp(eta))
        wp = w * (1.0 - w)
        wpp = wp * (1.0 - 2.0 * w)
        r_obs = qy_obs[i] - qz_obs[i]
        qt_obs = qz_obs[i] + w * r_obs

        umax = -1e308
        for j in range(m):
            u = beta * (qz_grid[i, j] + w * (qy_grid[i, j] - qz_grid[i, j]))
            if u > umax:
                umax = u

        z = 0.0
        eq = er = eqq = err = eqr = 0.0
        for j in range(m):
            r = qy_grid[i, j] - qz_grid[i, j]
            qt = qz_grid[i, j] + w * r
            pj = quad_w[j] * exp(beta * qt - umax)
            z += pj
            eq += pj * qt
            er += pj * r
            eqq += pj * qt * qt
            err += pj * r * r
            eqr += pj * qt * r
        eq /= z
        er /= z
        eqq /= z
        err /= z
        eqr /= z
        vq = eqq - eq * eq
        vr = err - er * er
        cqr = eqr - eq * er
        dr = r_obs - er

        loglik += beta * qt_obs - umax - log(z)

        score[0] += qt_obs - eq
        hess[0, 0] -= vq
        bmat[0, 0] += vq
        for k in range(q):
            score[1 + k] += beta * dr * wp * xw[i, k]
            hbt = (dr * wp - beta * cqr * wp) * xw[i, k]
            hess[0, 1 + k] += hbt
            bmat[0, 1 + k] += beta * cqr * wp * xw[i, k]
            for l in range(q):
                hess[1 + k, 1 + l] += (beta * dr * wpp
                                       - beta * beta * vr * wp * wp) * xw[i, k] * xw[i, l]
                bmat[1 + k, 1 + l] += beta * beta * vr * wp * wp * xw[i, k] * xw[i, l]

    for k in range(q):
        hess[1 + k, 0] = hess[0, 1 + k]
        bmat[1 + k, 0] = bmat[0, 1 + k]
    for k in range(1 + q):
        for l in range(1 + q):
            bmat[k, l] /= n

    return loglik, score_np, hess_np, bmat_np
