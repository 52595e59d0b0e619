"""Pure-numpy pseudo-likelihood accumulation kernel.

Given the two outcome surfaces tabulated on the dose grid for every
observation, one call returns the log pseudo-likelihood, its analytic
score and Hessian in (beta, theta) order, and the plug-in conditional
covariance matrix used for asymptotic inference.

Per observation, with w = expit(xw . theta), Q = w*Qy + (1-w)*Qz,
R = Qy - Qz, w' = w(1-w) xw and moments under the grid density
p ~ exp(beta*Q):

    d m / d beta  = Q_obs - E[Q]
    d m / d theta = beta (R_obs - E[R]) w'
    H_bb = -Var[Q]
    H_bt = (R_obs - E[R]) w' - beta Cov[Q, R] w'
    H_tt = beta (R_obs - E[R]) w(1-w)(1-2w) xw xw^T - beta^2 Var[R] w' w'^T
    Bmat = (1/n) sum_i Cov[(Q, beta R w') | x_i]
"""

import numpy as np

BACKEND_NAME = "python"


def accumulate(qy_grid, qz_grid, qy_obs, qz_obs, xw, quad_w, theta, beta):
    n, m = qy_grid.shape
    q = xw.shape[1]

    eta = xw @ theta
    w = np.where(eta >= 0, 1.0 / (1.0 + np.exp(-np.abs(eta))),
                 np.exp(-np.abs(eta)) / (1.0 + np.exp(-np.abs(eta))))

    r_grid = qy_grid - qz_grid
    qt_grid = qz_grid + w[:, None] * r_grid
    r_obs = qy_obs - qz_obs
    qt_obs = qz_obs + w * r_obs

    u = beta * qt_grid
    umax = u.max(axis=1)
    ex = np.exp(u - umax[:, None])
    z = ex @ quad_w
    loglik = float(np.sum(beta * qt_obs - umax - np.log(z)))

    p = (ex * quad_w) / z[:, None]
    eq = np.einsum("ij,ij->i", p, qt_grid)
    er = np.einsum("ij,ij->i", p, r_grid)
    vq = np.einsum("ij,ij,ij->i", p, qt_grid, qt_grid) - eq * eq
    vr = np.einsum("ij,ij,ij->i", p, r_grid, r_grid) - er * er
    cqr = np.einsum("ij,ij,ij->i", p, qt_grid, r_grid) - eq * er

    wp = w * (1.0 - w)            # scalar part of w'
    wpp = wp * (1.0 - 2.0 * w)    # scalar part of w''
    dr = r_obs - er

    score = np.empty(1 + q)
    score[0] = np.sum(qt_obs - eq)
    score[1:] = beta * (dr * wp) @ xw

    hess = np.empty((1 + q, 1 + q))
    hess[0, 0] = -np.sum(vq)
    hbt = (dr * wp - beta * cqr * wp) @ xw
    hess[0, 1:] = hbt
    hess[1:, 0] = hbt
    hess[1:, 1:] = (xw * (beta * dr * wpp - beta * beta * vr * wp * wp)[:, None]).T @ xw

    bmat = np.empty((1 + q, 1 + q))
    bmat[0, 0] = np.sum(vq) / n
    bbt = (beta * cqr * wp) @ xw / n
    bmat[0, 1:] = bbt
    bmat[1:, 0] = bbt
    bmat[1:, 1:] = (xw * (beta * beta * vr * wp * wp)[:, None]).T @ xw / n

    return loglik, score, hess, bmat
