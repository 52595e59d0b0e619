"""Dose-assignment density on a grid: exp(beta * Q(x, a)) normalized over the
dose interval by trapezoid quadrature, with max-shift stabilization.

The same machinery covers categorical treatments: use a grid whose points
are the category values and replace the quadrature weights with ones.
"""

from dataclasses import dataclass

import numpy as np

from .model import CompositeSurface, DoseGrid

__all__ = [
    "ConditionalDensity",
    "density_at",
    "conditional_moments",
    "sample_dose",
    "grid_log_density",
    "grid_masses",
    "sample_doses_rows",
]


@dataclass(frozen=True)
class ConditionalDensity:
    grid: DoseGrid
    log_unnorm: np.ndarray  # beta * Q(x, t_j) over the grid
    logf: np.ndarray        # normalized log density values
    probs: np.ndarray       # quadrature mass per grid point, sums to 1

    @property
    def density(self) -> np.ndarray:
        return np.exp(self.logf)


def grid_log_density(log_unnorm_rows: np.ndarray, quad_w: np.ndarray) -> np.ndarray:
    """Row-wise normalized log density from log-unnormalized grid values."""
    u = np.atleast_2d(log_unnorm_rows)
    umax = u.max(axis=1, keepdims=True)
    logz = umax[:, 0] + np.log(np.exp(u - umax) @ quad_w)
    return u - logz[:, None]


def grid_masses(log_unnorm_rows: np.ndarray, quad_w: np.ndarray) -> np.ndarray:
    """Row-wise per-point quadrature masses; each row sums to 1."""
    return np.exp(grid_log_density(log_unnorm_rows, quad_w)) * quad_w


def density_at(cs: CompositeSurface, beta: float, x, grid: DoseGrid) -> ConditionalDensity:
    """Assignment density for one covariate vector on the given grid."""
    if not np.isfinite(beta):
        raise ValueError("beta must be finite")
    x = np.asarray(x, dtype=float)
    qt = cs.on_grid(x[None, :], grid.points)[0]
    if not np.all(np.isfinite(qt)):
        raise FloatingPointError("non-finite composite surface values on grid")
    log_unnorm = beta * qt
    logf = grid_log_density(log_unnorm[None, :], grid.quad_weights)[0]
    return ConditionalDensity(
        grid=grid,
        log_unnorm=log_unnorm,
        logf=logf,
        probs=np.exp(logf) * grid.quad_weights,
    )


def conditional_moments(cd: ConditionalDensity, g) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature means and covariance of functions tabulated on the grid.

    ``g`` is a list of vectors g_k(t_j); returns (means, covariance matrix).
    """
    G = np.atleast_2d(np.asarray(g, dtype=float))
    if G.shape[1] != cd.probs.size:
        raise ValueError("g vectors must be tabulated on the density's grid")
    means = G @ cd.probs
    centered = G - means[:, None]
    cov = (centered * cd.probs) @ centered.T
    return means, cov


def _invert_cdf(f: np.ndarray, points: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse of the piecewise-linear-density CDF for one set of density values."""
    step = points[1] - points[0]
    seg = 0.5 * step * (f[:-1] + f[1:])  # mass per segment
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    cum[-1] = 1.0
    j = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(seg) - 1)
    # within segment j: mass(s) = step*(f_j s + (f_{j+1}-f_j) s^2 / 2), s in [0,1]
    target = (u - cum[j]) / step
    fj, slope = f[j], f[j + 1] - f[j]
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = np.sqrt(np.maximum(fj * fj + 2.0 * slope * target, 0.0))
        s_quad = (disc - fj) / slope
        s_lin = target / np.where(fj > 0, fj, np.inf)
    s = np.where(np.abs(slope) > 1e-12 * np.maximum(fj, 1e-300), s_quad, s_lin)
    s = np.clip(s, 0.0, 1.0)
    return points[j] + s * step


def sample_dose(cd: ConditionalDensity, u: float) -> float:
    """Deterministic inverse-CDF draw: u in [0,1) maps into [a_min, a_max]."""
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    return float(_invert_cdf(cd.density, cd.grid.points, np.asarray([u]))[0])


def sample_doses_rows(log_unnorm_rows: np.ndarray, grid: DoseGrid, u: np.ndarray) -> np.ndarray:
    """One inverse-CDF draw per row of log-unnormalized grid values."""
    logf = grid_log_density(log_unnorm_rows, grid.quad_weights)
    f = np.exp(logf)
    points = grid.points
    step = grid.step
    seg = 0.5 * step * (f[:, :-1] + f[:, 1:])
    cum = np.concatenate((np.zeros((f.shape[0], 1)), np.cumsum(seg, axis=1)), axis=1)
    cum[:, -1] = 1.0
    n_seg = seg.shape[1]
    j = np.empty(f.shape[0], dtype=int)
    for i in range(f.shape[0]):
        j[i] = np.searchsorted(cum[i], u[i], side="right") - 1
    j = np.clip(j, 0, n_seg - 1)
    rows = np.arange(f.shape[0])
    target = (u - cum[rows, j]) / step
    fj = f[rows, j]
    slope = f[rows, j + 1] - fj
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = np.sqrt(np.maximum(fj * fj + 2.0 * slope * target, 0.0))
        s_quad = (disc - fj) / slope
        s_lin = target / np.where(fj > 0, fj, np.inf)
    s = np.clip(np.where(np.abs(slope) > 1e-12 * np.maximum(fj, 1e-300), s_quad, s_lin), 0.0, 1.0)
    return points[j] + s * step
