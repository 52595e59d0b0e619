"""Dose policies and their value functions."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .density import grid_masses
from .model import CompositeSurface, DoseGrid

__all__ = [
    "PolicyKind",
    "Policy",
    "optimal_dose",
    "optimal_doses",
    "value_under_policy",
    "value_observed",
]


class PolicyKind(Enum):
    COMPOSITE_ARGMAX = "composite_argmax"
    Y_ONLY = "y_only"
    Z_ONLY = "z_only"
    FIXED_DOSE = "fixed_dose"
    EXTERNAL_TABLE = "external_table"


def _argmax_refine(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Row-wise grid argmax plus one parabolic refinement.

    np.argmax takes the first maximum, which realizes the tie-toward-
    smaller-dose rule on the grid stage.  The refined vertex is clipped to
    the bracketing interval and interior-only (grid endpoints stand).
    """
    values = np.atleast_2d(values)
    j = np.argmax(values, axis=1)
    best = points[j].astype(float)
    interior = (j > 0) & (j < values.shape[1] - 1)
    if np.any(interior):
        rows = np.nonzero(interior)[0]
        ji = j[rows]
        y0 = values[rows, ji - 1]
        y1 = values[rows, ji]
        y2 = values[rows, ji + 1]
        denom = y0 - 2.0 * y1 + y2
        step = points[1] - points[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = 0.5 * (y0 - y2) / denom
        delta = np.where(np.abs(denom) > 0, delta, 0.0)
        delta = np.clip(delta, -1.0, 1.0)
        best[rows] = points[ji] + delta * step
    return best


def _argmax_quadratic(poly: np.ndarray, grid: DoseGrid) -> np.ndarray:
    """Grid argmax + parabolic refinement, in closed form.

    For a surface that is exactly quadratic in dose the two-stage rule
    (first grid maximum, then the vertex of the parabola through it and
    its neighbors, clipped to the bracket) simplifies: concave rows give
    the vertex clipped to the interval, non-concave rows give whichever
    endpoint wins, ties toward a_min.  ``_argmax_refine`` is the generic
    reference; agreement is covered by tests.
    """
    c0, c1, c2 = poly[:, 0], poly[:, 1], poly[:, 2]
    lo, hi = grid.a_min, grid.a_max
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.clip(-c1 / (2.0 * c2), lo, hi)
    v_lo = c0 + c1 * lo + c2 * lo * lo
    v_hi = c0 + c1 * hi + c2 * hi * hi
    ends = np.where(v_hi > v_lo, hi, lo)
    return np.where(c2 < 0, np.where(np.isfinite(vertex), vertex, lo), ends)


def optimal_dose(cs: CompositeSurface, x, grid: DoseGrid) -> float:
    """argmax over the dose grid of the composite surface at covariates x."""
    x = np.asarray(x, dtype=float)
    return float(_argmax_quadratic(cs.dose_poly(x[None, :]), grid)[0])


def optimal_doses(cs: CompositeSurface, X, grid: DoseGrid) -> np.ndarray:
    return _argmax_quadratic(cs.dose_poly(np.atleast_2d(X)), grid)


@dataclass(frozen=True)
class Policy:
    """A dose rule; emits doses within the grid interval for every x."""

    kind: PolicyKind
    grid: DoseGrid
    cs: CompositeSurface | None = None
    fixed_dose: float | None = None

    def doses(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind is PolicyKind.COMPOSITE_ARGMAX:
            return optimal_doses(self.cs, X, self.grid)
        if self.kind is PolicyKind.Y_ONLY:
            return _argmax_quadratic(self.cs.q_y.dose_poly(X), self.grid)
        if self.kind is PolicyKind.Z_ONLY:
            return _argmax_quadratic(self.cs.q_z.dose_poly(X), self.grid)
        if self.kind is PolicyKind.FIXED_DOSE:
            if not self.grid.contains(self.fixed_dose):
                raise ValueError("fixed dose outside the grid interval")
            return np.full(X.shape[0], float(self.fixed_dose))
        raise ValueError(f"policy kind {self.kind} needs an external dose table")


def value_under_policy(policy: Policy, truth: CompositeSurface, x_sample) -> float:
    """Mean composite outcome (under the true surface) when everyone follows
    the policy, averaged over the supplied covariate sample."""
    X = np.atleast_2d(np.asarray(x_sample, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("x_sample must be nonempty")
    a = policy.doses(X)
    c = truth.dose_poly(X)
    return float(np.mean(c[:, 0] + c[:, 1] * a + c[:, 2] * a * a))


def value_observed(truth: CompositeSurface, beta0: float, grid: DoseGrid,
                   x_sample) -> float:
    """Mean composite outcome under the generative assignment density."""
    X = np.atleast_2d(np.asarray(x_sample, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("x_sample must be nonempty")
    qt = truth.on_grid(X, grid.points)
    p = grid_masses(beta0 * qt, grid.quad_weights)
    return float(np.mean(np.einsum("ij,ij->i", p, qt)))
