"""Core domain types: samples, dose grids, preference weights, outcome surfaces.

All types are immutable after construction and all operations are pure,
so instances can be shared freely across workers.
"""

from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, build_design, dose_poly_coeffs

__all__ = [
    "Sample",
    "DoseGrid",
    "PreferenceModel",
    "OutcomeSurface",
    "CompositeSurface",
    "expit",
    "logit",
    "weight",
    "weight_grad",
    "composite_eval",
    "contrast_eval",
]


def expit(u):
    """Logistic function 1/(1+exp(-u)), overflow-safe for any float input.

    Branches on sign so exp is only ever taken of a non-positive argument.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out if out.ndim else float(out)


def logit(w):
    w = np.asarray(w, dtype=float)
    out = np.log(w) - np.log1p(-w)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Sample:
    """One observation: covariates, assigned dose, and the two outcomes."""

    x: np.ndarray
    a: float
    y: float
    z: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if not (np.all(np.isfinite(x)) and np.isfinite(self.a)
                and np.isfinite(self.y) and np.isfinite(self.z)):
            raise ValueError("Sample fields must be finite")


@dataclass(frozen=True)
class DoseGrid:
    """Uniform grid over the dose interval, used for quadrature and argmax."""

    a_min: float
    a_max: float
    m: int

    def __post_init__(self):
        if not self.a_min < self.a_max:
            raise ValueError("a_min must be < a_max")
        if self.m < 3:
            raise ValueError("need at least 3 grid points")

    @property
    def step(self) -> float:
        return (self.a_max - self.a_min) / (self.m - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.a_min, self.a_max, self.m)

    @property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid-rule quadrature weights; they sum to a_max - a_min."""
        w = np.full(self.m, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w

    def contains(self, a) -> bool:
        a = np.asarray(a)
        tol = 1e-9 * (self.a_max - self.a_min)
        return bool(np.all(a >= self.a_min - tol) and np.all(a <= self.a_max + tol))

    def refined(self) -> "DoseGrid":
        """Grid with the step halved (same endpoints)."""
        return DoseGrid(self.a_min, self.a_max, 2 * self.m - 1)


@dataclass(frozen=True)
class PreferenceModel:
    """Logistic-linear preference weight w(x) = expit(theta . (1, x_sel)).

    ``theta[0]`` is the intercept; the remaining entries align with
    ``weight_covariate_indices`` into the raw covariate vector.  An
    intercept-only model (no covariates) encodes a population-constant
    weight omega = expit(theta[0]).
    """

    theta: np.ndarray
    weight_covariate_indices: tuple[int, ...] = ()

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if not np.all(np.isfinite(t)):
            raise ValueError("theta must be finite")
        idx = tuple(self.weight_covariate_indices)
        if len(set(idx)) != len(idx):
            raise ValueError("weight covariate indices must be distinct")
        if t.size != 1 + len(idx):
            raise ValueError("theta length must be 1 + number of weight covariates")
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "weight_covariate_indices", idx)

    @property
    def q(self) -> int:
        return self.theta.size

    def with_theta(self, theta) -> "PreferenceModel":
        return PreferenceModel(theta, self.weight_covariate_indices)

    def design_row(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        for j in self.weight_covariate_indices:
            if not 0 <= j < x.size:
                raise IndexError(f"weight covariate index {j} out of range")
        return np.concatenate(([1.0], x[list(self.weight_covariate_indices)]))

    def design_matrix(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        for j in self.weight_covariate_indices:
            if not 0 <= j < X.shape[1]:
                raise IndexError(f"weight covariate index {j} out of range")
        cols = [np.ones(X.shape[0])]
        cols.extend(X[:, j] for j in self.weight_covariate_indices)
        return np.column_stack(cols)

    def weights(self, X) -> np.ndarray:
        return expit(self.design_matrix(X) @ self.theta)


def weight(pref: PreferenceModel, x) -> float:
    """Preference weight on outcome Y at covariates x."""
    return float(expit(pref.design_row(x) @ pref.theta))


def weight_grad(pref: PreferenceModel, x) -> np.ndarray:
    """d w / d theta = w (1 - w) * (1, x_sel)."""
    xw = pref.design_row(x)
    w = expit(float(xw @ pref.theta))
    return w * (1.0 - w) * xw


@dataclass(frozen=True)
class OutcomeSurface:
    """Coefficient-based conditional-mean surface Q(x, a) over a BasisSpec."""

    basis: BasisSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if not np.all(np.isfinite(c)):
            raise ValueError("surface coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x, a: float) -> float:
        return float(build_design(self.basis, x, a) @ self.coeffs)

    def dose_poly(self, X) -> np.ndarray:
        """(n, 3) quadratic-in-dose coefficients per covariate row."""
        return dose_poly_coeffs(self.basis, self.coeffs, X)

    def on_grid(self, X, points: np.ndarray) -> np.ndarray:
        """(n, m) surface values at every (row of X, grid point)."""
        c = self.dose_poly(X)
        return c[:, [0]] + np.outer(c[:, 1], points) + np.outer(c[:, 2], points**2)

    def at(self, X, a) -> np.ndarray:
        """Surface values at per-row doses. X (n, p), a (n,)."""
        c = self.dose_poly(X)
        a = np.asarray(a, dtype=float)
        return c[:, 0] + c[:, 1] * a + c[:, 2] * a * a


@dataclass(frozen=True)
class CompositeSurface:
    """Weighted composite Q(x,a) = w(x) Q_Y(x,a) + (1 - w(x)) Q_Z(x,a)."""

    q_y: OutcomeSurface
    q_z: OutcomeSurface
    pref: PreferenceModel

    def weight_at(self, x) -> float:
        return weight(self.pref, x)

    def __call__(self, x, a: float) -> float:
        w = self.weight_at(x)
        return w * self.q_y(x, a) + (1.0 - w) * self.q_z(x, a)

    def contrast(self, x, a: float) -> float:
        return self.q_y(x, a) - self.q_z(x, a)

    def on_grid(self, X, points: np.ndarray) -> np.ndarray:
        w = self.pref.weights(X)[:, None]
        return w * self.q_y.on_grid(X, points) + (1.0 - w) * self.q_z.on_grid(X, points)

    def dose_poly(self, X) -> np.ndarray:
        w = self.pref.weights(X)[:, None]
        return w * self.q_y.dose_poly(X) + (1.0 - w) * self.q_z.dose_poly(X)


def composite_eval(cs: CompositeSurface, x, a: float) -> float:
    return cs(x, a)


def contrast_eval(cs: CompositeSurface, x, a: float) -> float:
    return cs.contrast(x, a)
