"""Asymptotic inference for the fitted (beta, theta).

The information matrix is the average conditional covariance, under the
fitted assignment density, of the vector (Q_theta(x, A), beta*R(x, A)*w'(x));
its inverse over n is the plug-in asymptotic covariance of the estimates.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .likelihood import COND_LIMIT, EstimateResult, KernelData
from .model import PreferenceModel, expit

__all__ = [
    "InferenceResult",
    "InferenceDeclinedError",
    "InferenceError",
    "b_matrix",
    "make_inference",
    "wald",
    "weight_ci",
]


class InferenceError(RuntimeError):
    pass


class InferenceDeclinedError(InferenceError):
    """Information matrix is numerically singular; no inference for this fit."""


@dataclass(frozen=True)
class InferenceResult:
    b_hat: np.ndarray
    cov_hat: np.ndarray   # b_hat^{-1} / n
    se: np.ndarray        # order: beta, then theta components
    z_stats: np.ndarray   # against zero nulls
    p_values: np.ndarray
    ci_level: float = 0.95

    @property
    def cov_theta(self) -> np.ndarray:
        return self.cov_hat[1:, 1:]


def b_matrix(data, q_y, q_z, pref_shape, theta_hat, beta_hat, grid) -> np.ndarray:
    """Plug-in information matrix at the fitted parameters."""
    kd = data if isinstance(data, KernelData) else KernelData(data, q_y, q_z, pref_shape, grid)
    return kd.accumulate(theta_hat, beta_hat)[3]


def make_inference(kd_or_bmat, est: EstimateResult, *, n: int | None = None,
                   ci_level: float = 0.95) -> InferenceResult:
    """Standard errors, z statistics and p-values from the B matrix.

    Accepts either a KernelData (B is computed at the fitted parameters)
    or a precomputed B matrix plus ``n``.
    """
    if isinstance(kd_or_bmat, KernelData):
        b_hat = kd_or_bmat.accumulate(est.theta_hat, est.beta_hat)[3]
        n = kd_or_bmat.n
    else:
        b_hat = np.asarray(kd_or_bmat, dtype=float)
        if n is None:
            raise ValueError("n is required with a precomputed B matrix")
    cond = np.linalg.cond(b_hat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise InferenceDeclinedError(
            f"B matrix condition estimate {cond:.3g} exceeds {COND_LIMIT:.0e}")
    cov = np.linalg.inv(b_hat) / n
    diag = np.diag(cov)
    if np.any(diag <= 0):
        raise InferenceDeclinedError("non-positive variance estimate")
    se = np.sqrt(diag)
    z = est.params / se
    p = 2.0 * stats.norm.sf(np.abs(z))
    return InferenceResult(b_hat=b_hat, cov_hat=cov, se=se,
                           z_stats=z, p_values=p, ci_level=ci_level)


def wald(est: EstimateResult, inf: InferenceResult, component: int,
         null_value: float) -> tuple[float, float]:
    """Two-sided Wald z test of one component (0 is beta, 1.. are theta)."""
    se = inf.se[component]
    if se <= 0:
        raise InferenceError("zero standard error")
    z = (est.params[component] - null_value) / se
    return float(z), float(2.0 * stats.norm.sf(abs(z)))


def weight_ci(pref: PreferenceModel, cov_theta: np.ndarray, x,
              level: float = 0.95) -> tuple[float, float, float]:
    """Delta-method confidence interval for w(x; theta_hat), clipped to [0, 1]."""
    xw = pref.design_row(x)
    w = float(expit(xw @ pref.theta))
    g = w * (1.0 - w) * xw
    var = float(g @ np.asarray(cov_theta, dtype=float) @ g)
    half = stats.norm.ppf(0.5 + level / 2.0) * np.sqrt(max(var, 0.0))
    return w, max(0.0, w - half), min(1.0, w + half)
