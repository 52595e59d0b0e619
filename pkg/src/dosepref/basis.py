"""Polynomial design bases for dose-response regression.

Feature order is fixed: intercept, covariate main effects, dose, dose
squared, then dose-by-covariate interactions in the order given by
``interaction_indices``.  Every basis in this family is (at most)
quadratic in the dose for fixed covariates, which the rest of the
package exploits for fast grid evaluation.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["BasisSpec", "build_design", "design_matrix", "default_basis"]


@dataclass(frozen=True)
class BasisSpec:
    degree_in_dose: int = 2
    interaction_indices: tuple[int, ...] = ()
    include_main_covariates: bool = True
    include_intercept: bool = True

    def __post_init__(self):
        if self.degree_in_dose not in (1, 2):
            raise ValueError("degree_in_dose must be 1 or 2")
        idx = tuple(self.interaction_indices)
        if len(set(idx)) != len(idx):
            raise ValueError("interaction_indices must be distinct")
        object.__setattr__(self, "interaction_indices", idx)

    def n_features(self, p: int) -> int:
        return (
            int(self.include_intercept)
            + p * int(self.include_main_covariates)
            + 1
            + int(self.degree_in_dose == 2)
            + len(self.interaction_indices)
        )

    def feature_names(self, p: int) -> list[str]:
        names = []
        if self.include_intercept:
            names.append("1")
        if self.include_main_covariates:
            names.extend(f"x{j + 1}" for j in range(p))
        names.append("a")
        if self.degree_in_dose == 2:
            names.append("a^2")
        names.extend(f"a*x{j + 1}" for j in self.interaction_indices)
        return names


def default_basis(p: int) -> BasisSpec:
    """Intercept + mains + a + a^2 + all dose-covariate interactions."""
    return BasisSpec(degree_in_dose=2, interaction_indices=tuple(range(p)))


def _check_indices(spec: BasisSpec, p: int) -> None:
    for j in spec.interaction_indices:
        if not 0 <= j < p:
            raise IndexError(f"interaction index {j} out of range for p={p}")


def build_design(spec: BasisSpec, x, a: float) -> np.ndarray:
    """Feature vector for a single (covariate vector, dose) pair."""
    x = np.asarray(x, dtype=float)
    _check_indices(spec, x.size)
    feats = []
    if spec.include_intercept:
        feats.append(1.0)
    if spec.include_main_covariates:
        feats.extend(x)
    feats.append(a)
    if spec.degree_in_dose == 2:
        feats.append(a * a)
    feats.extend(a * x[j] for j in spec.interaction_indices)
    return np.array(feats, dtype=float)


def design_matrix(spec: BasisSpec, X: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Stacked design for per-row doses. X is (n, p), a is (n,)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = np.asarray(a, dtype=float)
    n, p = X.shape
    _check_indices(spec, p)
    cols = []
    if spec.include_intercept:
        cols.append(np.ones(n))
    if spec.include_main_covariates:
        cols.extend(X[:, j] for j in range(p))
    cols.append(a)
    if spec.degree_in_dose == 2:
        cols.append(a * a)
    cols.extend(a * X[:, j] for j in spec.interaction_indices)
    return np.column_stack(cols)


def dose_poly_coeffs(spec: BasisSpec, coeffs: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Per-row coefficients (c0, c1, c2) of the surface as a polynomial in dose.

    Returns an (n, 3) array such that Q(x_i, a) = c0_i + c1_i*a + c2_i*a^2.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    _check_indices(spec, p)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size != spec.n_features(p):
        raise ValueError(
            f"coefficient length {coeffs.size} != basis dimension {spec.n_features(p)}"
        )
    out = np.zeros((n, 3))
    k = 0
    if spec.include_intercept:
        out[:, 0] += coeffs[k]
        k += 1
    if spec.include_main_covariates:
        out[:, 0] += X @ coeffs[k : k + p]
        k += p
    out[:, 1] += coeffs[k]
    k += 1
    if spec.degree_in_dose == 2:
        out[:, 2] += coeffs[k]
        k += 1
    for j in spec.interaction_indices:
        out[:, 1] += coeffs[k] * X[:, j]
        k += 1
    return out
