"""Least-squares fitting of the conditional outcome mean surfaces."""

from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, design_matrix
from .model import OutcomeSurface

__all__ = ["FitDiagnostics", "RankDeficiencyError", "fit_surface"]


class RankDeficiencyError(ValueError):
    """Design matrix is numerically rank-deficient."""


@dataclass(frozen=True)
class FitDiagnostics:
    rss: float
    n: int
    condition_estimate: float
    rank_ok: bool


def fit_surface(samples, spec: BasisSpec) -> tuple[OutcomeSurface, FitDiagnostics]:
    """Least-squares surface fit for one outcome.

    ``samples`` is a sequence of (x, a, response) triples, or a tuple of
    arrays (X, a, r).  Solved by QR/SVD rather than normal equations so
    condition numbers up to ~1e8 are handled.
    """
    if isinstance(samples, tuple) and len(samples) == 3:
        X, a, r = samples
        X = np.atleast_2d(np.asarray(X, dtype=float))
        a = np.asarray(a, dtype=float)
        r = np.asarray(r, dtype=float)
    else:
        X = np.array([np.asarray(s[0], dtype=float) for s in samples])
        a = np.array([s[1] for s in samples], dtype=float)
        r = np.array([s[2] for s in samples], dtype=float)

    D = design_matrix(spec, X, a)
    n, d = D.shape
    if n <= d:
        raise ValueError(f"need more than {d} observations, got {n}")

    sv = np.linalg.svd(D, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    rank = int(np.sum(sv > sv[0] * max(n, d) * np.finfo(float).eps))
    if rank < d:
        names = spec.feature_names(X.shape[1])
        # identify columns involved in the deficiency via the null space
        _, _, vt = np.linalg.svd(D)
        null_mask = np.abs(vt[rank:]).max(axis=0) > 1e-8
        bad = [names[j] for j in range(d) if null_mask[j]]
        raise RankDeficiencyError(
            f"design is rank deficient (rank {rank} < {d}); collinear columns: {bad}"
        )

    coeffs, _, _, _ = np.linalg.lstsq(D, r, rcond=None)
    resid = r - D @ coeffs
    diag = FitDiagnostics(
        rss=float(resid @ resid), n=n, condition_estimate=cond, rank_ok=True
    )
    return OutcomeSurface(spec, coeffs), diag
