"""Generative scenarios and the Monte Carlo study runner.

A scenario draws covariates from independent normals, assigns doses from
the exponential-tilt density at the true composite surface, and adds
normal noise to the two quadratic outcome models.  ``run_study``
aggregates replications into estimation, error-rate, and policy-value
tables.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .basis import default_basis
from .density import sample_doses_rows
from .inference import (InferenceDeclinedError, InferenceResult, make_inference,
                        wald, weight_ci)
from .likelihood import (NEAR_SINGULAR, EstimateResult, EstimationError,
                         FitConfig, KernelData, fit)
from .model import (CompositeSurface, DoseGrid, OutcomeSurface,
                    PreferenceModel, Sample, expit, logit)
from .policy import Policy, PolicyKind, value_observed, value_under_policy

__all__ = [
    "Scenario",
    "ReplicationResult",
    "StudyTables",
    "generate_dataset",
    "run_replication",
    "run_study",
]

DEFAULT_GRID = DoseGrid(-6.0, 6.0, 241)

# reference covariates for weight-CI coverage tracking
_X_REF = (0.3, -0.3)


@dataclass(frozen=True)
class Scenario:
    beta0: float
    n: int
    weight_kind: str = "fixed"            # "fixed" or "patient_specific"
    omega0: float = 0.3                   # fixed-utility truth
    theta0: tuple = (0.0, -2.0, 2.0)      # patient-specific truth
    p: int = 2
    x_sd: float = 0.5
    coef_y: tuple = (4.0, -2.0, 2.0)      # (x1, x2, const) dose-slope coefficients
    coef_z: tuple = (2.0, -4.0, -2.0)
    curvature: float = -2.0
    noise_sd: float = 0.5
    grid: DoseGrid = DEFAULT_GRID
    n_reps: int = 500
    n_eval: int = 10_000
    master_seed: int = 20240901
    alpha: float = 0.05
    n_restarts: int = 3

    def __post_init__(self):
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        if self.beta0 <= 0:
            raise ValueError("data generation needs beta0 > 0")
        if self.weight_kind not in ("fixed", "patient_specific"):
            raise ValueError("weight_kind must be 'fixed' or 'patient_specific'")

    @property
    def weight_covs(self) -> tuple:
        return () if self.weight_kind == "fixed" else (0, 1)

    def true_pref(self) -> PreferenceModel:
        if self.weight_kind == "fixed":
            return PreferenceModel([logit(self.omega0)], ())
        return PreferenceModel(self.theta0, (0, 1))

    def true_surfaces(self) -> tuple[OutcomeSurface, OutcomeSurface]:
        spec = default_basis(self.p)

        def coeffs(slopes):
            c = np.zeros(spec.n_features(self.p))
            c[1 + self.p] = slopes[-1]       # dose main effect
            c[2 + self.p] = self.curvature   # dose squared
            c[3 + self.p:] = slopes[:-1]     # dose-covariate interactions
            return c

        return (OutcomeSurface(spec, coeffs(self.coef_y)),
                OutcomeSurface(spec, coeffs(self.coef_z)))

    def true_composite(self) -> CompositeSurface:
        q_y, q_z = self.true_surfaces()
        return CompositeSurface(q_y, q_z, self.true_pref())

    def true_params(self) -> np.ndarray:
        theta = ([logit(self.omega0)] if self.weight_kind == "fixed"
                 else list(self.theta0))
        return np.array([self.beta0, *theta])

    def param_names(self) -> list[str]:
        if self.weight_kind == "fixed":
            return ["beta", "omega"]
        return ["beta"] + [f"theta_{k}" for k in range(len(self.theta0))]


def replication_seed(master_seed: int, rep_index: int) -> np.random.SeedSequence:
    """Per-replication seed: SeedSequence keyed on (master_seed, rep_index)."""
    return np.random.SeedSequence(entropy=(master_seed, rep_index))


def _generate_arrays(sc: Scenario, rng: np.random.Generator):
    X = rng.normal(0.0, sc.x_sd, size=(sc.n, sc.p))
    truth = sc.true_composite()
    qt = truth.on_grid(X, sc.grid.points)
    a = sample_doses_rows(sc.beta0 * qt, sc.grid, rng.random(sc.n))
    q_y, q_z = sc.true_surfaces()
    y = q_y.at(X, a) + rng.normal(0.0, sc.noise_sd, size=sc.n)
    z = q_z.at(X, a) + rng.normal(0.0, sc.noise_sd, size=sc.n)
    return X, a, y, z


def generate_dataset(sc: Scenario, seed) -> list[Sample]:
    """One synthetic dataset, deterministic given the seed."""
    rng = np.random.default_rng(seed)
    X, a, y, z = _generate_arrays(sc, rng)
    return [Sample(X[i], a[i], y[i], z[i]) for i in range(sc.n)]


@dataclass(frozen=True)
class ReplicationResult:
    rep_index: int
    estimate: EstimateResult
    inference: InferenceResult | None
    flagged: bool
    values: dict
    rejected_h0: dict
    estimates_named: dict


@dataclass(frozen=True)
class StudyTables:
    scenario: Scenario
    estimate_table: dict      # name -> (mean, sd) over unflagged replications
    error_table: dict         # test name -> rejection rate
    value_table: dict         # policy name -> (mean, sd) over all replications
    n_flagged: int
    n_reps: int
    coverage: float | None    # weight-CI coverage at the reference covariates


def run_replication(sc: Scenario, rep_index: int) -> ReplicationResult:
    """Full pipeline on one fresh dataset: fit surfaces, maximize the
    pseudo-likelihood, run inference, and score all five policies against
    the true composite surface on a fresh covariate sample."""
    ss = replication_seed(sc.master_seed, rep_index)
    rng_data, rng_eval = (np.random.default_rng(s) for s in ss.spawn(2))
    X, a, y, z = _generate_arrays(sc, rng_data)

    spec = default_basis(sc.p)
    from .regression import fit_surface

    qy_hat, _ = fit_surface((X, a, y), spec)
    qz_hat, _ = fit_surface((X, a, z), spec)

    kd = KernelData((X, a), qy_hat, qz_hat, sc.weight_covs, sc.grid)
    cfg = FitConfig(grid=sc.grid, n_restarts=sc.n_restarts)
    est = fit(kd, None, None, sc.weight_covs, cfg)

    inf = None
    flagged = NEAR_SINGULAR in est.flags
    if not flagged:
        try:
            inf = make_inference(kd, est)
        except InferenceDeclinedError:
            flagged = True

    truth = sc.true_composite()
    pref_hat = PreferenceModel(est.theta_hat, sc.weight_covs)
    cs_hat = CompositeSurface(qy_hat, qz_hat, pref_hat)

    x_eval = rng_eval.normal(0.0, sc.x_sd, size=(sc.n_eval, sc.p))
    policies = {
        "Optimal": Policy(PolicyKind.COMPOSITE_ARGMAX, sc.grid, cs=truth),
        "New": Policy(PolicyKind.COMPOSITE_ARGMAX, sc.grid, cs=cs_hat),
        "Y-Optimizer": Policy(PolicyKind.Y_ONLY, sc.grid, cs=cs_hat),
        "Z-Optimizer": Policy(PolicyKind.Z_ONLY, sc.grid, cs=cs_hat),
    }
    values = {name: value_under_policy(pol, truth, x_eval)
              for name, pol in policies.items()}
    values["Observed"] = value_observed(truth, sc.beta0, sc.grid, x_eval)

    named = {"beta": est.beta_hat}
    if sc.weight_kind == "fixed":
        named["omega"] = float(expit(est.theta_hat[0]))
    else:
        for k, t in enumerate(est.theta_hat):
            named[f"theta_{k}"] = float(t)

    rejected = {}
    if inf is not None:
        z_beta, p_beta = wald(est, inf, 0, sc.beta0)
        rejected["beta"] = p_beta < sc.alpha
        _, p_pow = wald(est, inf, 0, 0.0)
        rejected["beta_zero"] = p_pow < sc.alpha
        if sc.weight_kind == "fixed":
            w_hat, lo, hi = weight_ci(pref_hat, inf.cov_theta, np.zeros(sc.p),
                                      level=1.0 - sc.alpha)
            rejected["omega"] = not (lo <= sc.omega0 <= hi)
        else:
            truth_params = sc.true_params()
            for k in range(est.theta_hat.size):
                _, p_k = wald(est, inf, 1 + k, truth_params[1 + k])
                rejected[f"theta_{k}"] = p_k < sc.alpha
        x_ref = np.array(_X_REF[: sc.p])
        w_true = truth.weight_at(x_ref)
        _, lo, hi = weight_ci(pref_hat, inf.cov_theta, x_ref, level=0.95)
        rejected["w_covered"] = lo <= w_true <= hi

    return ReplicationResult(
        rep_index=rep_index,
        estimate=est,
        inference=inf,
        flagged=flagged,
        values=values,
        rejected_h0=rejected,
        estimates_named=named,
    )


def _sd(vals: np.ndarray) -> float:
    return float(vals.std(ddof=1)) if vals.size > 1 else float("nan")


def run_study(sc: Scenario, n_workers: int = 1) -> StudyTables:
    """Run all replications and aggregate.

    Replications are seeded independently of scheduling, and aggregation
    is keyed by rep_index, so the tables are bit-identical for any worker
    count.
    """
    if n_workers <= 1:
        reps = [run_replication(sc, i) for i in range(sc.n_reps)]
    else:
        reps = Parallel(n_jobs=n_workers)(
            delayed(run_replication)(sc, i) for i in range(sc.n_reps))
    reps.sort(key=lambda r: r.rep_index)

    clean = [r for r in reps if not r.flagged]
    n_flagged = len(reps) - len(clean)

    estimate_table = {}
    for name in sc.param_names():
        vals = np.array([r.estimates_named[name] for r in clean])
        estimate_table[name] = (float(vals.mean()), _sd(vals))

    error_table = {}
    with_tests = [r for r in clean if r.rejected_h0]
    if with_tests:
        test_names = [k for k in with_tests[0].rejected_h0 if k != "w_covered"]
        for t in test_names:
            rate = np.mean([r.rejected_h0[t] for r in with_tests])
            error_table[t] = float(rate)

    value_table = {}
    for name in reps[0].values:
        vals = np.array([r.values[name] for r in reps])
        value_table[name] = (float(vals.mean()), _sd(vals))

    coverage = None
    if with_tests:
        coverage = float(np.mean([r.rejected_h0["w_covered"] for r in with_tests]))

    return StudyTables(
        scenario=sc,
        estimate_table=estimate_table,
        error_table=error_table,
        value_table=value_table,
        n_flagged=n_flagged,
        n_reps=sc.n_reps,
        coverage=coverage,
    )
