"""Command-line frontend: fit, infer, policy, simulate.

Data CSVs carry a header row with columns ``x1..xp, a, y, z``.  Estimates
are exchanged as JSON (format_version 1) containing the grid, the basis,
the fitted surface coefficients, and the pseudo-likelihood estimates, so
downstream commands need no access to the original fitting session.

Exit codes: 0 success, 1 input error, 2 estimation/inference error,
3 inference declined (near-singular information matrix).
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from .basis import BasisSpec, default_basis
from .inference import InferenceDeclinedError, InferenceError, make_inference, weight_ci
from .likelihood import (NEAR_SINGULAR, EstimateResult, EstimationError,
                         FitConfig, KernelData, fit)
from .model import CompositeSurface, DoseGrid, OutcomeSurface, PreferenceModel
from .policy import Policy, PolicyKind
from .regression import RankDeficiencyError, fit_surface
from .simulation import DEFAULT_GRID, Scenario, run_study

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ESTIMATION = 2
EXIT_DECLINED = 3

FORMAT_VERSION = 1

_FMT = "%.17g"  # round-trips float64 exactly


class InputError(ValueError):
    pass


def _fail(stream, code: int, kind: str, msg: str) -> int:
    print(f"error: {kind}: {msg}", file=stream)
    return code


# ---------------------------------------------------------------- file I/O

def read_data_csv(path):
    """Read a dataset CSV with header x1..xp, a, y, z."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(str(exc))
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 4 or header[-3:] != ["a", "y", "z"]:
        raise InputError(f"{path}: header must end with a,y,z")
    p = len(header) - 3
    if header[:p] != [f"x{j + 1}" for j in range(p)]:
        raise InputError(f"{path}: covariate columns must be named x1..x{p}")
    try:
        body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric cell ({exc})")
    if body.size == 0:
        raise InputError(f"{path}: no data rows")
    return body[:, :p], body[:, p], body[:, p + 1], body[:, p + 2]


def write_data_csv(path, X, a, y, z):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    p = X.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(p)] + ["a", "y", "z"])
        for i in range(X.shape[0]):
            w.writerow([_FMT % v for v in (*X[i], a[i], y[i], z[i])])


def read_covariates_csv(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(str(exc))
    if not rows:
        raise InputError(f"{path}: empty file")
    p = len(rows[0])
    if rows[0] != [f"x{j + 1}" for j in range(p)]:
        raise InputError(f"{path}: header must be x1..x{p}")
    try:
        return np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric cell ({exc})")


def _grid_to_json(grid: DoseGrid) -> dict:
    return {"a_min": grid.a_min, "a_max": grid.a_max, "m": grid.m}


def _grid_from_json(d: dict) -> DoseGrid:
    return DoseGrid(float(d["a_min"]), float(d["a_max"]), int(d["m"]))


def _basis_to_json(spec: BasisSpec) -> dict:
    return {
        "degree_in_dose": spec.degree_in_dose,
        "interaction_indices": list(spec.interaction_indices),
        "include_main_covariates": spec.include_main_covariates,
        "include_intercept": spec.include_intercept,
    }


def _basis_from_json(d: dict) -> BasisSpec:
    return BasisSpec(
        degree_in_dose=int(d["degree_in_dose"]),
        interaction_indices=tuple(d["interaction_indices"]),
        include_main_covariates=bool(d["include_main_covariates"]),
        include_intercept=bool(d["include_intercept"]),
    )


def estimate_to_json(est: EstimateResult, qy, qz, weight_covs, grid, inf=None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "theta": list(est.theta_hat),
        "beta": est.beta_hat,
        "loglik": est.loglik,
        "converged": est.converged,
        "iterations": est.iterations,
        "grad_norm": est.grad_norm,
        "flags": sorted(est.flags),
        "weight_covs": list(weight_covs),
        "grid": _grid_to_json(grid),
        "basis": _basis_to_json(qy.basis),
        "qy_coeffs": list(qy.coeffs),
        "qz_coeffs": list(qz.coeffs),
        "covariance": None,
    }
    if inf is not None:
        doc["covariance"] = [list(row) for row in inf.cov_hat]
        doc["se"] = list(inf.se)
        doc["z_stats"] = list(inf.z_stats)
        doc["p_values"] = list(inf.p_values)
        doc["ci_level"] = inf.ci_level
    return doc


def load_estimate(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}")
    if doc.get("format_version") != FORMAT_VERSION:
        raise InputError(f"{path}: unsupported format_version")
    spec = _basis_from_json(doc["basis"])
    qy = OutcomeSurface(spec, np.asarray(doc["qy_coeffs"], dtype=float))
    qz = OutcomeSurface(spec, np.asarray(doc["qz_coeffs"], dtype=float))
    pref = PreferenceModel(np.asarray(doc["theta"], dtype=float),
                           tuple(doc["weight_covs"]))
    grid = _grid_from_json(doc["grid"])
    return doc, qy, qz, pref, grid


# ------------------------------------------------------------- subcommands

def _parse_weight_covs(arg: str, p: int):
    """1-based column indices into x1..xp; empty string = intercept-only."""
    if not arg:
        return ()
    try:
        covs = tuple(int(tok) - 1 for tok in arg.split(","))
    except ValueError:
        raise InputError(f"bad --weight-covs value {arg!r}")
    for j in covs:
        if not 0 <= j < p:
            raise InputError(f"--weight-covs index {j + 1} out of range for p={p}")
    return covs


def _grid_from_args(args, a) -> DoseGrid:
    a_min = args.grid_min if args.grid_min is not None else float(np.min(a))
    a_max = args.grid_max if args.grid_max is not None else float(np.max(a))
    return DoseGrid(a_min, a_max, args.grid_m)


def cmd_fit(args, out, err) -> int:
    X, a, y, z = read_data_csv(args.data)
    grid = _grid_from_args(args, a)
    spec = default_basis(X.shape[1])
    weight_covs = _parse_weight_covs(args.weight_covs, X.shape[1])
    try:
        qy, _ = fit_surface((X, a, y), spec)
        qz, _ = fit_surface((X, a, z), spec)
        kd = KernelData((X, a), qy, qz, weight_covs, grid)
        est = fit(kd, None, None, weight_covs, FitConfig(grid=grid))
    except (RankDeficiencyError, EstimationError) as exc:
        return _fail(err, EXIT_ESTIMATION, "estimation", str(exc))
    doc = estimate_to_json(est, qy, qz, weight_covs, grid)
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    if NEAR_SINGULAR in est.flags:
        return _fail(err, EXIT_DECLINED, "declined", "NEAR_SINGULAR fit")
    return EXIT_OK


def cmd_infer(args, out, err) -> int:
    doc, qy, qz, pref, grid = load_estimate(args.estimate)
    X, a, y, z = read_data_csv(args.data)
    est = EstimateResult(
        theta_hat=np.asarray(doc["theta"], dtype=float),
        beta_hat=float(doc["beta"]),
        loglik=float(doc["loglik"]),
        iterations=int(doc["iterations"]),
        converged=bool(doc["converged"]),
        grad_norm=float(doc["grad_norm"]),
        flags=frozenset(doc["flags"]),
    )
    if NEAR_SINGULAR in est.flags:
        return _fail(err, EXIT_DECLINED, "declined", "NEAR_SINGULAR fit")
    kd = KernelData((X, a), qy, qz, pref.weight_covariate_indices, grid)
    try:
        inf = make_inference(kd, est, ci_level=args.ci_level)
    except InferenceDeclinedError as exc:
        return _fail(err, EXIT_DECLINED, "declined", str(exc))
    except InferenceError as exc:
        return _fail(err, EXIT_ESTIMATION, "inference", str(exc))
    doc = estimate_to_json(est, qy, qz, pref.weight_covariate_indices, grid, inf=inf)
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    return EXIT_OK


def cmd_policy(args, out, err) -> int:
    doc, qy, qz, pref, grid = load_estimate(args.estimate)
    X = read_covariates_csv(args.covariates)
    cs = CompositeSurface(qy, qz, pref)
    pol = Policy(PolicyKind.COMPOSITE_ARGMAX, grid, cs=cs)
    doses = pol.doses(X)
    cov = np.asarray(doc["covariance"], dtype=float) if doc.get("covariance") else None
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["dose", "weight"]
        if cov is not None:
            header += ["weight_lo", "weight_hi"]
        w.writerow(header)
        for i in range(X.shape[0]):
            row = [_FMT % doses[i]]
            if cov is not None:
                wh, lo, hi = weight_ci(pref, cov[1:, 1:], X[i],
                                       level=doc.get("ci_level", 0.95))
                row += [_FMT % wh, _FMT % lo, _FMT % hi]
            else:
                row.append(_FMT % cs.weight_at(X[i]))
            w.writerow(row)
    return EXIT_OK


def load_scenario(path, seed_override=None) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}")
    kwargs = dict(doc)
    if "grid" in kwargs:
        kwargs["grid"] = _grid_from_json(kwargs["grid"])
    for key in ("theta0", "coef_y", "coef_z"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if seed_override is not None:
        kwargs["master_seed"] = seed_override
    try:
        return Scenario(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad scenario ({exc})")


def write_study_csvs(tables, out_dir):
    os.makedirs(out_dir, exist_ok=True)

    def dump(name, header, rows):
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    dump("estimate_table.csv", ["parameter", "mean", "sd"],
         [[k, _FMT % v[0], _FMT % v[1]] for k, v in tables.estimate_table.items()])
    dump("error_table.csv", ["test", "rejection_rate"],
         [[k, _FMT % v] for k, v in tables.error_table.items()])
    dump("value_table.csv", ["policy", "mean", "sd"],
         [[k, _FMT % v[0], _FMT % v[1]] for k, v in tables.value_table.items()])
    summary = [["n_reps", str(tables.n_reps)], ["n_flagged", str(tables.n_flagged)]]
    if tables.coverage is not None:
        summary.append(["weight_ci_coverage", _FMT % tables.coverage])
    dump("summary.csv", ["key", "value"], summary)


def cmd_simulate(args, out, err) -> int:
    sc = load_scenario(args.scenario, seed_override=args.seed)
    workers = args.workers or int(os.environ.get("DOSEPREF_WORKERS", "1"))
    try:
        tables = run_study(sc, n_workers=workers)
    except EstimationError as exc:
        return _fail(err, EXIT_ESTIMATION, "estimation", str(exc))
    write_study_csvs(tables, args.out_dir)
    return EXIT_OK


# -------------------------------------------------------------- arg parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dosepref")
    sub = ap.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit surfaces and the pseudo-likelihood")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--weight-covs", default="",
                       help="comma-separated 1-based covariate columns in the weight model")
    p_fit.add_argument("--grid-min", type=float, default=None)
    p_fit.add_argument("--grid-max", type=float, default=None)
    p_fit.add_argument("--grid-m", type=int, default=201)
    p_fit.set_defaults(func=cmd_fit)

    p_inf = sub.add_parser("infer", help="add asymptotic SEs/tests to an estimate")
    p_inf.add_argument("--estimate", required=True)
    p_inf.add_argument("--data", required=True)
    p_inf.add_argument("--out", required=True)
    p_inf.add_argument("--ci-level", type=float, default=0.95)
    p_inf.set_defaults(func=cmd_infer)

    p_pol = sub.add_parser("policy", help="recommended doses for new covariates")
    p_pol.add_argument("--estimate", required=True)
    p_pol.add_argument("--covariates", required=True)
    p_pol.add_argument("--out", required=True)
    p_pol.set_defaults(func=cmd_policy)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo study")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--out-dir", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--workers", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    return ap


def run(argv, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args, out, err)
    except InputError as exc:
        return _fail(err, EXIT_INPUT, "input", str(exc))
    except (ValueError, IndexError) as exc:
        return _fail(err, EXIT_INPUT, "input", str(exc))


def main() -> None:
    sys.exit(run(sys.argv[1:]))
