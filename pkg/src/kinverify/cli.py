"""Batch verification driver.

Reads a JSON config naming distributions, kernel parameters and a task
list; runs each task; writes a machine-readable report.json plus
per-task CSV tables.  Exit code 0 means every check passed, 2 means at
least one check failed, 1 means the run itself could not execute.
Failures are collected, never fail-fast, so a single run reports every
violated condition.  All outputs are deterministic given (config,
seed); wall-clock metadata goes to a sidecar file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import distributions as dist
from . import kinetic_spaces as kin
from .kernel import (KernelParams, condition_cancellation,
                     condition_nondegeneracy, condition_upper_bound,
                     coercivity_energies, carleman_energy_identity)
from .frames import uniformity_scan
from .landau import landau_ellipticity_scan
from .mass_geometry import LineSpec, tube_complement_mass, worst_tube_scan
from .observables import check_hydro_bounds, compute_observables
from .quadrature import (QuadratureBudget, QuadratureError,
                         verify_weighted_trafo,
                         verify_weighted_trafo_ellipsoid)

SCHEMA_VERSION = 1

TASK_KINDS = {
    "observables": "macroscopic observables and moment table",
    "hydro_check": "mass / two-direction pressure / moment bound check",
    "tube_scan": "worst linear-tube complement mass over a grid",
    "ellipticity": "one kernel condition (upper | nondeg | cancel) on a grid",
    "coercivity": "kernel vs anisotropic reference energies for a bump family",
    "uniformity": "ellipticity constants across base velocities",
    "landau": "diffusion-limit coefficient ellipticity scan",
    "identities": "change-of-variables identity suite",
    "counterexample_sweep": "heavy-tail family: mass, tube and moment growth",
    "kinetic_norms": "sampled kinetic norms and the interpolation bound",
    "giusti": "iteration-lemma verifier",
}


class ConfigError(ValueError):
    pass


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s: line %d: %s"
                          % (path, exc.lineno, exc.msg)) from exc
    except OSError as exc:
        raise ConfigError("config %s: %s" % (path, exc)) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def parse_kernel(cfg: dict) -> KernelParams:
    k = cfg.get("kernel", {})
    return KernelParams(
        n=int(k.get("n", 2)), s=float(k.get("s", 0.5)),
        gamma=float(k.get("gamma", 0.0)),
        normalization=k.get("normalization", "grazing"),
        q_reference=float(k.get("q_reference", 4.0)))


def parse_budget(cfg: dict) -> QuadratureBudget:
    q = cfg.get("quad", {})
    return QuadratureBudget(
        rel_tol=float(q.get("rel_tol", 1e-6)),
        abs_tol=float(q.get("abs_tol", 1e-12)),
        max_evals=int(q.get("max_evals", 2_000_000)),
        truncation_radius=float(q.get("truncation_radius", 12.0)))


def validate(cfg: dict) -> list:
    """Schema and admissibility diagnostics without executing anything."""
    diags = []
    try:
        params = parse_kernel(cfg)
    except (ValueError, TypeError) as exc:
        return ["kernel: %s" % exc]
    try:
        parse_budget(cfg)
    except (ValueError, TypeError) as exc:
        diags.append("quad: %s" % exc)
    dists = cfg.get("distributions", {})
    if not isinstance(dists, dict):
        diags.append("distributions must be an object of named specs")
        dists = {}
    for name, spec in dists.items():
        try:
            dist.from_config(spec)
        except (ValueError, KeyError, TypeError) as exc:
            diags.append("distribution %r: %s" % (name, exc))
    needs_admissible = {"ellipticity", "uniformity", "coercivity"}
    for i, task in enumerate(cfg.get("tasks", [])):
        kind = task.get("kind")
        label = task.get("name", "task[%d]" % i)
        if kind not in TASK_KINDS:
            diags.append("%s: unknown kind %r" % (label, kind))
            continue
        dn = task.get("distribution")
        if kind not in ("identities", "counterexample_sweep",
                        "kinetic_norms", "giusti"):
            if dn not in dists:
                diags.append("%s: unknown distribution %r" % (label, dn))
        if kind in needs_admissible and not params.admissible():
            diags.append(
                "%s: kernel gamma + 2s = %.3g outside [0, %.3g]; "
                "the condition measurements assume admissibility"
                % (label, params.gamma + 2 * params.s, params.q_reference))
        if kind == "kinetic_norms":
            alpha = float(task.get("alpha", 0.5))
            p = float(task.get("p", 1.0))
            lo_hi = (alpha, params.n - 1)
            upper = params.n + params.gamma + 2 * params.s
            if not (lo_hi[0] < p < lo_hi[1] or p > upper):
                diags.append(
                    "%s: weight p = %g outside (%g, %g) union (%g, inf)"
                    % (label, p, lo_hi[0], lo_hi[1], upper))
    return diags


# ---------------------------------------------------------------------------
# task runners: each returns (status, metrics, csv_tables)
# where csv_tables maps filename -> (fieldnames, rows)
# ---------------------------------------------------------------------------

def _get_dist(cfg, task):
    return dist.from_config(cfg["distributions"][task["distribution"]])


def run_observables(cfg, task, params, budget, seed):
    f = _get_dist(cfg, task)
    rep = compute_observables(f, task.get("moment_orders", (2.0,)),
                              tol=task.get("tol", 1e-6), budget=budget)
    return "pass", rep.to_json(), {}


def run_hydro_check(cfg, task, params, budget, seed):
    f = _get_dist(cfg, task)
    q = float(task.get("q", params.q_reference))
    rep = compute_observables(f, (q,), budget=budget, with_entropy=False)
    res = check_hydro_bounds(rep, m0=float(task["m0"]), M0=float(task["M0"]),
                             p0=float(task["p0"]), Mq=float(task["Mq"]), q=q)
    failed = [k for k, ok in res.items() if k != "all_pass" and not ok]
    metrics = dict(res)
    metrics["failed_conditions"] = failed
    metrics["rho"] = rep.rho
    metrics["pressure_second_eig"] = float(np.sort(
        np.linalg.eigvalsh(rep.pressure))[::-1][1])
    metrics["moment"] = rep.moments[q]
    return ("pass" if res["all_pass"] else "fail"), metrics, {}


def run_tube_scan(cfg, task, params, budget, seed):
    f = _get_dist(cfg, task)
    delta = float(task.get("delta", 0.25))
    R = float(task.get("R", 5.0))
    offsets = task.get("offset_grid")
    offsets = np.asarray(offsets, float) if offsets is not None else None
    val, line, rows = worst_tube_scan(
        f, delta, R, direction_grid_size=int(task.get("direction_grid_size", 16)),
        offset_grid=offsets, budget=budget, with_table=True)
    metrics = {"min_mass": val,
               "line_point": line.point.tolist(),
               "line_direction": line.direction.tolist(),
               "delta": delta, "R": R}
    threshold = task.get("min_mass_threshold")
    status = "pass"
    if threshold is not None and val < float(threshold):
        status = "fail"
        metrics["threshold"] = float(threshold)
    tables = {"tube_scan.csv": (("direction", "offset", "mass"), rows)}
    return status, metrics, tables


def run_ellipticity(cfg, task, params, budget, seed):
    f = _get_dist(cfg, task)
    cond = task.get("condition", "nondeg")
    v_grid = task.get("v_grid")
    if v_grid is None:
        from .frames import default_scan_grid
        v_grid = default_scan_grid(params.n)
    else:
        v_grid = np.asarray(v_grid, float)
    r_list = task.get("r_list", [0.5])
    if cond in ("upper", "i"):
        rep = condition_upper_bound(f, params, r_list, v_grid, budget=budget)
    elif cond in ("nondeg", "ii"):
        rep = condition_nondegeneracy(f, params, r_list, v_grid, budget=budget)
    elif cond in ("cancel", "iv"):
        rep = condition_cancellation(f, params, r_list, v_grid, budget=budget)
    else:
        raise ConfigError("unknown ellipticity condition %r" % cond)
    metrics = rep.to_json()
    status = "pass"
    lam_min = task.get("lambda_min")
    if rep.inconsistent:
        status = "fail"
        metrics["reason"] = "cross-method disagreement beyond 5%"
    if lam_min is not None and (rep.lambda_meas or 0.0) < float(lam_min):
        status = "fail"
        metrics["reason"] = "lambda below threshold"
    rows = rep.to_csv_rows()
    tables = {"ellipticity_%s.csv" % rep.condition:
              (("condition", "v", "r", "e", "value", "method"), rows)}
    return status, metrics, tables


def _bump_family(centers, radius):
    fams = []
    for c in centers:
        c = np.asarray(c, float)

        def g(pts, c=c, radius=radius):
            pts = np.asarray(pts, float)
            d2 = np.sum((pts - c) ** 2, axis=-1) / radius ** 2
            out = np.zeros(pts.shape[:-1])
            inside = d2 < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - d2[inside]))
            return out

        fams.append(g)
    return fams


def run_coercivity(cfg, task, params, budget, seed):
    f = _get_dist(cfg, task)
    centers = task.get("bump_centers",
                       [[0.0] * params.n, [0.5] + [0.0] * (params.n - 1)])
    radius = float(task.get("bump_radius", 1.0))
    ratios = []
    rows = []
    for i, g in enumerate(_bump_family(centers, radius)):
        en = coercivity_energies(f, params, g,
                                 grid_radius=float(task.get("grid_radius", 4.0)),
                                 spacing=float(task.get("spacing", 0.1)),
                                 budget=budget)
        lam = en.kernel_energy / en.aniso_energy if en.aniso_energy > 0 else 0.0
        ratios.append(lam)
        rows.append({"bump": i, "kernel_energy": en.kernel_energy,
                     "aniso_energy": en.aniso_energy,
                     "hs_energy": en.hs_energy, "l2": en.l2,
                     "lambda_fit": lam})
    metrics = {"lambda_fits": ratios,
               "lambda_min": min(ratios), "lambda_max": max(ratios)}
    status = "pass" if min(ratios) > 0 else "fail"
    return status, metrics, {"coercivity.csv": (
        ("bump", "kernel_energy", "aniso_energy", "hs_energy", "l2",
         "lambda_fit"), rows)}


def run_uniformity(cfg, task, params, budget, seed, jobs: int = 1):
    f = _get_dist(cfg, task)
    v0_norms = task.get("v0_list", [0.0, 2.0, 5.0, 20.0, 50.0])
    v0_list = []
    for item in v0_norms:
        if np.isscalar(item):
            v0 = np.zeros(params.n)
            v0[0] = float(item)
        else:
            v0 = np.asarray(item, float)
        v0_list.append(v0)
    cond = task.get("condition", "nondeg")
    transformed = bool(task.get("transformed", True))
    if jobs > 1:
        scan = _parallel_uniformity(f, params, cond, v0_list, transformed,
                                    budget, jobs)
    else:
        scan = uniformity_scan(f, params, cond, v0_list,
                               transformed=transformed, budget=budget)
    metrics = {"lambda_ratio": scan.lambda_ratio,
               "Lambda_ratio": scan.Lambda_ratio,
               "contrast_max": scan.contrast_max,
               "transformed": transformed}
    status = "pass"
    max_ratio = task.get("max_lambda_ratio")
    if max_ratio is not None and scan.lambda_ratio is not None \
            and scan.lambda_ratio > float(max_ratio):
        status = "fail"
        metrics["reason"] = "lambda ratio above threshold"
    rows = [dict(r.to_row(), condition=scan.condition) for r in scan.rows]
    tables = {"uniformity_%s.csv" % scan.condition: (
        ("v0_norm", "condition", "lambda", "Lambda", "ratio",
         "tail_integral"), rows)}
    return status, metrics, tables


def _parallel_uniformity(f, params, cond, v0_list, transformed, budget, jobs):
    """Per-v0 sweep on a process pool with deterministic ordered merge."""
    from concurrent.futures import ProcessPoolExecutor
    from .frames import UniformityScan
    args = [(f, params, cond, [v0], transformed, budget) for v0 in v0_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        scans = list(pool.map(_scan_one, args))
    rows = [s.rows[0] for s in scans]
    merged = UniformityScan(scans[0].condition, transformed, rows)
    lams = [r.lambda_meas for r in rows if r.lambda_meas is not None]
    Lams = [r.Lambda_meas for r in rows if r.Lambda_meas is not None]
    if lams and min(lams) > 0:
        merged.lambda_ratio = max(lams) / min(lams)
    if Lams and min(Lams) > 0:
        merged.Lambda_ratio = max(Lams) / min(Lams)
    contrasts = [r.contrast for r in rows if r.contrast is not None]
    if contrasts:
        merged.contrast_max = max(contrasts)
    return merged


def _scan_one(packed):
    f, params, cond, v0s, transformed, budget = packed
    return uniformity_scan(f, params, cond, v0s, transformed=transformed,
                           budget=budget)


def run_landau(cfg, task, params, budget, seed):
    f = _get_dist(cfg, task)
    gamma = float(task.get("gamma", params.gamma))
    v0_norms = task.get("v0_list", [0.0, 5.0, 50.0])
    v0_list = []
    for item in v0_norms:
        v0 = np.zeros(f.dimension)
        if np.isscalar(item):
            v0[0] = float(item)
        else:
            v0 = np.asarray(item, float)
        v0_list.append(v0)
    scan = landau_ellipticity_scan(f, gamma, v0_list, budget=budget)
    metrics = scan.to_json()
    status = "pass" if all(r.min_eig > 0 for r in scan.rows) else "fail"
    rows = [r.to_row() for r in scan.rows]
    return status, metrics, {"landau.csv": (
        ("v0_norm", "min_eig", "max_eig", "b_norm", "c_value"), rows)}


def _identity_integrands(n):
    e = np.zeros(n)
    e[0] = 1.0

    def gauss(w, th):
        w = np.atleast_2d(w)
        return np.exp(-np.sum(w ** 2, axis=-1))

    def gauss_dir(w, th):
        w, th = np.atleast_2d(w), np.atleast_2d(th)
        return np.exp(-np.sum(w ** 2, axis=-1)) * (th @ e) ** 2

    def gauss_mixed(w, th):
        w, th = np.atleast_2d(w), np.atleast_2d(th)
        return np.exp(-np.sum(w ** 2, axis=-1)) * (1.0 + 0.5 * (th @ e)) ** 2

    def gauss_poly(w, th):
        w = np.atleast_2d(w)
        return np.exp(-np.sum(w ** 2, axis=-1)) * (1.0 + np.sum(w ** 2, -1))

    def gauss_shift(w, th):
        w = np.atleast_2d(w)
        return np.exp(-np.sum((w - 0.3 * e) ** 2, axis=-1))

    return [("gauss", gauss), ("gauss_dir", gauss_dir),
            ("gauss_mixed", gauss_mixed), ("gauss_poly", gauss_poly),
            ("gauss_shift", gauss_shift)]


def run_identities(cfg, task, params, budget, seed):
    tol = float(task.get("tol", 1e-2))
    rows = []
    ok = True
    for n in task.get("n_list", [2, 3]):
        for name, g in _identity_integrands(n):
            lhs, rhs, rel = verify_weighted_trafo(g, n, budget)
            rows.append({"identity": "weighted_trafo", "n": n, "case": name,
                         "lhs": lhs, "rhs": rhs, "rel_err": rel})
            ok &= rel < tol
    for r, speed in task.get("ellipsoid_cases", [(0.5, 2.0), (1.0, 2.0),
                                                 (1.0, 10.0)]):
        n = 2
        v0 = np.zeros(n)
        v0[0] = float(speed)
        name, g = _identity_integrands(n)[0]
        lhs, rhs, rel = verify_weighted_trafo_ellipsoid(g, v0, float(r), budget)
        rows.append({"identity": "weighted_trafo_ellipsoid", "n": n,
                     "case": "%s_r%g_v%g" % (name, r, speed),
                     "lhs": lhs, "rhs": rhs, "rel_err": rel})
        ok &= rel < tol
    metrics = {"max_rel_err": max(r["rel_err"] for r in rows), "tol": tol}
    return ("pass" if ok else "fail"), metrics, {"identities.csv": (
        ("identity", "n", "case", "lhs", "rhs", "rel_err"), rows)}


def run_counterexample_sweep(cfg, task, params, budget, seed):
    R_list = [float(r) for r in task.get("R_list", [5.0, 10.0, 20.0, 40.0])]
    delta = float(task.get("delta", 0.5))
    ball = float(task.get("ball_radius", 20.0))
    rows = []
    ok = True
    from .observables import moment as moment_of
    for R in R_list:
        f = dist.counterexample_family(R)
        mass = f.total_mass
        line = LineSpec(np.zeros(2), np.array([0.0, 1.0]))
        tube = tube_complement_mass(f, line, delta, ball, budget)
        m3 = moment_of(f, 3.0, budget)
        ok &= 4.0 <= mass <= 8.0
        ok &= tube <= 4.0 / R ** 2 * 1.05
        rows.append({"R": R, "mass": mass, "tube_complement": tube,
                     "moment3": m3})
    logR = np.log([r["R"] for r in rows])
    logM = np.log([r["moment3"] for r in rows])
    slope = float(np.polyfit(logR, logM, 1)[0])
    ok &= abs(slope - 1.0) <= 0.10
    metrics = {"moment3_slope": slope, "rows": rows}
    return ("pass" if ok else "fail"), metrics, {"counterexample.csv": (
        ("R", "mass", "tube_complement", "moment3"), rows)}


def _named_field(name, p):
    if name == "zero":
        return lambda ts, xs, vs: np.zeros(np.asarray(ts).shape)
    if name == "bump_v":
        def F(ts, xs, vs):
            d2 = np.sum(np.asarray(vs) ** 2, axis=-1)
            out = np.zeros(np.asarray(ts).shape)
            inside = d2 < 4.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - d2[inside] / 4.0))
            return out
        return F
    if name == "weighted_decay":
        def F(ts, xs, vs):
            vn = np.linalg.norm(np.asarray(vs), axis=-1)
            xs = np.asarray(xs)
            bump = np.exp(-np.sum(xs ** 2, axis=-1) - np.asarray(ts) ** 2)
            return (1.0 + vn) ** (-p) * bump
        return F
    raise ConfigError("unknown kinetic field %r" % name)


def run_kinetic_norms(cfg, task, params, budget, seed):
    alpha = float(task.get("alpha", 0.5))
    p = float(task.get("p", 0.75))
    eps_list = [float(e) for e in task.get("epsilons", [0.5, 0.1, 0.02])]
    spec = kin.NormSpec(alpha=alpha, p=p,
                        window=tuple(task.get("window", (0.0, 1.0))))
    plan = kin.build_sample_plan(spec, params.s, dimension=params.n,
                                 n_cylinders=int(task.get("n_cylinders", 12)),
                                 points_per_cylinder=int(
                                     task.get("points_per_cylinder", 6)),
                                 seed=seed)
    F = _named_field(task.get("field", "bump_v"), p)
    rows = kin.verify_interpolation(F, spec, eps_list, plan)
    ok = all(r["holds"] for r in rows)
    metrics = {"rows": rows, "plan": plan.to_json()}
    return ("pass" if ok else "fail"), metrics, {"kinetic_norms.csv": (
        ("epsilon", "lhs", "rhs", "seminorm_term", "l1_term", "slack",
         "holds", "constant"), rows)}


def run_giusti(cfg, task, params, budget, seed):
    gamma = float(task.get("gamma", 1.0))
    A = float(task.get("A", 1.0))
    hyp0, con0, c_used = kin.giusti_verify(lambda t: 0.0, gamma, 0.0)
    # a large constant violates the halving hypothesis at the widest pair
    M = 10.0 * max(A, 1.0)
    hyp1, _, _ = kin.giusti_verify(lambda t: M, gamma, A)
    # an admissible blow-up profile must satisfy hypothesis + conclusion
    admissible = lambda t: A * (2.0 - t) ** -gamma
    hyp2, con2, _ = kin.giusti_verify(admissible, gamma, A,
                                      interval=(0.0, 1.9))
    ok = hyp0 and con0 and (hyp1 is False) and hyp2 and con2
    metrics = {"c_used": c_used, "zero_case": [hyp0, con0],
               "constant_violator_hypothesis": hyp1,
               "admissible_case": [hyp2, con2]}
    return ("pass" if ok else "fail"), metrics, {}


RUNNERS = {
    "observables": run_observables,
    "hydro_check": run_hydro_check,
    "tube_scan": run_tube_scan,
    "ellipticity": run_ellipticity,
    "coercivity": run_coercivity,
    "uniformity": run_uniformity,
    "landau": run_landau,
    "identities": run_identities,
    "counterexample_sweep": run_counterexample_sweep,
    "kinetic_norms": run_kinetic_norms,
    "giusti": run_giusti,
}


def run(cfg: dict, out_dir: str, jobs: int = 1) -> int:
    """Execute the config's tasks; returns the process exit code."""
    diags = validate(cfg)
    if diags:
        for d in diags:
            print("config error:", d, file=sys.stderr)
        return 1
    params = parse_kernel(cfg)
    budget = parse_budget(cfg)
    seed = int(cfg.get("seed", 0))
    os.makedirs(out_dir, exist_ok=True)
    import time
    t_start = time.time()
    tasks_out = []
    any_fail = False
    for i, task in enumerate(cfg.get("tasks", [])):
        name = task.get("name", "task%d" % i)
        kind = task["kind"]
        runner = RUNNERS[kind]
        try:
            if kind == "uniformity":
                status, metrics, tables = runner(cfg, task, params, budget,
                                                 seed, jobs=jobs)
            else:
                status, metrics, tables = runner(cfg, task, params, budget, seed)
        except QuadratureError as exc:
            status = "fail"
            metrics = {"error": str(exc),
                       "best_estimate": exc.best_estimate,
                       "error_estimate": exc.error_estimate}
            tables = {}
        artifacts = []
        for fname, (fields, rows) in tables.items():
            path = os.path.join(out_dir, "%s_%s" % (name, fname))
            _write_csv(path, fields, rows)
            artifacts.append(os.path.basename(path))
        tasks_out.append({"name": name, "kind": kind, "status": status,
                          "metrics": _jsonable(metrics),
                          "artifacts": artifacts})
        if status != "pass":
            any_fail = True
        print("[%s] %s: %s" % (kind, name, status))
    report = {"schema_version": SCHEMA_VERSION,
              "params": {"n": params.n, "s": params.s, "gamma": params.gamma,
                         "normalization": params.normalization,
                         "q_reference": params.q_reference},
              "seed": seed,
              "tasks": tasks_out}
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "run_meta.json"), "w") as fh:
        json.dump({"elapsed_seconds": time.time() - t_start}, fh)
        fh.write("\n")
    return 2 if any_fail else 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return str(obj)
    return obj


def _write_csv(path: str, fields, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields),
                                extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(_jsonable(row))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="verify",
        description="Collision-kernel ellipticity verification batches.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--jobs", type=int,
                       default=int(os.environ.get("VERIFY_JOBS", "1")))

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")

    sub.add_parser("list-tasks", help="list available task kinds")

    args = parser.parse_args(argv)
    if args.command == "list-tasks":
        for kind, desc in sorted(TASK_KINDS.items()):
            print("%-22s %s" % (kind, desc))
        return 0
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print("error:", exc, file=sys.stderr)
        return 1
    if args.command == "validate":
        diags = validate(cfg)
        for d in diags:
            print(d)
        if not diags:
            print("ok")
        return 0 if not diags else 1
    try:
        return run(cfg, args.out, jobs=max(1, args.jobs))
    except ConfigError as exc:
        print("error:", exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
