"""Command-line workbench: ``conoshock <subcommand> --config <file> [--out <dir>]``.

Subcommands write their artifacts under ``--out`` together with
``manifest.json``. A run that raises writes ``failure.json`` and exits 2; a
run whose own checks fail writes its report with ``status = "fail"`` and
exits 1.
"""

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from ._accel import thread_cap
from .background import background_profile, verify_background
from .config import case_dict, emit_case, parse_case
from .errors import ConoshockError
from .gas import FlowState
from .io import fmt, write_csv, write_json, write_manifest
from .iteration import _background, alpha_beta, solve_case
from .manufactured import SYSTEM_CASES, convergence_study, system_case
from .polar import emit_apple_curve, polar_point, rh_residual
from .sector import solve_first_order, solve_summary
from .spaces import StripGrid

RH_TOL = 1e-5
EXIT_FAIL = 1
EXIT_ERROR = 2


def _polar(case, out):
    params = case.gas()
    b = case.b if case.b is not None else _background(case)[1].b
    pt = polar_point(params.nu, params.gamma, b, nu0=case.nu0)
    up = FlowState(1.0, 0.0, params.rho_inf)
    r1, r2 = rh_residual(up, pt.post, tau=pt.tau)
    g_form, _ = rh_residual(up, pt.post, slope=pt.tau)
    rows = emit_apple_curve(params.gamma, params.nu, case.apple_samples)
    write_csv(os.path.join(out, "apple_curve.csv"),
              ["omega1", "tau", "u", "v", "rho", "turning_angle", "mach_post"], list(zip(*rows)))
    report = {
        "status": "ok", "gamma": params.gamma, "nu": params.nu, "b": b, "tau": pt.tau,
        "omega1": pt.omega1, "post": {"u": pt.post.u, "v": pt.post.v, "rho": pt.post.rho},
        "mach_post": pt.post.mach(params.gamma),
        "residuals": {"r1": abs(r1), "r2": abs(r2), "g_form": abs(g_form)},
        "roots": list(pt.roots),
    }
    write_json(os.path.join(out, "polar.json"), report)
    return ["apple_curve.csv", "polar.json"], 0


def _background_cmd(case, out):
    _, sol = _background(case)
    theta = np.arctan2(1.0, sol.sigma_grid)
    write_csv(os.path.join(out, "profile.csv"), ["sigma", "theta", "u0", "v0", "rho0", "q0", "M0"],
              [sol.sigma_grid, theta, sol.u0, sol.v0, sol.rho0, sol.q0, sol.mach0])
    write_csv(os.path.join(out, "background_summary.csv"), ["tau", "kappa", "omega0", "omega1"],
              [[sol.tau], [sol.kappa], [sol.omega0], [sol.omega1]])
    checks = verify_background(sol)
    report = {
        "status": "ok" if checks["all"] else "fail", "tau": sol.tau, "kappa": sol.kappa,
        "omega0": sol.omega0, "omega1": sol.omega1, "slip_residual": sol.slip_residual, "checks": checks,
    }
    write_json(os.path.join(out, "background.json"), report)
    return ["profile.csv", "background_summary.csv", "background.json"], 0 if checks["all"] else EXIT_FAIL


def _linsolve(case, out):
    _, sol = _background(case)
    grids = [StripGrid(case.t_min, case.t_max, n, sol.omega0, sol.omega1, m) for n, m in case.levels]
    rows = convergence_study(grids)
    header = ["solver", "case"] + [f"err_{n}x{m}" for n, m in case.levels] + \
        [f"ratio_{k}" for k in range(1, len(case.levels))] + ["residual", "passed"]
    with open(os.path.join(out, "convergence.csv"), "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            cells = [r["solver"], str(r["case"])] + [fmt(e) for e in r["errors"]] + \
                [fmt(x) for x in r["ratios"]] + [fmt(r["residual"]), "true" if r["passed"] else "false"]
            fh.write(",".join(cells) + "\n")
    # summary of one first-order solve on the finest grid
    fine = grids[-1]
    _, data = system_case(fine, SYSTEM_CASES[0])
    summary = solve_summary(solve_first_order(data, fine), data, q=case.q)
    ok = all(r["passed"] for r in rows)
    write_json(os.path.join(out, "linsolve.json"), {
        "status": "ok" if ok else "fail", "levels": [list(lv) for lv in case.levels],
        "cases": rows, "summary": summary,
    })
    return ["convergence.csv", "linsolve.json"], 0 if ok else EXIT_FAIL


def _report(sol):
    p = sol.problem
    diag = sol.diagnostics()
    rh1, rh2 = float(np.max(np.abs(sol.rh1))), float(np.max(np.abs(sol.rh2)))
    tail = sol.tail_ratio()
    flags = {
        "converged": True,
        "rh_within_tol": rh1 < RH_TOL and rh2 < RH_TOL,
        "contracting": diag["contracting"] is not False,
        "inner_rate_below_half": diag["inner"]["max_rate"] is None or diag["inner"]["max_rate"] <= 0.5,
    }
    return {
        "status": "ok",
        "case": case_dict(p.case),
        "background": {"tau": p.background.tau, "kappa": p.background.kappa, "omega0": p.background.omega0,
                       "omega1": p.background.omega1, "alpha": p.alpha, "beta": p.beta},
        "norms": sol.norm_ledger(),
        "iterations": {"outer": sol.outer_iterations, "inner": [len(h) for h in sol.inner_history]},
        "rates": {"outer": diag["outer"], "inner": diag["inner"], "linear": sol.linear_rates,
                  "contracting": diag["contracting"]},
        "rh": {"max_res1": rh1, "max_res2": rh2},
        "shock": {"max_slope_deviation": float(np.max(np.abs(sol.shock.dpsi_dot))),
                  "tail_ratio": tail if math.isfinite(tail) else None},
        "flags": flags,
    }


def _solve(case, out):
    sol = solve_case(case)
    s = case.flow_stride
    sl = (slice(None, None, s), slice(None))
    p = sol.problem
    xi, eta = np.broadcast_arrays(p.xi, p.eta)
    write_csv(os.path.join(out, "flowfield.csv"), ["xi", "eta", "x", "y", "u", "v", "rho", "mach"],
              [a[sl] for a in (xi, eta, sol.x, sol.y, sol.u, sol.v, sol.rho, sol.mach)])
    sh = sol.shock
    write_csv(os.path.join(out, "shock.csv"), ["eta", "psi", "psi_dot", "rh_res1", "rh_res2"],
              [sh.eta, sh.psi, sh.psi_dot, sol.rh1, sol.rh2])
    report = _report(sol)
    ok = all(report["flags"].values())
    report["status"] = "ok" if ok else "fail"
    write_json(os.path.join(out, "report.json"), report)
    return ["flowfield.csv", "shock.csv", "report.json"], 0 if ok else EXIT_FAIL


def _sweep_point(case, name, value):
    try:
        sol = solve_case(case.with_value(name, value))
    except ConoshockError as exc:
        return {"value": value, "status": "error", "code": exc.code, "du_norm": None,
                "shock_norm": None, "outer_rate": None}
    return {"value": value, "status": "ok", "code": "", "du_norm": sol.du_norm(),
            "shock_norm": sol.shock_norm(), "outer_rate": sol.diagnostics()["outer"]["rate"]}


def _sweep(case, out):
    if case.sweep_parameter is None:
        raise ConoshockError("sweep needs a [sweep] section with parameter and values")
    values = list(case.sweep_values)
    workers = max(1, min(thread_cap() or os.cpu_count() or 1, len(values)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        points = list(pool.map(lambda v: _sweep_point(case, case.sweep_parameter, v), values))
    nan = float("nan")
    with open(os.path.join(out, "sweep.csv"), "w", newline="\n") as fh:
        fh.write("value,status,code,du_norm,shock_norm,outer_rate\n")
        for pt in points:
            nums = [pt["du_norm"], pt["shock_norm"], pt["outer_rate"]]
            fh.write(",".join([fmt(pt["value"]), pt["status"], pt["code"]] +
                              [fmt(nan if x is None else x) for x in nums]) + "\n")
    ok = all(pt["status"] == "ok" for pt in points)
    write_json(os.path.join(out, "sweep.json"),
               {"status": "ok" if ok else "fail", "parameter": case.sweep_parameter, "points": points})
    return ["sweep.csv", "sweep.json"], 0 if ok else EXIT_FAIL


COMMANDS = {
    "polar": _polar,
    "background": _background_cmd,
    "linsolve": _linsolve,
    "solve": _solve,
    "sweep": _sweep,
}


HELP = {
    "polar": "shock polar point and apple curve",
    "background": "self-similar background profile",
    "linsolve": "manufactured convergence study of the strip solvers",
    "solve": "perturbed shock problem by double fixed-point iteration",
    "sweep": "solve over a list of values of one parameter",
}


def build_parser():
    ap = argparse.ArgumentParser(prog="conoshock", description="Conical transonic-shock workbench.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", required=True, help="case file")
        sp.add_argument("--out", default="out", help="artifact directory (default: out)")
    canon = sub.add_parser("canonical", help="print the canonical form of a case file")
    canon.add_argument("--config", required=True)
    return ap


def run(command, config_path, out):
    """Run one subcommand; returns the exit status."""
    os.makedirs(out, exist_ok=True)
    try:
        case = parse_case(config_path)
        names, status = COMMANDS[command](case, out)
    except ConoshockError as exc:
        write_json(os.path.join(out, "failure.json"), {
            "status": "error", "code": exc.code, "message": str(exc), "diagnostics": exc.diagnostics,
        })
        write_manifest(out, ["failure.json"])
        print(f"conoshock {command}: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    write_manifest(out, names)
    return status


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "canonical":
        try:
            sys.stdout.write(emit_case(parse_case(args.config)))
        except ConoshockError as exc:
            print(f"conoshock canonical: {exc}", file=sys.stderr)
            return EXIT_ERROR
        return 0
    return run(args.command, args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
