"""The ten acceptance criteria, each at its stated tolerance and time limit.

Every criterion prints one ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line, both inline and in the terminal summary.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from conoshock import manufactured as mf
from conoshock.background import solve_background
from conoshock.config import CaseConfig, parse_case
from conoshock.errors import NonContractionError
from conoshock.gas import FlowState, GasParameters, mach
from conoshock.iteration import solve_case
from conoshock.polar import polar_point, rh_residual
from conoshock.sector import Coefficients, hartman_wintner_gap, solve_first_order, solve_perturbed
from conoshock.spaces import StripGrid, WeightedField, hardy_ratio, line_norm, sobolev_norm

CASES = Path(__file__).resolve().parent.parent / "cases"
SWEEP = [(g, b, nu) for g in (1.5, 2.0) for b in (0.5, 1.0, 2.0) for nu in (1e-4, 1e-3, 1e-2)]


def _report(log, n, checks, elapsed, limit, detail):
    checks = dict(checks)
    checks["runtime"] = elapsed < limit
    failed = [k for k, ok in checks.items() if not ok]
    verdict = "PASS" if not failed else "FAIL"
    extra = f"; failed: {', '.join(failed)}" if failed else ""
    log(f"{verdict} criterion {n}: {detail} ({elapsed:.2f} s < {limit:g} s){extra}")
    assert not failed, failed


def test_criterion_01_polar_identities(acceptance_log):
    t0 = time.perf_counter()
    worst = 0.0
    for gamma, b, nu in SWEEP:
        pt = polar_point(nu, gamma, b)
        up = FlowState(1.0, 0.0, GasParameters.from_nu(gamma, nu).rho_inf)
        r1, r2 = rh_residual(up, pt.post, tau=pt.tau)
        g, _ = rh_residual(up, pt.post, slope=pt.tau)
        worst = max(worst, abs(r1), abs(r2), abs(g))
    el = time.perf_counter() - t0
    _report(acceptance_log, 1, {"residuals": worst < 1e-12}, el, 1.0, f"max jump residual {worst:.2e} < 1e-12")


def test_criterion_02_polar_asymptotics(acceptance_log):
    t0 = time.perf_counter()
    spreads = []
    for gamma in (1.5, 2.0):
        for b in (0.5, 1.0, 2.0):
            taus, machs = [], []
            for nu in (1e-4, 1e-3, 1e-2):
                pt = polar_point(nu, gamma, b)
                s = nu ** (1.0 / (gamma - 1.0))
                taus.append(pt.tau / s)
                machs.append(mach(pt.post, gamma) / s)
            spreads += [max(taus) / min(taus), max(machs) / min(machs)]
    el = time.perf_counter() - t0
    worst = max(spreads)
    _report(acceptance_log, 2, {"spread": worst < 4.0}, el, 1.0, f"largest spread factor {worst:.3f} < 4")


def test_criterion_03_background(acceptance_log):
    t0 = time.perf_counter()
    checks = {"properties": True, "order": True}
    orders = []
    for gamma, b, nu in SWEEP:
        p = GasParameters.from_nu(gamma, nu)
        sol = solve_background(p, b)
        ok = (
            sol.tau < sol.kappa < 1.0 / b
            and sol.slip_residual < 1e-10
            and np.all(np.diff(sol.u0) < 0)
            and np.all(np.diff(sol.v0) > 0)
            and np.all(sol.mach0 < 1.0)
        )
        checks["properties"] &= bool(ok)
        ks = [solve_background(p, b, n_steps=n).kappa for n in (20, 40, 80)]
        order = math.log2(abs(ks[0] - ks[1]) / abs(ks[1] - ks[2]))
        orders.append(order)
        checks["order"] &= 3.5 <= order <= 4.5
    el = time.perf_counter() - t0
    _report(acceptance_log, 3, checks, el, 5.0,
            f"18 profiles admissible, kappa order in [{min(orders):.2f}, {max(orders):.2f}]")


def test_criterion_04_gap(acceptance_log):
    t0 = time.perf_counter()
    # 100 x 100 nodes including the minimiser theta = pi/2, mu = 0
    th = np.linspace(1e-3, math.pi - 1e-3, 101)[:100]
    mu = np.linspace(-50.0, 50.0, 101)[:100]
    gmin = float(np.min(hartman_wintner_gap(th[:, None], mu[None, :])))
    # the minimum over mu of mu^2 + csc^2 - cot^2/4 sits at mu = 0; check the closed form there
    worst = 0.0
    for theta in np.linspace(0.05, math.pi - 0.05, 25):
        res = minimize_scalar(lambda m: float(hartman_wintner_gap(theta, m)), bracket=(-3.0, 1.0, 3.0), tol=1e-10)
        closed = (3.0 + math.sin(theta) ** 2) / (4.0 * math.sin(theta) ** 2)
        direct = 1.0 / math.sin(theta) ** 2 - 0.25 / math.tan(theta) ** 2
        worst = max(worst, abs(res.fun - closed) / closed, abs(direct - closed) / closed)
    glob = minimize_scalar(lambda t: (3 + math.sin(t) ** 2) / (4 * math.sin(t) ** 2),
                           bounds=(0.01, math.pi - 0.01), method="bounded", options={"xatol": 1e-10})
    el = time.perf_counter() - t0
    checks = {"grid_min": gmin >= 1 - 1e-12, "closed_form": worst < 1e-10, "global_min": abs(glob.fun - 1) < 1e-12}
    _report(acceptance_log, 4, checks, el, 1.0,
            f"grid min {gmin:.15f}, closed-form mismatch {worst:.1e}, global min {glob.fun:.15f}")


@pytest.fixture(scope="module")
def bg():
    return solve_background(GasParameters.from_nu(2.0, 0.01), 1.0)


def test_criterion_05_manufactured(acceptance_log, bg):
    t0 = time.perf_counter()
    grids = [StripGrid(-12.0, 12.0, n, bg.omega0, bg.omega1, m) for n, m in ((256, 33), (512, 65), (1024, 129))]
    rows = mf.convergence_study(grids, lo=3.0, hi=5.0, residual_tol=1e-6)
    el = time.perf_counter() - t0
    ratios = [r for row in rows for r in row["ratios"]]
    solvers = {row["solver"] for row in rows}
    checks = {"all_cases": all(row["passed"] for row in rows), "coverage": len(rows) == 9 and len(solvers) == 3}
    _report(acceptance_log, 5, checks, el, 60.0,
            f"9 cases, error ratios in [{min(ratios):.3f}, {max(ratios):.3f}], "
            f"max residual {max(row['residual'] for row in rows):.1e}")


def test_criterion_06_stability(acceptance_log, bg):
    t0 = time.perf_counter()
    base = StripGrid(-12.0, 12.0, 512, bg.omega0, bg.omega1, 65)
    wide = StripGrid(-24.0, 24.0, 1024, bg.omega0, bg.omega1, 65)
    a = mf.stability_family(base)
    worst = 1.0
    for other in (mf.stability_family(base.refined()), mf.stability_family(wide)):
        for key in a:
            x, y = np.array(a[key]), np.array(other[key])
            assert len(x) == 10
            worst = max(worst, float(np.max(np.maximum(x / y, y / x))))
    el = time.perf_counter() - t0
    _report(acceptance_log, 6, {"ratio_change": worst < 2.0}, el, 120.0,
            f"largest change of solution/data ratio {worst:.6f} < 2")


def test_criterion_07_perturbed(acceptance_log, bg):
    t0 = time.perf_counter()
    grid = StripGrid(-12.0, 12.0, 512, bg.omega0, bg.omega1, 65)
    _, data = mf.system_case(grid, mf.SYSTEM_CASES[0])
    rates = []
    for delta in (1e-3, 3e-3, 1e-2):
        c = Coefficients.base(grid)
        c.A = np.eye(2) * (1.0 + delta)
        rates.append(solve_perturbed(c, data, grid).rate)
    refused = False
    c = Coefficients.base(grid)
    c.A = np.eye(2) * 2.0
    try:
        solve_perturbed(c, data, grid)
    except NonContractionError:
        refused = True
    el = time.perf_counter() - t0
    checks = {"monotone": rates[0] < rates[1] < rates[2], "refusal": refused}
    _report(acceptance_log, 7, checks, el, 30.0,
            "rates " + ", ".join(f"{r:.2e}" for r in rates) + "; delta = 1 refused")


def test_criterion_08_zero_perturbation(acceptance_log):
    t0 = time.perf_counter()
    sol = solve_case(CaseConfig(nu=0.01, b=1.0, gamma=2.0, epsilon=0.0))
    el = time.perf_counter() - t0
    du = sol.du_norm()
    dev = float(np.max(np.abs(sol.shock.psi_dot - sol.shock.cot1)))
    checks = {"du": du < 1e-9, "slope": dev < 1e-10, "one_pass": sol.outer_iterations == 1}
    _report(acceptance_log, 8, checks, el, 30.0,
            f"|dU| = {du:.1e}, max slope deviation {dev:.1e}, {sol.outer_iterations} outer pass")


def test_criterion_09_perturbed_run(acceptance_log):
    t0 = time.perf_counter()
    case = parse_case(CASES / "perturbed.ini")
    sols = {eps: solve_case(replace(case, epsilon=eps)) for eps in (5e-4, 1e-3)}
    el = time.perf_counter() - t0
    checks = {}
    worst_inner, worst_outer, worst_rh, worst_tail = 0.0, 0.0, 0.0, math.inf
    for sol in sols.values():
        d = sol.diagnostics()
        worst_inner = max(worst_inner, d["inner"]["max_rate"] or 0.0)
        worst_outer = max(worst_outer, d["outer"]["rate"] or 0.0, d["outer"]["max_rate"] or 0.0)
        worst_rh = max(worst_rh, float(np.max(np.abs(sol.rh1))), float(np.max(np.abs(sol.rh2))))
        worst_tail = min(worst_tail, sol.tail_ratio())
    r_u = sols[1e-3].du_norm() / sols[5e-4].du_norm()
    r_s = sols[1e-3].shock_norm() / sols[5e-4].shock_norm()
    checks["inner_rate"] = worst_inner <= 0.5
    checks["outer_rate"] = worst_outer < 1.0
    checks["rh"] = worst_rh < 1e-5
    checks["response_flow"] = 1.8 <= r_u <= 2.2
    checks["response_shock"] = 1.8 <= r_s <= 2.2
    checks["tail"] = worst_tail >= 2.0
    _report(acceptance_log, 9, checks, el, 600.0,
            f"inner rate {worst_inner:.1e}, outer rate {worst_outer:.1e}, R-H {worst_rh:.1e}, "
            f"response {r_u:.4f}/{r_s:.4f}, tail factor {worst_tail:.0f}")


def test_criterion_10_weighted_norms(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    t = np.linspace(-25.0, 25.0, 2**14)
    worst_hardy = 0.0
    for _ in range(100):
        hp = np.zeros_like(t)
        for _ in range(rng.integers(1, 5)):
            hp += rng.uniform(-3, 3) * np.exp(-((t - rng.uniform(-8, 8)) / rng.uniform(0.3, 3)) ** 2)
        worst_hardy = max(worst_hardy, hardy_ratio(hp, t, float(rng.choice([2.5, 4.0, 6.0]))))
    g = StripGrid(-12.0, 12.0, 256, 1.1142373177402798, 1.5503568553394669, 33)
    T, TH = g.mesh()
    w = np.exp(-0.5 * T**2) * np.cos(TH)
    cancel = 0.0
    for k in (-1.0, 0.5, 1.0):
        for m in (0, 1, 2):
            a = sobolev_norm(WeightedField(g, np.exp(-k * T) * w, k), m, 4.0)
            b = sobolev_norm(WeightedField(g, w, 0.0), m, 4.0)
            cancel = max(cancel, abs(a - b) / b)
    shift = 0.0
    base = np.exp(-g.t**2)
    for j in (3, 17, -40):
        a = line_norm(base, g.t, 0.0, 3.0)
        b = line_norm(np.exp(-(g.t + j * g.h_t) ** 2), g.t, 0.0, 3.0)
        shift = max(shift, abs(a - b) / a)
    el = time.perf_counter() - t0
    checks = {"hardy": worst_hardy <= 1 + 1e-3, "cancellation": cancel < 1e-12, "shift": shift < 1e-12}
    _report(acceptance_log, 10, checks, el, 5.0,
            f"max Hardy ratio {worst_hardy:.6f}, cancellation {cancel:.1e}, shift {shift:.1e}")
