"""Analytic manufactured solutions for the sector solvers.

Each case is separable on the strip: a Gaussian G(t) in t times an angular
profile P(theta). The data are produced by substituting the exact solution
into the strip form of each problem.
"""

import math
from dataclasses import dataclass

import numpy as np

from .sector import LinearData, solve_dirichlet_laplace, solve_first_order, solve_neumann_singular
from .spaces import WeightedField, sobolev_norm, trace_norm


@dataclass(frozen=True)
class Gaussian:
    center: float = 0.0
    width: float = 1.0

    def derivs(self, t):
        z = (t - self.center) / self.width
        g = np.exp(-0.5 * z * z)
        g1 = -z / self.width * g
        g2 = (z * z - 1.0) / self.width**2 * g
        return g, g1, g2


def _profile(name, theta, w0, w1):
    """Angular profile and its first two derivatives."""
    L = w1 - w0
    x = theta - w0
    if name == "cos":
        return np.cos(x), -np.sin(x), -np.cos(x)
    if name == "sin2":
        return np.sin(2 * x) + 0.5, 2 * np.cos(2 * x), -4 * np.sin(2 * x)
    if name == "expo":
        e = np.exp(1.5 * x)
        return e, 1.5 * e, 2.25 * e
    if name == "sine1":
        k = math.pi / L
        return np.sin(k * x), k * np.cos(k * x), -k * k * np.sin(k * x)
    if name == "sine2":
        k = 2 * math.pi / L
        return np.sin(k * x), k * np.cos(k * x), -k * k * np.sin(k * x)
    if name == "bubble":
        e = np.exp(theta)
        p = x * (w1 - theta)
        dp = L - 2 * x
        return p * e, (dp + p) * e, (-2 + 2 * dp + p) * e
    raise ValueError(f"unknown profile {name!r}")


NEUMANN_CASES = (("cos", Gaussian(0.0, 1.0)), ("sin2", Gaussian(0.5, 0.8)), ("expo", Gaussian(-0.5, 1.2)))
DIRICHLET_CASES = (("sine1", Gaussian(0.0, 1.0)), ("sine2", Gaussian(0.3, 0.9)), ("bubble", Gaussian(-0.4, 1.1)))
SYSTEM_CASES = (
    (("cos", Gaussian(0.0, 1.0)), ("sine1", Gaussian(0.2, 1.0))),
    (("sin2", Gaussian(0.5, 0.8)), ("bubble", Gaussian(0.0, 1.0))),
    (("expo", Gaussian(-0.5, 1.2)), ("sine2", Gaussian(-0.2, 0.9))),
)


def _sep(grid, entry):
    name, gauss = entry
    g, g1, g2 = gauss.derivs(grid.t)
    p, p1, p2 = _profile(name, grid.theta, grid.omega0, grid.omega1)
    G = lambda a: a[:, None]  # noqa: E731
    P = lambda a: a[None, :]  # noqa: E731
    return G(g), G(g1), G(g2), P(p), P(p1), P(p2)


def neumann_case(grid, entry):
    """Exact w = e^{-t} phi and the data (f, g0, g1) of the Neumann problem."""
    g, g1, g2, p, p1, p2 = _sep(grid, entry)
    cot = 1.0 / np.tan(grid.theta)[None, :]
    rhs_w = g2 * p + 3 * g1 * p + 2 * g * p + g * p2 + cot * g * p1
    f = np.exp(-grid.t)[:, None] * rhs_w
    w = g * p
    g0 = (g * p1)[:, 0] / math.cos(grid.omega0)
    g1_ = -(g * p1)[:, -1] / math.sin(grid.omega1)
    return w, f, g0, g1_


def dirichlet_case(grid, entry):
    """Exact W = e^{-t} Phi and the datum f2 of the Dirichlet problem."""
    g, g1, g2, p, p1, p2 = _sep(grid, entry)
    rhs_w = g2 * p + 2 * g1 * p + g * p + g * p2
    return g * p, np.exp(-grid.t)[:, None] * rhs_w


def _grad(grid, w, w_t, w_th):
    th = grid.theta[None, :]
    return np.cos(th) * (w + w_t) - np.sin(th) * w_th, np.sin(th) * (w + w_t) + np.cos(th) * w_th


def system_case(grid, entries):
    """Exact U = grad(phi) - (Phi_y, -Phi_x) and the matching ``LinearData``."""
    gp, gp1, _, pp, pp1, _ = _sep(grid, entries[0])
    gl, gl1, _, pl, pl1, _ = _sep(grid, entries[1])
    w, fn, g0, g1 = neumann_case(grid, entries[0])
    _, f2 = dirichlet_case(grid, entries[1])
    phi_x, phi_y = _grad(grid, gp * pp, gp1 * pp, gp * pp1)
    Phi_x, Phi_y = _grad(grid, gl * pl, gl1 * pl, gl * pl1)
    eta = np.exp(grid.t)[:, None] * np.sin(grid.theta)[None, :]
    f1 = fn + Phi_x / eta
    return (phi_x - Phi_y, phi_y + Phi_x), LinearData(f1, f2, g0, g1)


# --- studies -----------------------------------------------------------------


def _error_dirichlet(grid, entry):
    W, f2 = dirichlet_case(grid, entry)
    sol = solve_dirichlet_laplace(f2, grid)
    res = max(sol.residual_interior, sol.residual_bc0, sol.residual_bc1)
    return float(np.max(np.abs(sol.w - W))), res


def _error_neumann(grid, entry):
    w, f, g0, g1 = neumann_case(grid, entry)
    sol = solve_neumann_singular(f, g0, g1, grid)
    res = max(sol.residual_interior, sol.residual_bc0, sol.residual_bc1)
    return float(np.max(np.abs(sol.w - w))), res


def _error_system(grid, entries):
    (u, v), data = system_case(grid, entries)
    sol = solve_first_order(data, grid)
    res = max(sol.residual_interior, sol.residual_bc0, sol.residual_bc1)
    return max(float(np.max(np.abs(sol.u - u))), float(np.max(np.abs(sol.v - v)))), res


STUDIES = (
    ("dirichlet", DIRICHLET_CASES, _error_dirichlet),
    ("neumann", NEUMANN_CASES, _error_neumann),
    ("first_order", SYSTEM_CASES, _error_system),
)


def convergence_study(grids, lo=3.0, hi=5.0, residual_tol=1e-6):
    """L-infinity recovery errors of every manufactured case on a refinement sequence.

    ``grids`` must refine by a factor two in both directions. A case passes
    when every error ratio lies in [lo, hi] and the finest-grid residuals are
    below ``residual_tol``.
    """
    rows = []
    for solver, cases, run in STUDIES:
        for idx, entry in enumerate(cases):
            errs, res = [], 0.0
            for g in grids:
                e, res = run(g, entry)
                errs.append(e)
            ratios = [a / b for a, b in zip(errs[:-1], errs[1:])]
            ok = all(lo <= r <= hi for r in ratios) and res < residual_tol
            rows.append({"solver": solver, "case": idx, "errors": errs, "ratios": ratios,
                         "residual": res, "passed": bool(ok)})
    return rows


def _family_entries():
    names = ("cos", "sin2", "expo")
    return [(names[i % 3], Gaussian(-1.0 + 0.25 * i, 0.7 + 0.06 * i)) for i in range(10)]


def _lift_entries():
    names = ("sine1", "sine2", "bubble")
    return [(names[i % 3], Gaussian(1.0 - 0.2 * i, 0.8 + 0.05 * i)) for i in range(10)]


def stability_family(grid, q=4.0):
    """Solution-to-data norm ratios over a fixed ten-datum family.

    Returns a dict with one list per solver: the Neumann ratio
    ||phi||_{W^{2,q}_(-1)} / (||f||_{W^{0,q}_(1)} + sum ||g_j||), the
    Dirichlet ratio ||Phi||_{W^{2,q}_(-1)} / ||f2||_{W^{0,q}_(1)} and the
    first-order ratio ||U||_{W^{1,q}_(0)} / (||F||_{W^{0,q}_(1)} + sum ||g_j||).
    """
    out = {"neumann": [], "dirichlet": [], "first_order": []}
    et = np.exp(grid.t)[:, None]
    for ns, ds in zip(_family_entries(), _lift_entries()):
        _, f, g0, g1 = neumann_case(grid, ns)
        sol = solve_neumann_singular(f, g0, g1, grid)
        num = sobolev_norm(WeightedField(grid, et * sol.w, -1.0), 2, q)
        den = sobolev_norm(WeightedField(grid, f, 1.0), 0, q) + trace_norm(g0, grid.t, 0.0, q) + trace_norm(g1, grid.t, 0.0, q)
        out["neumann"].append(num / den)
        _, f2 = dirichlet_case(grid, ds)
        lift = solve_dirichlet_laplace(f2, grid)
        out["dirichlet"].append(
            sobolev_norm(WeightedField(grid, et * lift.w, -1.0), 2, q) / sobolev_norm(WeightedField(grid, f2, 1.0), 0, q)
        )
        _, data = system_case(grid, (ns, ds))
        fo = solve_first_order(data, grid)
        out["first_order"].append(fo.norm(q) / data.norm(grid, q))
    return out
