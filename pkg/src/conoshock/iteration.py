"""Double fixed-point iteration for the perturbed conical shock.

The inner map J solves the problem linearised about the background,
with the nonlinear remainder lagged in the data, for a frozen shock
psi. The outer map J_S updates the shock slope from the jump relation
that the inner problem does not impose. Both loops run on the fixed sector
grid, where the shock is the outer ray.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .background import background_profile, solve_background, solve_background_for_cone, verify_background
from .errors import (
    AdmissibilityError,
    CavitationError,
    DegeneracyError,
    FoldError,
    NonContractionError,
    ShockDegeneracyError,
)
from .gas import FlowState, density_from_speed
from .geometry import FOLD_EPS, ShockFront, map_to_physical
from .sector import (
    Coefficients,
    LinearData,
    cartesian_gradient,
    get_solver,
    pair_norm,
    perturbation_size,
    solve_perturbed,
)
from .spaces import WeightedField, gamma1_norm, sobolev_norm, trace_norm

ALPHA_MIN = 1e-8
SHOCK_DEN_MIN = 1e-12
RATE_FLOOR = 1e-13


class InnerDivergenceError(NonContractionError):
    code = "inner_divergence"


class OuterDivergenceError(NonContractionError):
    code = "outer_divergence"


# --- jump function -----------------------------------------------------------


def flux_matrices(u, v, rho, gamma):
    """A(U) and B(U) of the potential system as (..., 2, 2) arrays."""
    u, v, rho = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (u, v, rho)))
    c2 = rho ** (gamma - 1.0)
    A = np.zeros(u.shape + (2, 2))
    B = np.zeros(u.shape + (2, 2))
    A[..., 0, 0] = 1.0 - u * u / c2
    A[..., 0, 1] = -u * v / c2
    A[..., 1, 1] = 1.0
    B[..., 0, 0] = -u * v / c2
    B[..., 0, 1] = 1.0 - v * v / c2
    B[..., 1, 0] = -1.0
    return A, B


@dataclass(frozen=True)
class GJump:
    value: object
    du: object
    dv: object
    dum: object
    dvm: object


def _state(s):
    if isinstance(s, FlowState):
        return s.u, s.v, s.rho
    return s


def assemble_G(U, Uminus, gamma):
    """[rho u][u] + [rho v][v] with its derivatives in u, v, u-, v-.

    States are ``FlowState`` objects or (u, v, rho) triples of arrays; the
    densities must follow Bernoulli's law for the derivative formulas to hold.
    """
    u, v, rho = _state(U)
    um, vm, rhom = _state(Uminus)
    ju, jv = u - um, v - vm
    jru, jrv = rho * u - rhom * um, rho * v - rhom * vm
    p = rho ** (2.0 - gamma)
    pm = rhom ** (2.0 - gamma)
    return GJump(
        value=jru * ju + jrv * jv,
        du=jru + (rho - u * u * p) * ju - u * v * p * jv,
        dv=-u * v * p * ju + jrv + (rho - v * v * p) * jv,
        dum=-jru - ju * (rhom - um * um * pm) + jv * um * vm * pm,
        dvm=ju * um * vm * pm - jrv - jv * (rhom - vm * vm * pm),
    )


def _background_jump(background):
    p = background.params
    post = (background.u0[0], background.v0[0], density_from_speed(math.hypot(background.u0[0], background.v0[0]), p))
    return assemble_G(post, (1.0, 0.0, p.rho_inf), p.gamma)


def alpha_beta(background):
    """Boundary coefficients of the linearised jump condition at the background shock."""
    g = _background_jump(background)
    alpha, beta = float(g.du), float(g.dv)
    if abs(alpha) < ALPHA_MIN:
        raise DegeneracyError("alpha vanishes; the shock condition is degenerate", alpha=alpha)
    return alpha, beta


# --- problem setup -----------------------------------------------------------


@dataclass
class Problem:
    """Everything fixed during a solve: background, grid, descriptors, frozen coefficients."""

    case: object
    params: object
    background: object
    grid: object
    cone: object
    upstream: object
    alpha: float
    beta: float
    eps_cone: float
    eps_upstream: float
    u0: np.ndarray = field(repr=False)
    v0: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    u0_x: np.ndarray = field(repr=False)
    u0_y: np.ndarray = field(repr=False)
    v0_x: np.ndarray = field(repr=False)
    v0_y: np.ndarray = field(repr=False)
    A0: np.ndarray = field(repr=False)
    B0: np.ndarray = field(repr=False)
    # roundoff value of the background jump, subtracted so unperturbed data vanish exactly
    G0: float = 0.0

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def tan0(self):
        return math.tan(self.grid.omega0)

    @property
    def cot1(self):
        return 1.0 / math.tan(self.grid.omega1)

    def gate_quantity(self):
        """|beta/alpha + cot omega1|: distance of the shock condition from the base one."""
        return abs(self.beta / self.alpha + self.cot1)


def _background(case):
    params = case.gas()
    if case.b is not None:
        return params, solve_background(params, case.b, n_steps=case.background_steps, nu0=case.nu0)
    return params, solve_background_for_cone(params, case.omega0, n_steps=case.background_steps, nu0=case.nu0)


def admissible_epsilon(case):
    """Largest epsilon passing the gates: min(eps0, margin * nu^(1/(gamma-1)))."""
    return min(case.eps0, case.margin * case.nu_value ** (1.0 / (case.gamma - 1.0)))


def check_gates(case, background=None):
    nu = case.nu_value
    if nu > case.nu0:
        raise AdmissibilityError("nu exceeds the admissible cap", nu=nu, nu0=case.nu0)
    limit = admissible_epsilon(case)
    if case.epsilon > limit * (1.0 + 1e-12):
        raise AdmissibilityError("epsilon too large for the upstream Mach number", epsilon=case.epsilon, limit=limit)
    if background is not None:
        report = verify_background(background)
        if not report["all"]:
            failed = [k for k, v in report.items() if not v]
            raise AdmissibilityError("background fails its property checks", failed=failed)


def build_problem(case):
    """Solve the background and normalise the descriptors to the case epsilon."""
    if case.enforce_gates:
        check_gates(case)
    params, sol = _background(case)
    if case.enforce_gates:
        check_gates(case, sol)
    grid = case.grid(sol.omega0, sol.omega1)
    cone = case.cone(sol.omega0)
    upstream = case.upstream(sol.omega0, sol.omega1)
    eps_c = case.epsilon * case.cone_share
    eps_u = case.epsilon * case.upstream_share
    norm_c = cone.norm(grid.t, case.q) if cone.bumps else 0.0
    norm_u = upstream.norm(case.t_min, case.t_max, q=case.q) if upstream.bumps else 0.0
    cone = cone.scaled(eps_c / norm_c if norm_c > 0 else 0.0)
    upstream = upstream.scaled(eps_u / norm_u if norm_u > 0 else 0.0)
    alpha, beta = alpha_beta(sol)
    T, TH = grid.mesh()
    r = np.exp(T)
    u0, v0, du0, dv0 = background_profile(sol, grid.theta)
    s, c = np.sin(grid.theta), np.cos(grid.theta)
    rho0 = density_from_speed(np.hypot(u0, v0), params)
    A0, B0 = flux_matrices(u0, v0, rho0, params.gamma)
    return Problem(
        case, params, sol, grid, cone, upstream, alpha, beta,
        eps_c if norm_c > 0 else 0.0, eps_u if norm_u > 0 else 0.0,
        np.broadcast_to(u0, T.shape), np.broadcast_to(v0, T.shape),
        r * np.cos(TH), r * np.sin(TH),
        -s * du0 / r, c * du0 / r, -s * dv0 / r, c * dv0 / r,
        np.broadcast_to(A0, T.shape + (2, 2)), np.broadcast_to(B0, T.shape + (2, 2)),
        float(assemble_G((u0[-1], v0[-1], rho0[-1]), (1.0, 0.0, density_from_speed(1.0, params)), params.gamma).value),
    )


# --- data assembly -----------------------------------------------------------


@dataclass
class Assembled:
    data: LinearData
    x: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    G: np.ndarray
    upstream_state: tuple


def _upstream_on_shock(problem, shock):
    """Upstream state (u-, v-, rho-) at the physical shock points."""
    x, y, _ = map_to_physical(problem.xi[:, -1], problem.eta[:, -1], shock, problem.cone)
    du, dv = problem.upstream.evaluate(x, y)
    um, vm = 1.0 + du, dv
    try:
        rhom = density_from_speed(np.hypot(um, vm), problem.params)
    except CavitationError as exc:
        raise AdmissibilityError("upstream state cavitates", **exc.diagnostics) from exc
    return um, vm, rhom


def assemble_rhs(du, dv, shock, problem):
    """Data (F, g0, g1) of the linearised problem for the iterate (du, dv).

    ``g1`` is divided by alpha to match the normalised boundary row
    (1, beta/alpha) used in the solve.
    """
    grid = problem.grid
    gamma = problem.gamma
    u = problem.u0 + du
    v = problem.v0 + dv
    try:
        rho = density_from_speed(np.hypot(u, v), problem.params)
    except CavitationError as exc:
        raise AdmissibilityError("iterate leaves the Bernoulli range", **exc.diagnostics) from exc
    c2 = rho ** (gamma - 1.0)
    x, y, yme = map_to_physical(problem.xi, problem.eta, shock, problem.cone)
    d = shock.dpsi_dot_at(problem.eta)
    fp = problem.cone.dphi(x)
    t0 = problem.tan0
    den = 1.0 + t0 * d
    if np.any(den <= FOLD_EPS):
        raise FoldError("transformation folds", den=float(np.min(den)))
    solver = get_solver(grid)
    dux, duy = cartesian_gradient(du, grid, solver)
    dvx, dvy = cartesian_gradient(dv, grid, solver)
    ux, uy = problem.u0_x + dux, problem.u0_y + duy
    vx, vy = problem.v0_x + dvx, problem.v0_y + dvy
    d1u, d1v = ux + t0 * uy, vx + t0 * vy
    d2u, d2v = -d * ux + uy, -d * vx + vy
    a11 = 1.0 - u * u / c2
    a12 = -u * v / c2
    b12 = 1.0 - v * v / c2
    A0, B0 = problem.A0, problem.B0
    f1 = (
        yme / (problem.eta * y) * v
        + fp / den * (a11 * d2u + a12 * d2v)
        + d / den * (a12 * d1u + b12 * d1v)
        - (a11 - A0[..., 0, 0]) * ux
        - (a12 - A0[..., 0, 1]) * vx
        - (a12 - B0[..., 0, 0]) * uy
        - (b12 - B0[..., 0, 1]) * vy
    )
    f2 = fp / den * d2v - d / den * d1u
    g0 = problem.u0[:, 0] * fp[:, 0]
    um, vm, rhom = _upstream_on_shock(problem, shock)
    G = assemble_G((u[:, -1], v[:, -1], rho[:, -1]), (um, vm, rhom), gamma).value - problem.G0
    g1 = (problem.alpha * du[:, -1] + problem.beta * dv[:, -1] - G) / problem.alpha
    return Assembled(LinearData(f1, f2, g0, g1), x, y, rho, G, (um, vm, rhom))


def linear_coefficients(shock, problem):
    """Frozen coefficients of the linearised problem for a given shock."""
    x0, _, _ = map_to_physical(problem.xi[:, 0], problem.eta[:, 0], shock, problem.cone)
    alpha0 = np.stack([-problem.cone.phi_prime(x0), np.ones_like(x0)], axis=1)
    alpha1 = np.array([1.0, problem.beta / problem.alpha])
    return Coefficients(problem.A0, problem.B0, None, alpha0, alpha1)


# --- inner and outer maps ----------------------------------------------------


@dataclass
class InnerResult:
    du: np.ndarray
    dv: np.ndarray
    iterations: int
    diffs: list
    rates: list
    linear_rates: list
    eps_hat: float
    assembled: Assembled


def _ratios(diffs, floor=RATE_FLOOR):
    return [b / a for a, b in zip(diffs[:-1], diffs[1:]) if a > floor]


def inner_solve_J(shock, problem, initial=None):
    """Fixed point of J for a frozen shock (warm-started from ``initial``)."""
    case = problem.case
    grid = problem.grid
    coeffs = linear_coefficients(shock, problem)
    eps_hat = perturbation_size(coeffs, grid)
    if initial is None:
        du = np.zeros((grid.n_t, grid.n_theta))
        dv = np.zeros_like(du)
    else:
        du, dv = initial
    diffs, rates, lin_rates = [], [], []
    high = 0
    for it in range(1, case.max_inner + 1):
        asm = assemble_rhs(du, dv, shock, problem)
        try:
            res = solve_perturbed(
                coeffs, asm.data, grid, tol=0.1 * case.tol_inner, initial=(du, dv),
                rate_cap=case.rate_cap, decay_tol=case.decay_tol, q=case.q,
            )
        except NonContractionError as exc:
            raise InnerDivergenceError("linear solve did not contract", **exc.diagnostics) from exc
        lin_rates.append(res.rate)
        diff = pair_norm(res.u - du, res.v - dv, grid, case.q)
        du, dv = res.u, res.v
        if diffs and diffs[-1] > RATE_FLOOR:
            r = diff / diffs[-1]
            rates.append(r)
            high = high + 1 if r >= case.rate_cap else 0
            if high >= 2 or r > 1.5:
                raise InnerDivergenceError("inner iteration is not contracting", rate=r, iteration=it, diffs=diffs)
        diffs.append(diff)
        if diff < case.tol_inner:
            return InnerResult(du, dv, it, diffs, rates, lin_rates, eps_hat, asm)
    raise InnerDivergenceError("inner iteration hit the iteration cap", iterations=case.max_inner, diffs=diffs)


def shock_slope(du, dv, shock, problem):
    """Slope deviation psi_*' - cot(omega1) from the second jump relation."""
    u = problem.u0[:, -1] + du[:, -1]
    v = problem.v0[:, -1] + dv[:, -1]
    um, vm, _ = _upstream_on_shock(problem, shock)
    ju, jv = u - um, v - vm
    fp = problem.cone.phi_prime(shock.psi)
    den = ju + fp * jv
    if np.any(np.abs(den) < SHOCK_DEN_MIN):
        raise ShockDegeneracyError("vanishing denominator in the shock update", den=float(np.min(np.abs(den))))
    t0, c1 = problem.tan0, problem.cot1
    # -[v](1 - t0 c1)/den - c1, arranged to cancel exactly at the background
    return -(jv * (1.0 - t0 * c1) + c1 * den) / den


def update_shock_JS(shock, du, dv, problem):
    return ShockFront(shock.t, shock.omega1, shock_slope(du, dv, shock, problem))


def rh_residuals(du, dv, shock, problem):
    """Both jump relations along the shock: G(U; U-) and [v] + phi'(y)[u]."""
    u = problem.u0[:, -1] + du[:, -1]
    v = problem.v0[:, -1] + dv[:, -1]
    rho = density_from_speed(np.hypot(u, v), problem.params)
    um, vm, rhom = _upstream_on_shock(problem, shock)
    G = assemble_G((u, v, rho), (um, vm, rhom), problem.gamma).value - problem.G0
    phi_p = problem.cone.phi_prime(shock.psi)
    # dx/dy along the front
    slope = shock.psi_dot / (1.0 - problem.tan0 * problem.cot1 + phi_p * shock.psi_dot)
    return G, (v - vm) + slope * (u - um)


# --- driver ------------------------------------------------------------------


@dataclass
class Solution:
    problem: Problem
    shock: ShockFront
    du: np.ndarray
    dv: np.ndarray
    outer_iterations: int
    inner_history: list
    outer_diffs: list
    linear_rates: list
    eps_hat: float
    rh1: np.ndarray
    rh2: np.ndarray
    x: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    data: LinearData

    @property
    def u(self):
        return self.problem.u0 + self.du

    @property
    def v(self):
        return self.problem.v0 + self.dv

    @property
    def mach(self):
        q = np.hypot(self.u, self.v)
        return q / self.rho ** (0.5 * (self.problem.gamma - 1.0))

    def du_norm(self):
        return pair_norm(self.du, self.dv, self.problem.grid, self.problem.case.q)

    def shock_norm(self):
        return self.shock.norm(self.problem.case.q)

    def diagnostics(self):
        return contraction_diagnostics({"inner": self.inner_history, "outer": self.outer_diffs})

    def norm_ledger(self):
        p = self.problem
        grid, q = p.grid, p.case.q
        eps = p.case.epsilon
        du_n, sh_n = self.du_norm(), self.shock_norm()
        F = self.data
        return {
            "epsilon": eps,
            "eps_cone": p.eps_cone,
            "eps_upstream": p.eps_upstream,
            "du_norm": du_n,
            "shock_norm": sh_n,
            "shock_sup": float(np.max(np.abs(self.shock.dpsi_dot))),
            "F_norm": sum(sobolev_norm(WeightedField(grid, f, 1.0), 0, q) for f in (F.f1, F.f2)),
            "g0_norm": trace_norm(F.g0, grid.t, 0.0, q),
            "g1_norm": trace_norm(F.g1, grid.t, 0.0, q),
            "M": du_n / eps if eps > 0 else 0.0,
            "M_S": sh_n / eps if eps > 0 else 0.0,
            "eps_hat": self.eps_hat,
            "gate_quantity": p.gate_quantity(),
        }

    def tail_ratio(self):
        """Global max of |psi' - cot omega1| over its max on the last decade of eta."""
        d = np.abs(self.shock.dpsi_dot)
        tail = self.shock.eta >= self.shock.eta[-1] / 10.0
        peak = float(np.max(d))
        return peak / max(float(np.max(d[tail])), 1e-300) if peak > 0 else math.inf


def solve_case(case, initial_shock=None):
    """Outer loop psi <- J_S(psi, J(psi)) until the slope update stalls."""
    problem = build_problem(case)
    grid = problem.grid
    shock = initial_shock or ShockFront.straight(grid)
    state = None
    inner_history, outer_diffs, lin_rates = [], [], []
    high = 0
    for k in range(1, case.max_outer + 1):
        inner = inner_solve_J(shock, problem, state)
        state = (inner.du, inner.dv)
        inner_history.append(inner.diffs)
        lin_rates.extend(inner.linear_rates)
        new = update_shock_JS(shock, inner.du, inner.dv, problem)
        diff = gamma1_norm(new.dpsi_dot - shock.dpsi_dot, grid.t, case.q)
        if outer_diffs and outer_diffs[-1] > RATE_FLOOR:
            r = diff / outer_diffs[-1]
            high = high + 1 if r >= case.rate_cap else 0
            if high >= 2 or r > 1.5:
                raise OuterDivergenceError(
                    "shock iteration is not contracting", rate=r, iteration=k,
                    history={"inner": inner_history, "outer": outer_diffs + [diff]},
                )
        outer_diffs.append(diff)
        if diff < case.tol_outer:
            rh1, rh2 = rh_residuals(inner.du, inner.dv, shock, problem)
            asm = inner.assembled
            return Solution(
                problem, shock, inner.du, inner.dv, k, inner_history, outer_diffs, lin_rates,
                inner.eps_hat, rh1, rh2, asm.x, asm.y, asm.rho, asm.data,
            )
        shock = new
    raise OuterDivergenceError(
        "shock iteration hit the iteration cap", iterations=case.max_outer,
        history={"inner": inner_history, "outer": outer_diffs},
    )


def _loop_report(diffs):
    ratios = _ratios(diffs)
    if len(diffs) < 3 or not ratios:
        return {"iterates": len(diffs), "rate": None, "max_rate": None, "contracting": None}
    positive = [d for d in diffs if d > RATE_FLOOR]
    geo = (positive[-1] / positive[0]) ** (1.0 / (len(positive) - 1)) if len(positive) > 1 else None
    mx = max(ratios)
    return {"iterates": len(diffs), "rate": geo, "max_rate": mx, "contracting": bool(mx < 1.0)}


def contraction_diagnostics(history):
    """Geometric rate estimates and pass/fail flags from recorded difference norms.

    ``history`` holds ``outer`` (one difference per outer pass) and
    ``inner`` (one list of differences per outer pass).
    """
    outer = _loop_report(list(history.get("outer", [])))
    passes = [_loop_report(list(h)) for h in history.get("inner", [])]
    inner_rates = [p["max_rate"] for p in passes if p["max_rate"] is not None]
    inner = {
        "passes": len(passes),
        "max_rate": max(inner_rates) if inner_rates else None,
        "contracting": all(r < 1.0 for r in inner_rates) if inner_rates else None,
    }
    flags = [f for f in (outer["contracting"], inner["contracting"]) if f is not None]
    return {"outer": outer, "inner": inner, "contracting": all(flags) if flags else None}
