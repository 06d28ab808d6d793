"""Self-similar conical flow between a straight shock and a straight cone.

The profile (u0, v0)(sigma), sigma = x / y = cot(theta), is integrated from
the post-shock state at sigma = tau until the slip condition u = sigma v is
met; that location is the cone cotangent kappa.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DegeneracyError, DomainError, NoConeError, RootNotFoundError
from .gas import FlowState, GasParameters, density_from_speed
from .polar import NU0_DEFAULT, post_shock_state, solve_tau

D_EPS = 1e-10
DEFAULT_STEPS = 2000


def _denominator(sigma, u, v, params):
    c2 = density_from_speed(math.hypot(u, v), params) ** (params.gamma - 1.0)
    return (1.0 - u * u / c2) + 2.0 * u * v * sigma / c2 + (1.0 - v * v / c2) * sigma * sigma


def background_rhs(sigma, u, v, params):
    """Right-hand side (du/dsigma, dv/dsigma) = (-v/D, sigma v/D)."""
    D = _denominator(sigma, u, v, params)
    if D <= D_EPS:
        raise DegeneracyError("sonic degeneration of the conical-flow system", sigma=sigma, D=D)
    return -v / D, sigma * v / D


def background_rhs_array(sigma, u, v, params):
    """Vectorised right-hand side for sampled states (no degeneracy guard)."""
    c2 = density_from_speed(np.hypot(u, v), params) ** (params.gamma - 1.0)
    D = (1.0 - u * u / c2) + 2.0 * u * v * sigma / c2 + (1.0 - v * v / c2) * sigma * sigma
    return -v / D, sigma * v / D


@dataclass(frozen=True)
class SelfSimilarSolution:
    sigma_grid: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    du0: np.ndarray
    dv0: np.ndarray
    tau: float
    kappa: float
    params: GasParameters
    b: float

    @property
    def omega0(self):
        return math.atan2(1.0, self.kappa)

    @property
    def omega1(self):
        return math.atan2(1.0, self.tau)

    @property
    def rho0(self):
        return density_from_speed(np.hypot(self.u0, self.v0), self.params)

    @property
    def q0(self):
        return np.hypot(self.u0, self.v0)

    @property
    def mach0(self):
        return self.q0 / self.rho0 ** (0.5 * (self.params.gamma - 1.0))

    @property
    def slip_residual(self):
        return abs(self.u0[-1] - self.kappa * self.v0[-1])

    def evaluate(self, sigma):
        """Cubic Hermite interpolation of (u0, v0) at ``sigma`` (array ok)."""
        sigma = np.asarray(sigma, dtype=float)
        s = self.sigma_grid
        idx = np.clip(np.searchsorted(s, sigma, side="right") - 1, 0, len(s) - 2)
        h = s[idx + 1] - s[idx]
        x = (sigma - s[idx]) / h
        h00 = (1 + 2 * x) * (1 - x) ** 2
        h10 = x * (1 - x) ** 2
        h01 = x * x * (3 - 2 * x)
        h11 = x * x * (x - 1)
        u = h00 * self.u0[idx] + h10 * h * self.du0[idx] + h01 * self.u0[idx + 1] + h11 * h * self.du0[idx + 1]
        v = h00 * self.v0[idx] + h10 * h * self.dv0[idx] + h01 * self.v0[idx + 1] + h11 * h * self.dv0[idx + 1]
        return u, v


def _rk4_step(sigma, u, v, h, params):
    k1 = background_rhs(sigma, u, v, params)
    k2 = background_rhs(sigma + 0.5 * h, u + 0.5 * h * k1[0], v + 0.5 * h * k1[1], params)
    k3 = background_rhs(sigma + 0.5 * h, u + 0.5 * h * k2[0], v + 0.5 * h * k2[1], params)
    k4 = background_rhs(sigma + h, u + h * k3[0], v + h * k3[1], params)
    return (
        u + h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0,
        v + h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0,
    )


def solve_background(params, b, n_steps=DEFAULT_STEPS, nu0=NU0_DEFAULT, tau=None):
    """Integrate the conical-flow profile from the shock to the cone.

    Classical RK4 with ``n_steps`` fixed steps over [tau, 1/b]; the slip event
    u - sigma v = 0 is located by bisection (to 1e-12 in sigma) on the partial
    RK4 step from the last node before the sign change.
    """
    if tau is None:
        tau = solve_tau(params.nu, params.gamma, b, nu0=nu0)
    state = post_shock_state(tau, b, params.rho_inf)
    sig_end = 1.0 / b
    h = (sig_end - tau) / n_steps
    sig = [tau]
    us = [state.u]
    vs = [state.v]
    d = background_rhs(tau, state.u, state.v, params)
    dus = [d[0]]
    dvs = [d[1]]
    for i in range(n_steps):
        s0 = sig[-1]
        u1, v1 = _rk4_step(s0, us[-1], vs[-1], h, params)
        s1 = tau + (i + 1) * h
        d1 = background_rhs(s1, u1, v1, params)
        if u1 - s1 * v1 <= 0.0:
            kappa, uk, vk = _locate_slip(s0, us[-1], vs[-1], s1, params)
            dk = background_rhs(kappa, uk, vk, params)
            if kappa - s0 > 1e-14 * max(1.0, kappa):
                sig.append(kappa)
                us.append(uk)
                vs.append(vk)
                dus.append(dk[0])
                dvs.append(dk[1])
            else:
                sig[-1], us[-1], vs[-1], dus[-1], dvs[-1] = kappa, uk, vk, dk[0], dk[1]
            return SelfSimilarSolution(
                np.array(sig), np.array(us), np.array(vs), np.array(dus), np.array(dvs),
                float(tau), float(kappa), params, float(b),
            )
        sig.append(s1)
        us.append(u1)
        vs.append(v1)
        dus.append(d1[0])
        dvs.append(d1[1])
    raise NoConeError("slip condition not met before sigma = 1/b", b=b, nu=params.nu)


def _locate_slip(s0, u0, v0, s1, params):
    """Slip event inside [s0, s1] on the one-step RK4 map from s0.

    A partial RK4 step of length s - s0 is a fourth-order continuous
    extension that is smooth in s, so the event error stays a smooth
    O(h^4) function of the step and the observed order of kappa is clean.
    """

    def slip(s):
        u, v = _rk4_step(s0, u0, v0, s - s0, params)
        return u - s * v

    k = brentq(slip, s0, s1, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    u, v = _rk4_step(s0, u0, v0, k - s0, params)
    return k, u, v


def background_at_theta(sol, theta):
    """Background state at polar angle ``theta`` in [omega0, omega1]."""
    th = np.asarray(theta, dtype=float)
    tol = 1e-12
    if np.any(th < sol.omega0 - tol) or np.any(th > sol.omega1 + tol):
        raise DomainError("theta outside [omega0, omega1]", theta=theta)
    sigma = np.clip(np.cos(th) / np.sin(th), sol.tau, sol.kappa)
    u, v = sol.evaluate(sigma)
    rho = density_from_speed(np.hypot(u, v), sol.params)
    if np.ndim(th) == 0:
        return FlowState(float(u), float(v), float(rho))
    return u, v, rho


def background_profile(sol, theta):
    """(u0, v0, du0/dtheta, dv0/dtheta) on an array of angles.

    Angular derivatives use the ODE right-hand side at the interpolated state,
    so the sampled background satisfies the reduced equations pointwise.
    """
    th = np.asarray(theta, dtype=float)
    sigma = np.clip(np.cos(th) / np.sin(th), sol.tau, sol.kappa)
    u, v = sol.evaluate(sigma)
    du, dv = background_rhs_array(sigma, u, v, sol.params)
    dsig = -1.0 / np.sin(th) ** 2
    return u, v, du * dsig, dv * dsig


def verify_background(sol):
    """Boolean report of the qualitative properties of a background profile."""
    u, v = sol.u0, sol.v0
    q = sol.q0
    M = sol.mach0
    tan_w0 = 1.0 / sol.kappa
    atol = 1e-13
    report = {
        "u0_decreasing": bool(np.all(np.diff(u) < 0)),
        "v0_increasing": bool(np.all(np.diff(v) > 0)),
        "q0_nonincreasing": bool(np.all(np.diff(q) <= atol)),
        "mach0_nonincreasing": bool(np.all(np.diff(M) <= atol)),
        "kappa_in_range": bool(0.0 < sol.kappa < 1.0 / sol.b),
        "kappa_above_tau": bool(sol.kappa > sol.tau),
        "v0_max_bound": bool(np.max(v) == v[-1] and v[-1] < u[0] * tan_w0),
        "subsonic": bool(np.all(M < 1.0)),
        "slip": bool(sol.slip_residual < 1e-10),
        "b_below_cone_slope": bool(v[0] / u[0] < v[-1] / u[-1]),
    }
    report["all"] = all(report.values())
    return report


def solve_background_for_cone(params, omega0, n_steps=DEFAULT_STEPS, nu0=NU0_DEFAULT, tol=1e-12):
    """Find b such that the cone half-angle equals ``omega0`` (Brent root in b)."""
    target = 1.0 / math.tan(omega0)

    def kappa_of(b):
        return solve_background(params, b, n_steps=n_steps, nu0=nu0).kappa - target

    lo, hi = 1e-3, 1.0 / target * 0.999
    f_lo = kappa_of(lo)
    try:
        f_hi = kappa_of(hi)
    except RootNotFoundError:
        # blunt cone: shrink hi to the largest b that still has an attached shock
        ok, bad = lo, hi
        while bad - ok > 1e-6 * bad:
            mid = 0.5 * (ok + bad)
            try:
                solve_tau(params.nu, params.gamma, mid, nu0=nu0)
                ok = mid
            except RootNotFoundError:
                bad = mid
        hi, f_hi = ok, kappa_of(ok)
    if f_lo * f_hi > 0:
        raise NoConeError("cone angle not reachable in the b bracket", omega0=omega0)
    b = brentq(kappa_of, lo, hi, xtol=tol)
    return solve_background(params, b, n_steps=n_steps, nu0=nu0)
