"""Straight-shock algebra for a uniform upstream state (1, 0, rho_inf).

Behind a straight shock x = tau*y the flow has direction v = b u. The jump
relations fix (u, v, rho) in terms of (tau, b); Bernoulli's law then gives
one scalar equation F(tau, nu) = 0 for the shock cotangent tau.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import AmbiguousRootError, DomainError, RootNotFoundError
from .gas import FlowState, GasParameters, density_from_speed, mach

NU0_DEFAULT = 0.05
TAU_FLOOR = 1e-16


def polar_F(tau, nu, gamma, b):
    """Polar function whose zero in tau gives the shock cotangent."""
    g1 = gamma - 1.0
    inner = 1.0 + 2.0 * tau / b - tau * tau
    if np.any(np.asarray(inner) <= 0) or np.any(np.asarray(b * tau) >= 1.0):
        raise DomainError("polar_F outside its domain", tau=tau, b=b)
    bracket = g1 * inner / (2.0 * (1.0 + tau / b) ** 2) + nu
    return tau - (b + tau) / (1.0 - b * tau) * bracket ** (-1.0 / g1) * nu ** (1.0 / g1)


@dataclass(frozen=True)
class PolarPoint:
    b: float
    tau: float
    nu: float
    gamma: float
    post: FlowState
    roots: tuple = field(default=(), compare=False)

    @property
    def omega1(self):
        return math.atan2(1.0, self.tau)


def solve_tau(nu, gamma, b, nu0=NU0_DEFAULT, on_multiple="select", n_scan=4000, return_roots=False):
    """Shock cotangent on the branch through tau(0) = 0.

    The bracket [1e-16, 0.99/b] is scanned on a log grid for sign changes;
    the smallest root is refined with Brent's method to machine precision. Extra roots are returned when ``return_roots`` is set;
    ``on_multiple="raise"`` turns them into an ``AmbiguousRootError``.
    """
    if nu < 0 or nu > nu0:
        raise DomainError(f"nu={nu!r} outside the admissible range [0, {nu0}]", nu=nu)
    if b <= 0:
        raise DomainError("flow tangent b must be positive", b=b)
    if nu == 0:
        return (0.0, [0.0]) if return_roots else 0.0
    tau_cap = min(0.99 / b, 1.0 / b + math.sqrt(1.0 / b**2 + 1.0))
    grid = np.geomspace(TAU_FLOOR, tau_cap, n_scan)
    vals = polar_F(grid, nu, gamma, b)
    flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if flips.size == 0:
        raise RootNotFoundError(
            "no sign change of the polar function in the bracket",
            nu=nu, gamma=gamma, b=b, f_lo=float(vals[0]), f_hi=float(vals[-1]),
        )
    roots = [_refine(grid[i], grid[i + 1], nu, gamma, b) for i in flips]
    if len(roots) > 1 and on_multiple == "raise":
        raise AmbiguousRootError("polar function has several roots", roots=roots, nu=nu, b=b)
    tau = roots[0]
    return (tau, roots) if return_roots else tau


def _refine(lo, hi, nu, gamma, b):
    eps = np.finfo(float).eps
    return float(brentq(polar_F, lo, hi, args=(nu, gamma, b), xtol=1e-300, rtol=4 * eps, maxiter=200))


def post_shock_state(tau, b, rho_inf):
    """State behind a straight shock from the two jump relations and v = b u."""
    if not tau > 0:
        raise DomainError("tau must be positive", tau=tau)
    if b * tau >= 1.0:
        raise DomainError("b*tau must be below 1", tau=tau, b=b)
    u = tau / (b + tau)
    return FlowState(u, b * u, rho_inf * (b + tau) / (tau * (1.0 - b * tau)))


def rh_residual(upstream, downstream, tau=None, slope=None):
    """Jump residuals across a shock.

    With ``tau`` (straight shock x = tau y): ([rho u] - tau [rho v], [v] + tau [u]).
    With ``slope`` (dx/dy of a curved front): ([rho u][u] + [rho v][v], [v] + slope [u]).
    """
    ju = downstream.u - upstream.u
    jv = downstream.v - upstream.v
    jru = downstream.rho * downstream.u - upstream.rho * upstream.u
    jrv = downstream.rho * downstream.v - upstream.rho * upstream.v
    if (tau is None) == (slope is None):
        raise ValueError("give exactly one of tau or slope")
    if tau is not None:
        return (jru - tau * jrv, jv + tau * ju)
    return (jru * ju + jrv * jv, jv + slope * ju)


def polar_point(nu, gamma, b, nu0=NU0_DEFAULT):
    params = GasParameters.from_nu(gamma, nu)
    tau, roots = solve_tau(nu, gamma, b, nu0=nu0, return_roots=True)
    return PolarPoint(b, tau, nu, gamma, post_shock_state(tau, b, params.rho_inf), tuple(roots))


def emit_apple_curve(gamma, nu, samples=200):
    """Post-shock states over shock angles from the Mach angle to a normal shock.

    For each shock angle omega1 the normal Mach number sets the jump; the
    post-shock speed is obtained from the jump conditions with the Bernoulli
    density. Rows are sorted by omega1 and carry
    ``omega1, tau, u, v, rho, turning_angle, mach_post``.
    """
    params = GasParameters.from_nu(gamma, nu)
    mu = math.asin(min(1.0, math.sqrt(nu)))
    omegas = np.linspace(mu, 0.5 * math.pi, samples)
    rows = []
    for om in omegas:
        state = _oblique_state(om, params)
        tau = math.cos(om) / math.sin(om)
        turn = math.atan2(state.v, state.u)
        rows.append((float(om), tau, state.u, state.v, state.rho, turn, mach(state, gamma)))
    return rows


def _oblique_state(omega1, params):
    """Downstream state for a straight shock at angle omega1 to the x-axis.

    Tangential velocity is continuous; the normal velocity solves the mass
    jump with the Bernoulli density. Returns the compressive root, or the
    upstream state itself at the Mach angle.
    """
    s, c = math.sin(omega1), math.cos(omega1)
    wn_up = s  # upstream normal speed (shock normal points downstream)
    wt = c
    flux = params.rho_inf * wn_up

    def g(wn):
        return density_from_speed(math.hypot(wn, wt), params) * wn - flux

    # The mass flux rho(q) wn peaks at the sonic normal speed; the
    # compressive root lies below it.
    g1 = params.gamma - 1.0
    wn_star = math.sqrt(max(params.kappa_tilde - 0.5 * g1 * wt * wt, 0.0) * 2.0 / (g1 + 2.0))
    if wn_up <= wn_star * (1.0 + 1e-12):
        wn = wn_up
    else:
        wn = brentq(g, 0.0, wn_star, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    # normal n = (sin, -cos) points from upstream (x < tau y) to downstream
    u = wn * s + wt * c
    v = -wn * c + wt * s
    return FlowState(u, v, density_from_speed(math.hypot(u, v), params))
