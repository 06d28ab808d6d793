"""Boundary descriptors and the map between the fixed sector and physical space.

The fixed sector omega0 < theta < omega1 in (xi, eta) is carried onto the
physical domain between the cone y = phi(x) and the shock x = psi(eta) by

    x = xi + (psi(eta) - eta cot omega1),
    y = eta + (phi(x) - x tan omega0) + tan omega0 (psi(eta) - eta cot omega1).

Both brackets vanish for the straight cone and shock, so y - eta is formed
from them directly and is exactly zero in the unperturbed case.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import erf

from .errors import DomainError, FoldError
from .spaces import StripGrid, WeightedField, gamma1_norm, holder_norm, line_norm, line_sup, sobolev_norm

FOLD_EPS = 1e-8
DELTA_HAT = 0.05


# --- cone ------------------------------------------------------------------


@dataclass(frozen=True)
class LogBump:
    """a * exp(-(ln x - c)^2 / (2 s^2)), a bump in log space."""

    amplitude: float
    center: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("bump width must be positive")

    def value(self, x):
        lx = np.log(x)
        return self.amplitude * np.exp(-0.5 * ((lx - self.center) / self.width) ** 2)

    def derivative(self, x):
        lx = np.log(x)
        return self.value(x) * (-(lx - self.center) / (self.width**2 * x))

    def primitive(self, x):
        """Integral of the bump from 0 to x (closed form)."""
        c, s = self.center, self.width
        z = (np.log(x) - c - s * s) / (s * math.sqrt(2.0))
        return self.amplitude * math.exp(c + 0.5 * s * s) * s * math.sqrt(0.5 * math.pi) * (1.0 + erf(z))


def _positive(x):
    x = np.asarray(x, dtype=float)
    return x, x > 0, np.where(x > 0, x, 1.0)


@dataclass(frozen=True)
class ConeBoundary:
    """Cone y = phi(x) with phi' = tan(omega0) + (sum of log bumps).

    All perturbation terms vanish for x <= 0, so phi(0) = 0.
    """

    omega0: float
    bumps: tuple = ()

    @property
    def tan0(self):
        return math.tan(self.omega0)

    def _sum(self, method, x):
        x, pos, xs = _positive(x)
        out = np.zeros_like(xs)
        for bump in self.bumps:
            out = out + getattr(bump, method)(xs)
        return np.where(pos, out, 0.0)

    def dphi(self, x):
        """phi'(x) - tan(omega0)."""
        return self._sum("value", x)

    def phi_second(self, x):
        return self._sum("derivative", x)

    def delta_phi(self, x):
        """phi(x) - x tan(omega0)."""
        return self._sum("primitive", x)

    def phi(self, x):
        return self.tan0 * np.asarray(x, dtype=float) + self.delta_phi(x)

    def phi_prime(self, x):
        return self.tan0 + self.dphi(x)

    def norm(self, t, q=4.0):
        """C^2_(0) + W^{1,q}_(0) norm of phi' - tan(omega0) sampled at x = e^t."""
        d = self.dphi(np.exp(t))
        return line_sup(d, t, 0.0, m=2) + line_norm(d, t, 0.0, q, m=1)

    def scaled(self, factor):
        return ConeBoundary(self.omega0, tuple(LogBump(factor * b.amplitude, b.center, b.width) for b in self.bumps))

    @property
    def is_straight(self):
        return all(b.amplitude == 0.0 for b in self.bumps)


# --- upstream --------------------------------------------------------------


@dataclass(frozen=True)
class UpstreamBump:
    """(du, dv) * exp(-(ln r - c)^2 / (2 s^2)) * (1 + tilt (theta - omega_ref))."""

    du: float
    dv: float
    center: float
    width: float
    tilt: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("bump width must be positive")


@dataclass(frozen=True)
class UpstreamField:
    """Perturbation of the uniform upstream state (1, 0) on the extended sector."""

    omega0: float
    omega1: float
    bumps: tuple = ()
    delta_hat: float = DELTA_HAT

    @property
    def theta_range(self):
        return self.omega0 - self.delta_hat, self.omega1 + self.delta_hat

    def _polar(self, x, y, check=True):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        if check:
            lo, hi = self.theta_range
            bad = (th < lo) | (th > hi) | (r <= 0)
            if np.any(bad):
                raise DomainError("point outside the extended sector", count=int(np.sum(bad)))
        return r, th

    def _parts(self, r, th):
        for bump in self.bumps:
            z = (np.log(r) - bump.center) / bump.width
            radial = np.exp(-0.5 * z * z)
            ang = 1.0 + bump.tilt * (th - self.omega1)
            yield bump, radial, ang, -z / (bump.width * r) * radial

    def evaluate(self, x, y, check=True):
        """(du, dv) at physical points."""
        r, th = self._polar(x, y, check)
        du = np.zeros_like(r)
        dv = np.zeros_like(r)
        for bump, radial, ang, _ in self._parts(r, th):
            du = du + bump.du * radial * ang
            dv = dv + bump.dv * radial * ang
        return du, dv

    def xi_derivative(self, x, y, check=True):
        """d/dx of (du, dv): cos(theta) d/dr - sin(theta)/r d/dtheta."""
        r, th = self._polar(x, y, check)
        gu = np.zeros_like(r)
        gv = np.zeros_like(r)
        c, s = np.cos(th), np.sin(th)
        for bump, radial, ang, dradial in self._parts(r, th):
            d = c * dradial * ang - s / r * radial * bump.tilt
            gu = gu + bump.du * d
            gv = gv + bump.dv * d
        return gu, gv

    def norm(self, t_min=-12.0, t_max=12.0, n_t=512, n_theta=65, q=4.0):
        """W^{1,q}_(0) norm of the perturbation plus C^1_(1) of its x-derivative on the extended sector."""
        lo, hi = self.theta_range
        grid = StripGrid(t_min, t_max, n_t, lo, hi, n_theta)
        T, TH = grid.mesh()
        x, y = np.exp(T) * np.cos(TH), np.exp(T) * np.sin(TH)
        du, dv = self.evaluate(x, y, check=False)
        gu, gv = self.xi_derivative(x, y, check=False)
        total = 0.0
        for a in (du, dv):
            total += sobolev_norm(WeightedField(grid, a, 0.0), 1, q)
        for a in (gu, gv):
            total += holder_norm(WeightedField(grid, a, 1.0), 1)
        return total

    def scaled(self, factor):
        bumps = tuple(UpstreamBump(factor * b.du, factor * b.dv, b.center, b.width, b.tilt) for b in self.bumps)
        return UpstreamField(self.omega0, self.omega1, bumps, self.delta_hat)

    @property
    def is_uniform(self):
        return all(b.du == 0.0 and b.dv == 0.0 for b in self.bumps)


# --- shock front -----------------------------------------------------------


class ShockFront:
    """Shock x = psi(eta) sampled on the outer ray of the strip grid.

    Stores the slope deviation d(eta) = psi'(eta) - cot(omega1) at the nodes
    eta_i = e^{t_i} sin(omega1) and rebuilds psi by trapezoid integration in
    t, starting from psi(0) = 0; the first cell [0, eta_0] uses the constant
    slope d(eta_0).
    """

    def __init__(self, t, omega1, dpsi_dot):
        self.t = np.asarray(t, dtype=float)
        self.omega1 = float(omega1)
        self.cot1 = 1.0 / math.tan(self.omega1)
        self.dpsi_dot = np.asarray(dpsi_dot, dtype=float).copy()
        if self.dpsi_dot.shape != self.t.shape:
            raise DomainError("slope samples must match the t grid")
        if not np.all(np.isfinite(self.dpsi_dot)):
            raise DomainError("shock slope must be finite")
        self.eta = np.exp(self.t) * math.sin(self.omega1)
        integrand = self.dpsi_dot * self.eta
        dt = self.t[1] - self.t[0]
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * dt)))
        self.delta_psi = cum + self.dpsi_dot[0] * self.eta[0]
        self._spline = CubicHermiteSpline(np.log(self.eta), self.delta_psi, integrand)

    @classmethod
    def straight(cls, grid):
        return cls(grid.t, grid.omega1, np.zeros(grid.n_t))

    @property
    def psi(self):
        return self.cot1 * self.eta + self.delta_psi

    @property
    def psi_dot(self):
        return self.cot1 + self.dpsi_dot

    def _split(self, eta):
        eta = np.asarray(eta, dtype=float)
        if np.any(eta < 0):
            raise DomainError("eta must be non-negative")
        lo, hi = self.eta[0], self.eta[-1]
        return eta, eta < lo, eta > hi, np.log(np.clip(eta, lo, hi))

    def delta_psi_at(self, eta):
        """psi(eta) - eta cot(omega1) at arbitrary eta >= 0."""
        eta, below, above, s = self._split(eta)
        out = self._spline(s)
        out = np.where(below, self.dpsi_dot[0] * eta, out)
        out = np.where(above, self.delta_psi[-1] + self.dpsi_dot[-1] * (eta - self.eta[-1]), out)
        return out

    def dpsi_dot_at(self, eta):
        """psi'(eta) - cot(omega1) at arbitrary eta >= 0."""
        eta, below, above, s = self._split(eta)
        out = self._spline(s, 1) / np.exp(s)
        out = np.where(below, self.dpsi_dot[0], out)
        out = np.where(above, self.dpsi_dot[-1], out)
        return out

    def norm(self, q=4.0):
        """Combined W^{0,q}_(0) + C^0 norm of the slope deviation along the ray."""
        return gamma1_norm(self.dpsi_dot, self.t, q)


# --- map -------------------------------------------------------------------


def map_to_physical(xi, eta, shock, cone):
    """Physical (x, y) of fixed-domain points, together with y - eta."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < 0):
        raise DomainError("eta must be non-negative")
    dpsi = shock.delta_psi_at(eta)
    x = xi + dpsi
    y_minus_eta = cone.delta_phi(x) + cone.tan0 * dpsi
    return x, eta + y_minus_eta, y_minus_eta


def inverse_map(x, y, shock, cone, tol=1e-14, max_iter=50):
    """Newton inverse of ``map_to_physical``.

    For fixed x the second relation is a scalar equation in eta whose
    derivative is the Jacobian determinant 1 + tan(omega0) d(eta).
    """
    x = np.asarray(x, dtype=float)
    target = np.asarray(y, dtype=float) - cone.delta_phi(x)
    eta = np.maximum(target, 0.0)
    t0 = cone.tan0
    for _ in range(max_iter):
        res = eta + t0 * shock.delta_psi_at(eta) - target
        den = 1.0 + t0 * shock.dpsi_dot_at(eta)
        if np.any(den <= FOLD_EPS):
            raise FoldError("map folds during inversion", den=float(np.min(den)))
        step = res / den
        eta = np.maximum(eta - step, 0.0)
        if np.max(np.abs(step)) <= tol * max(1.0, float(np.max(np.abs(eta)))):
            break
    else:
        raise FoldError("Newton inversion did not converge", residual=float(np.max(np.abs(res))))
    return x - shock.delta_psi_at(eta), eta


def jacobians(xi, eta, shock, cone):
    """d(x, y)/d(xi, eta) and d(xi, eta)/d(x, y) as (..., 2, 2) arrays."""
    x, _, _ = map_to_physical(xi, eta, shock, cone)
    d = shock.dpsi_dot_at(eta)
    fp = cone.dphi(x)
    t0 = cone.tan0
    den = 1.0 + t0 * d
    if np.any(den <= FOLD_EPS):
        raise FoldError("degenerate transformation", den=float(np.min(den)))
    phi_p = t0 + fp
    fwd = np.empty(np.shape(d) + (2, 2))
    fwd[..., 0, 0] = 1.0
    fwd[..., 0, 1] = d
    fwd[..., 1, 0] = fp
    fwd[..., 1, 1] = 1.0 + phi_p * d
    inv = np.empty_like(fwd)
    inv[..., 0, 0] = (1.0 + phi_p * d) / den
    inv[..., 0, 1] = -d / den
    inv[..., 1, 0] = -fp / den
    inv[..., 1, 1] = 1.0 / den
    return fwd, inv


def shock_points(shock, cone):
    """Physical shock points (psi(eta), y(eta)) at the ray nodes."""
    x = shock.psi
    y = (1.0 - cone.tan0 * shock.cot1) * shock.eta + cone.phi(x)
    return x, y
