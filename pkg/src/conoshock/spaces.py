"""Discrete weighted Sobolev and Hoelder norms on truncated log-polar strips.

A function u(r, theta) on the sector omega0 < theta < omega1 is represented
by its samples on the strip (t, theta) with t = ln r. The weight exponent k
enters as the factor e^{k t}; all norms are taken of e^{k t} u on the strip
with centred second-order differences (one-sided at the ends) and trapezoid
quadrature.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

T_MIN_DEFAULT = -12.0
T_MAX_DEFAULT = 12.0
NT_DEFAULT = 1024
NTHETA_DEFAULT = 129


@dataclass(frozen=True)
class StripGrid:
    t_min: float
    t_max: float
    n_t: int
    omega0: float
    omega1: float
    n_theta: int

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise DomainError("t_min must be below t_max")
        if self.n_t < 4 or self.n_t & (self.n_t - 1):
            raise DomainError(f"n_t must be a power of two, got {self.n_t}")
        if not 0.0 < self.omega0 < self.omega1 < math.pi:
            raise DomainError("need 0 < omega0 < omega1 < pi")
        if self.n_theta < 5:
            raise DomainError("n_theta must be at least 5")

    @property
    def h_t(self):
        return (self.t_max - self.t_min) / (self.n_t - 1)

    @property
    def h_theta(self):
        return (self.omega1 - self.omega0) / (self.n_theta - 1)

    @property
    def t(self):
        return self.t_min + self.h_t * np.arange(self.n_t)

    @property
    def theta(self):
        return self.omega0 + self.h_theta * np.arange(self.n_theta)

    def mesh(self):
        return np.meshgrid(self.t, self.theta, indexing="ij")

    def refined(self, factor=2):
        """Grid with ``factor`` times finer spacing in both directions."""
        return StripGrid(
            self.t_min, self.t_max, self.n_t * factor,
            self.omega0, self.omega1, (self.n_theta - 1) * factor + 1,
        )

    def widened(self, factor=2):
        """Grid with the t-window scaled by ``factor`` at the same spacing."""
        half = 0.5 * (self.t_max - self.t_min) * factor
        mid = 0.5 * (self.t_max + self.t_min)
        return StripGrid(mid - half, mid + half, self.n_t * factor, self.omega0, self.omega1, self.n_theta)

    def fingerprint(self):
        key = repr((self.t_min, self.t_max, self.n_t, self.omega0, self.omega1, self.n_theta))
        return hashlib.sha1(key.encode()).hexdigest()[:16]


@dataclass
class WeightedField:
    grid: StripGrid
    values: np.ndarray
    k: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.n_t, self.grid.n_theta):
            raise DomainError("field shape does not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field values must be finite")

    def weighted(self):
        return np.exp(self.k * self.grid.t)[:, None] * self.values

    def sobolev(self, m=1, q=4.0):
        key = ("W", m, q, self.grid.fingerprint())
        if key not in self._cache:
            self._cache[key] = sobolev_norm(self, m, q)
        return self._cache[key]

    def holder(self, m=0):
        key = ("C", m, self.grid.fingerprint())
        if key not in self._cache:
            self._cache[key] = holder_norm(self, m)
        return self._cache[key]

    def trace(self, j, q=4.0):
        col = 0 if j == 0 else -1
        return trace_norm(self.values[:, col], self.grid.t, self.k, q)


def _derivs(w, h_t, h_theta, m):
    """All partial derivatives of order <= m (list of arrays)."""
    out = [w]
    if m >= 1:
        wt = np.gradient(w, h_t, axis=0, edge_order=2)
        wth = np.gradient(w, h_theta, axis=1, edge_order=2)
        out += [wt, wth]
    if m >= 2:
        out += [
            np.gradient(wt, h_t, axis=0, edge_order=2),
            np.gradient(wt, h_theta, axis=1, edge_order=2),
            np.gradient(wth, h_theta, axis=1, edge_order=2),
        ]
    if m > 2:
        raise DomainError("norm order m must be 0, 1 or 2")
    return out


def _trapz2(f, h_t, h_theta):
    return np.trapezoid(np.trapezoid(f, dx=h_theta, axis=1), dx=h_t)


def sobolev_norm(field, m=1, q=4.0):
    """Discrete W^{m,q} norm of e^{k t} u on the strip."""
    if q <= 1:
        raise DomainError("q must exceed 1")
    g = field.grid
    total = 0.0
    for d in _derivs(field.weighted(), g.h_t, g.h_theta, m):
        total += _trapz2(np.abs(d) ** q, g.h_t, g.h_theta)
    return float(total ** (1.0 / q))


def holder_norm(field, m=0):
    """Discrete C^m norm: sum over |alpha| <= m of max |d^alpha (e^{k t} u)|."""
    g = field.grid
    return float(sum(np.max(np.abs(d)) for d in _derivs(field.weighted(), g.h_t, g.h_theta, m)))


def line_norm(values, t, k=0.0, q=4.0, m=0):
    """W^{m,q} norm (m in {0, 1}) of e^{k t} values on a uniform line."""
    t = np.asarray(t, dtype=float)
    h = t[1] - t[0]
    w = np.exp(k * t) * np.asarray(values)
    total = np.trapezoid(np.abs(w) ** q, dx=h)
    if m >= 1:
        total += np.trapezoid(np.abs(np.gradient(w, h, edge_order=2)) ** q, dx=h)
    if m >= 2:
        raise DomainError("line_norm supports m in {0, 1}")
    return float(total ** (1.0 / q))


def line_sup(values, t, k=0.0, m=0):
    t = np.asarray(t, dtype=float)
    w = np.exp(k * t) * np.asarray(values)
    out = np.max(np.abs(w))
    if m >= 1:
        h = t[1] - t[0]
        d = w
        for _ in range(m):
            d = np.gradient(d, h, edge_order=2)
            out += np.max(np.abs(d))
    return float(out)


def trace_norm(values, t, k=0.0, q=4.0):
    """Boundary norm on one ray.

    The fractional W^{1-1/q,q} norm is replaced by the full W^{1,q} norm of
    e^{k t} u along the ray, which dominates it.
    """
    return line_norm(values, t, k, q, m=1)


def gamma1_norm(values, t, q=4.0):
    """Combined W^{0,q}_{(0)} + C^0 norm used for shock slopes."""
    return line_norm(values, t, 0.0, q, m=0) + line_sup(values, t, 0.0, m=0)


def to_log_polar(func, grid, k=0.0):
    """Sample ``func(x, y)`` at the images (e^t cos theta, e^t sin theta) of the strip nodes."""
    T, TH = grid.mesh()
    r = np.exp(T)
    vals = func(r * np.cos(TH), r * np.sin(TH))
    vals = np.broadcast_to(np.asarray(vals), T.shape).copy()
    return WeightedField(grid, vals, k)


def from_log_polar(field):
    """Cartesian coordinates and values of the strip samples."""
    T, TH = field.grid.mesh()
    r = np.exp(T)
    return r * np.cos(TH), r * np.sin(TH), field.values


def hardy_ratio(hprime, t, q=4.0):
    """Ratio ||h(e^t)/e^t||_{L^q} / ||h'(e^t)||_{L^q} with h(x) = int_0^x h'.

    ``hprime`` holds samples of h'(e^t) on the uniform grid ``t``; the
    primitive is accumulated in t as int h'(e^s) e^s ds, which vanishes at
    the left end where h' is assumed to have decayed.
    """
    t = np.asarray(t, dtype=float)
    hp = np.asarray(hprime, dtype=float)
    dt = t[1] - t[0]
    integrand = hp * np.exp(t)
    h = np.concatenate(([0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * dt)))
    h += hp[0] * np.exp(t[0])  # int_0^{e^t0} h' with h' ~ h'(e^t0) on the first cell
    den = np.trapezoid(np.abs(hp) ** q, dx=dt) ** (1.0 / q)
    if den == 0:
        raise DomainError("h' has zero norm")
    num = np.trapezoid(np.abs(h * np.exp(-t)) ** q, dx=dt) ** (1.0 / q)
    return float(num / den)


def dump_csv(field, path):
    """Write ``t,theta,value`` rows (17 significant digits)."""
    T, TH = field.grid.mesh()
    with open(path, "w") as fh:
        fh.write("t,theta,value\n")
        for a, b, c in zip(T.ravel(), TH.ravel(), field.values.ravel()):
            fh.write(f"{a:.17g},{b:.17g},{c:.17g}\n")
