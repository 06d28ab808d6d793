"""Log-polar spectral solvers for the singular linear problems on a sector.

Every scalar solve follows the same pipeline: rewrite the problem on the
strip t = ln r, substitute the weighted unknown w = e^{-t} * (potential),
Fourier transform in t on a zero-padded window and solve one complex
tridiagonal system in theta per frequency. After the substitution the
Neumann symbol is -mu^2 + 3 i mu + 2, which equals -lambda^2 + i lambda at
lambda = mu - i, so real frequencies realise the weighted contour.

The first-order system with the base coefficients is reduced to one
Dirichlet problem (for the lift Phi) and one Neumann problem (for the
potential phi); perturbed coefficients are handled by a fixed point around
that base solve.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._accel import shifted_tridiag
from .errors import DomainError, NonContractionError, SpectralProximityError, TruncationError
from .spaces import WeightedField, line_norm, line_sup, sobolev_norm, trace_norm

COND_CAP = 1e12
DECAY_TOL = 1e-8
INNER_DECAY_TOL = 1e-5
PAD = 2
Q_DEFAULT = 4.0
# measured rate is about 0.95 * eps_hat, so this keeps the continuity method below 1/2
EPS_HAT_MAX = 0.5


def hartman_wintner_gap(theta, mu):
    """a(theta, mu) = mu^2 + csc^2 theta - cot^2 theta / 4 (always >= 1)."""
    th = np.asarray(theta, dtype=float)
    s = np.sin(th)
    if np.any(s <= 0):
        raise DomainError("theta must lie strictly inside (0, pi)")
    return np.square(mu) + (3.0 + s * s) / (4.0 * s * s)


def neumann_symbol(mu):
    return -np.square(mu) + 3j * np.asarray(mu) + 2.0


def dirichlet_symbol(mu):
    return np.square(1j * np.asarray(mu) + 1.0)


def mode_shift(lam):
    """Coefficient -lambda^2 + i lambda of the mode equation."""
    return -lam * lam + 1j * lam


# --- banded operators ----------------------------------------------------


def _neumann_bands(theta):
    h = theta[1] - theta[0]
    cot = np.cos(theta) / np.sin(theta)
    lo = 1.0 / h**2 - cot / (2.0 * h)
    hi = 1.0 / h**2 + cot / (2.0 * h)
    sub, sup = lo.copy(), hi.copy()
    diag = np.full(theta.size, -2.0 / h**2)
    # ghost nodes eliminated with the Neumann data
    sup[0] = 2.0 / h**2
    sub[-1] = 2.0 / h**2
    sub[0] = 0.0
    sup[-1] = 0.0
    return sub, diag, sup, lo[0], hi[-1]


def _dirichlet_bands(theta):
    h = theta[1] - theta[0]
    n = theta.size - 2
    sub = np.full(n, 1.0 / h**2)
    sup = np.full(n, 1.0 / h**2)
    sub[0] = 0.0
    sup[-1] = 0.0
    return sub, np.full(n, -2.0 / h**2), sup


def _dense(sub, diag, sup, s):
    return np.diag(diag + s) + np.diag(sup[:-1], 1) + np.diag(sub[1:], -1)


def _banded(sub, diag, sup, s):
    ab = np.zeros((3, diag.size), dtype=complex)
    ab[0, 1:] = sup[:-1]
    ab[1] = diag + s
    ab[2, :-1] = sub[1:]
    return ab


def _tridiag_matvec(sub, diag, sup, shift, x):
    y = (diag[None, :] + shift[:, None]) * x
    y[:, 1:] += sub[None, 1:] * x[:, :-1]
    y[:, :-1] += sup[None, :-1] * x[:, 1:]
    return y


# --- single mode ---------------------------------------------------------


@dataclass
class ModeProblem:
    lam: complex
    theta: np.ndarray
    rhs_hat: np.ndarray
    bc_hat: tuple = (0.0, 0.0)
    cond_cap: float = COND_CAP

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta[0] <= 0 or self.theta[-1] >= math.pi:
            raise DomainError("theta grid must lie strictly inside (0, pi)")
        self.rhs_hat = np.broadcast_to(np.asarray(self.rhs_hat, dtype=complex), self.theta.shape)


def solve_mode(mode):
    """Solve phi'' + cot(theta) phi' + (-lam^2 + i lam) phi = rhs with phi' = bc at the ends."""
    sub, diag, sup, lo0, hi1 = _neumann_bands(mode.theta)
    s = mode_shift(complex(mode.lam))
    cond = np.linalg.cond(_dense(sub, diag, sup, s))
    if not np.isfinite(cond) or cond > mode.cond_cap:
        raise SpectralProximityError(
            "mode operator is numerically singular", lam=mode.lam, cond=float(cond)
        )
    h = mode.theta[1] - mode.theta[0]
    rhs = mode.rhs_hat.astype(complex).copy()
    rhs[0] += 2.0 * h * lo0 * mode.bc_hat[0]
    rhs[-1] -= 2.0 * h * hi1 * mode.bc_hat[1]
    return scipy.linalg.solve_banded((1, 1), _banded(sub, diag, sup, s), rhs)


# --- batched strip solver ------------------------------------------------


@dataclass
class ScalarSolution:
    """Weighted unknown w = e^{-t} * potential with its strip derivatives."""

    grid: object
    kind: str
    w: np.ndarray
    w_t: np.ndarray
    w_theta: np.ndarray
    residual_interior: float
    residual_bc0: float
    residual_bc1: float
    modes_solved: int
    max_condition: float

    @property
    def potential(self):
        return WeightedField(self.grid, np.exp(self.grid.t)[:, None] * self.w, k=-1.0)

    def cartesian_gradient(self):
        """(d/dx, d/dy) of the potential e^t w."""
        th = self.grid.theta[None, :]
        radial = self.w + self.w_t
        return (
            np.cos(th) * radial - np.sin(th) * self.w_theta,
            np.sin(th) * radial + np.cos(th) * self.w_theta,
        )


class StripSolver:
    """Cached spectral solver for one grid."""

    def __init__(self, grid, backend=None, cond_cap=COND_CAP, pad=PAD):
        self.grid = grid
        self.backend = backend
        self.cond_cap = cond_cap
        self.n_pad = pad * grid.n_t
        self.mu = 2.0 * math.pi * np.fft.rfftfreq(self.n_pad, d=grid.h_t)
        th = grid.theta
        self.neu = _neumann_bands(th)
        self.dir = _dirichlet_bands(th)
        self.shift = {"neumann": neumann_symbol(self.mu), "dirichlet": dirichlet_symbol(self.mu)}
        self._zero = {}
        self._opnorm = {}
        for kind, bands in (("neumann", self.neu[:3]), ("dirichlet", self.dir)):
            sub, diag, sup = bands
            s = self.shift[kind]
            self._opnorm[kind] = np.max(
                np.abs(sub)[None, :] + np.abs(diag[None, :] + s[:, None]) + np.abs(sup)[None, :], axis=1
            )
            dense = _dense(sub, diag, sup, s[0].real)
            cond0 = np.linalg.cond(dense)
            if not np.isfinite(cond0) or cond0 > cond_cap:
                raise SpectralProximityError("zero mode is singular", kind=kind, cond=float(cond0))
            self._zero[kind] = (scipy.linalg.lu_factor(dense), cond0)

    def _forward(self, a):
        return np.fft.rfft(a, n=self.n_pad, axis=0)

    def _inverse(self, a):
        return np.fft.irfft(a, n=self.n_pad, axis=0)[: self.grid.n_t]

    def _solve(self, kind, rhs):
        sub, diag, sup = self.neu[:3] if kind == "neumann" else self.dir
        shift = self.shift[kind]
        x, minpiv = shifted_tridiag(sub, diag, sup, shift, rhs, backend=self.backend)
        lu, cond0 = self._zero[kind]
        x[0] = scipy.linalg.lu_solve(lu, rhs[0].real) + 1j * scipy.linalg.lu_solve(lu, rhs[0].imag)
        cond = self._opnorm[kind][1:] / np.maximum(minpiv[1:], 1e-300)
        worst = float(max(np.max(cond), cond0)) if cond.size else float(cond0)
        if worst > self.cond_cap:
            k = int(np.argmax(cond)) + 1
            raise SpectralProximityError("mode system too close to singular", mu=float(self.mu[k]), cond=worst)
        res = _tridiag_matvec(sub, diag, sup, shift, x) - rhs
        return x, res, worst

    def neumann(self, rhs_w, bc_lo, bc_hi):
        """Solve w_tt + 3 w_t + 2 w + w_thth + cot w_th = rhs_w, w_th = bc at the rays."""
        h = self.grid.h_theta
        R = self._forward(rhs_w).astype(complex)
        scale_int = np.max(np.abs(R)) if R.size else 0.0
        B0 = self._forward(bc_lo)
        B1 = self._forward(bc_hi)
        R[:, 0] += 2.0 * h * self.neu[3] * B0
        R[:, -1] -= 2.0 * h * self.neu[4] * B1
        x, res, cond = self._solve("neumann", R)
        w = self._inverse(x)
        w_t = self._inverse(1j * self.mu[:, None] * x)
        w_th = np.empty_like(w)
        w_th[:, 1:-1] = (w[:, 2:] - w[:, :-2]) / (2.0 * h)
        w_th[:, 0] = bc_lo
        w_th[:, -1] = bc_hi
        r_int, r0, r1 = _rel_residuals(res, R, scale_int)
        return ScalarSolution(self.grid, "neumann", w, w_t, w_th, r_int, r0, r1, self.mu.size, cond)

    def dirichlet(self, rhs_w):
        """Solve W_tt + 2 W_t + W + W_thth = rhs_w with W = 0 on both rays."""
        h = self.grid.h_theta
        R = self._forward(rhs_w)[:, 1:-1].astype(complex)
        x, res, cond = self._solve("dirichlet", R)
        X = np.zeros((x.shape[0], x.shape[1] + 2), dtype=complex)
        X[:, 1:-1] = x
        W = self._inverse(X)
        W_t = self._inverse(1j * self.mu[:, None] * X)
        W_th = np.gradient(W, h, axis=1, edge_order=2)
        r_int, r0, r1 = _rel_residuals(res, R, np.max(np.abs(R)) if R.size else 0.0)
        return ScalarSolution(self.grid, "dirichlet", W, W_t, W_th, r_int, r0, r1, self.mu.size, cond)

    def t_derivative(self, values):
        """Spectral d/dt of a field decaying at both window ends."""
        return self._inverse(1j * self.mu[:, None] * self._forward(values))


def _rel_residuals(res, rhs, scale_int):
    den = max(float(np.max(np.abs(rhs))), 1e-300)
    if scale_int == 0.0 and den <= 1e-300:
        return 0.0, 0.0, 0.0
    return (
        float(np.max(np.abs(res[:, 1:-1]))) / den,
        float(np.max(np.abs(res[:, 0]))) / den,
        float(np.max(np.abs(res[:, -1]))) / den,
    )


@functools.lru_cache(maxsize=16)
def get_solver(grid, backend=None, cond_cap=COND_CAP, pad=PAD):
    return StripSolver(grid, backend=backend, cond_cap=cond_cap, pad=pad)


def check_decay(weighted, name, tol=DECAY_TOL):
    """Raise ``TruncationError`` unless the data is small at both t ends."""
    a = np.abs(np.asarray(weighted))
    if a.ndim == 1:
        a = a[:, None]
    peak = float(np.max(a)) if a.size else 0.0
    if peak == 0.0:
        return 0.0
    ends = max(float(np.max(a[0])), float(np.max(a[-1])))
    ratio = ends / peak
    if ratio > tol:
        raise TruncationError(f"{name} has not decayed at the window ends", ratio=ratio, tol=tol)
    return ratio


def strip_gradient(values, grid, solver=None):
    """(d/dt, d/dtheta) on the strip: spectral in t, second-order differences in theta."""
    solver = solver or get_solver(grid)
    return solver.t_derivative(values), np.gradient(values, grid.h_theta, axis=1, edge_order=2)


def cartesian_gradient(values, grid, solver=None):
    """(d/dxi, d/deta) of samples on the log-polar nodes."""
    dt, dth = strip_gradient(values, grid, solver)
    th = grid.theta[None, :]
    er = np.exp(-grid.t)[:, None]
    return er * (np.cos(th) * dt - np.sin(th) * dth), er * (np.sin(th) * dt + np.cos(th) * dth)


# --- public scalar solves ------------------------------------------------


def solve_neumann_singular(f, g0, g1, grid, decay_tol=DECAY_TOL, backend=None):
    """Solve L0 phi = f, B0 phi = g0 on the cone ray, B1 phi = g1 on the outer ray.

    ``f`` holds raw samples on the strip nodes (weight +1 data); ``g0`` and
    ``g1`` are samples along the two rays (weight 0). Returns the solution
    with the potential as a k = -1 field.
    """
    t = grid.t
    rhs = np.exp(t)[:, None] * np.asarray(f, dtype=float)
    check_decay(rhs, "interior data", decay_tol)
    g0 = np.broadcast_to(np.asarray(g0, dtype=float), t.shape)
    g1 = np.broadcast_to(np.asarray(g1, dtype=float), t.shape)
    check_decay(g0, "cone data", decay_tol)
    check_decay(g1, "shock data", decay_tol)
    # normal derivative conditions in strip form
    lo = math.cos(grid.omega0) * g0
    hi = -math.sin(grid.omega1) * g1
    return get_solver(grid, backend).neumann(rhs, lo, hi)


def solve_dirichlet_laplace(f2, grid, decay_tol=DECAY_TOL, backend=None):
    """Solve Delta Phi = f2 on the sector with Phi = 0 on both rays."""
    rhs = np.exp(grid.t)[:, None] * np.asarray(f2, dtype=float)
    check_decay(rhs, "interior data", decay_tol)
    return get_solver(grid, backend).dirichlet(rhs)


# --- first-order system --------------------------------------------------


@dataclass
class LinearData:
    """Right-hand side of the base first-order problem (raw samples)."""

    f1: np.ndarray
    f2: np.ndarray
    g0: np.ndarray
    g1: np.ndarray

    def __post_init__(self):
        for name in ("f1", "f2", "g0", "g1"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} contains non-finite values")
            setattr(self, name, arr)

    @classmethod
    def zeros(cls, grid):
        z = np.zeros((grid.n_t, grid.n_theta))
        return cls(z, z.copy(), np.zeros(grid.n_t), np.zeros(grid.n_t))

    def __add__(self, other):
        return LinearData(self.f1 + other.f1, self.f2 + other.f2, self.g0 + other.g0, self.g1 + other.g1)

    def __sub__(self, other):
        return LinearData(self.f1 - other.f1, self.f2 - other.f2, self.g0 - other.g0, self.g1 - other.g1)

    def scaled(self, a):
        return LinearData(a * self.f1, a * self.f2, a * self.g0, a * self.g1)

    def norm(self, grid, q=Q_DEFAULT):
        """||F||_{W^{0,q}_{(1)}} + sum of the boundary norms."""
        fn = sum(sobolev_norm(WeightedField(grid, f, 1.0), 0, q) for f in (self.f1, self.f2))
        return fn + trace_norm(self.g0, grid.t, 0.0, q) + trace_norm(self.g1, grid.t, 0.0, q)


@dataclass
class FirstOrderSolution:
    grid: object
    u: np.ndarray
    v: np.ndarray
    lift: ScalarSolution
    potential: ScalarSolution
    residual_interior: float
    residual_bc0: float
    residual_bc1: float

    def fields(self):
        return WeightedField(self.grid, self.u, 0.0), WeightedField(self.grid, self.v, 0.0)

    def norm(self, q=Q_DEFAULT):
        return pair_norm(self.u, self.v, self.grid, q)


def pair_norm(u, v, grid, q=Q_DEFAULT):
    """W^{1,q}_{(0)} norm of a velocity pair (sum of component norms)."""
    return sobolev_norm(WeightedField(grid, u, 0.0), 1, q) + sobolev_norm(WeightedField(grid, v, 0.0), 1, q)


def solve_first_order(data, grid, decay_tol=DECAY_TOL, backend=None):
    """Base first-order problem: lift, reduced Neumann problem, reconstruction."""
    lift = solve_dirichlet_laplace(data.f2, grid, decay_tol, backend)
    th = grid.theta[None, :]
    Phi_x, Phi_y = lift.cartesian_gradient()
    # e^t (f1 - Phi_x / y) with y = e^t sin(theta)
    rhs_w = np.exp(grid.t)[:, None] * data.f1 - Phi_x / np.sin(th)
    check_decay(rhs_w, "reduced data", decay_tol)
    solver = get_solver(grid, backend)
    g0 = np.broadcast_to(data.g0, grid.t.shape)
    g1 = np.broadcast_to(data.g1, grid.t.shape)
    check_decay(g0, "cone data", decay_tol)
    check_decay(g1, "shock data", decay_tol)
    pot = solver.neumann(rhs_w, math.cos(grid.omega0) * g0, -math.sin(grid.omega1) * g1)
    phi_x, phi_y = pot.cartesian_gradient()
    u = phi_x - Phi_y
    v = phi_y + Phi_x
    a0 = (-math.tan(grid.omega0), 1.0)
    a1 = (1.0, -1.0 / math.tan(grid.omega1))
    r0 = u[:, 0] * a0[0] + v[:, 0] * a0[1] - g0
    r1 = u[:, -1] * a1[0] + v[:, -1] * a1[1] - g1
    scale = max(float(np.max(np.abs(u))), float(np.max(np.abs(v))), 1e-300)
    return FirstOrderSolution(
        grid, u, v, lift, pot,
        max(lift.residual_interior, pot.residual_interior, lift.residual_bc0, lift.residual_bc1),
        max(float(np.max(np.abs(r0))) / scale, pot.residual_bc0),
        max(float(np.max(np.abs(r1))) / scale, pot.residual_bc1),
    )


def system_consistency(sol, data):
    """Finite-difference residuals of the base system (truncation level, O(h^2)).

    Returns the relative maxima of e^t * (row residual) for the two rows.
    """
    grid = sol.grid
    solver = get_solver(grid)
    ux, uy = cartesian_gradient(sol.u, grid, solver)
    vx, vy = cartesian_gradient(sol.v, grid, solver)
    et = np.exp(grid.t)[:, None]
    eta = et * np.sin(grid.theta)[None, :]
    r1 = et * (ux + vy + sol.v / eta - data.f1)
    r2 = et * (vx - uy - data.f2)
    scale = max(float(np.max(np.abs(et * data.f1))), float(np.max(np.abs(et * data.f2))),
                float(np.max(np.abs(sol.u))), float(np.max(np.abs(sol.v))), 1e-300)
    return float(np.max(np.abs(r1))) / scale, float(np.max(np.abs(r2))) / scale


def stability_ratio(sol, data, q=Q_DEFAULT):
    return sol.norm(q) / max(data.norm(sol.grid, q), 1e-300)


# --- perturbed coefficients ----------------------------------------------

A_HAT = np.eye(2)
B_HAT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def c_hat(grid):
    """Base lower-order matrix field [[0, 1/y], [0, 0]] on the nodes."""
    eta = np.exp(grid.t)[:, None] * np.sin(grid.theta)[None, :]
    C = np.zeros((grid.n_t, grid.n_theta, 2, 2))
    C[..., 0, 1] = 1.0 / eta
    return C


def alpha_hat(grid):
    return np.array([-math.tan(grid.omega0), 1.0]), np.array([1.0, -1.0 / math.tan(grid.omega1)])


@dataclass
class Coefficients:
    """Coefficient fields of the perturbed first-order problem.

    ``A`` and ``B`` broadcast to (n_t, n_theta, 2, 2); ``C`` is either
    ``None`` (base matrix) or a full field; ``alpha0`` and ``alpha1``
    broadcast to (n_t, 2).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray = None
    alpha0: np.ndarray = None
    alpha1: np.ndarray = None

    @classmethod
    def base(cls, grid):
        a0, a1 = alpha_hat(grid)
        return cls(A_HAT.copy(), B_HAT.copy(), None, a0, a1)


def _deviations(coeffs, grid):
    a0h, a1h = alpha_hat(grid)
    shape = (grid.n_t, grid.n_theta, 2, 2)
    dA = np.broadcast_to(np.asarray(coeffs.A, dtype=float) - A_HAT, shape)
    dB = np.broadcast_to(np.asarray(coeffs.B, dtype=float) - B_HAT, shape)
    dC = None if coeffs.C is None else np.broadcast_to(coeffs.C, shape) - c_hat(grid)
    a0 = a0h if coeffs.alpha0 is None else coeffs.alpha0
    a1 = a1h if coeffs.alpha1 is None else coeffs.alpha1
    d0 = np.broadcast_to(np.asarray(a0, dtype=float) - a0h, (grid.n_t, 2))
    d1 = np.broadcast_to(np.asarray(a1, dtype=float) - a1h, (grid.n_t, 2))
    return dA, dB, dC, d0, d1


def perturbation_size(coeffs, grid):
    """Distance of the coefficients from the base problem in the gate norm."""
    dA, dB, dC, d0, d1 = _deviations(coeffs, grid)
    eps = max(float(np.max(np.abs(dA))), float(np.max(np.abs(dB))))
    if dC is not None:
        eps += float(np.max(np.exp(grid.t)[:, None, None, None] * np.abs(dC)))
    for d in (d0, d1):
        eps += max(line_sup(d[:, i], grid.t, 0.0, m=1) for i in range(2))
    return eps


def apply_perturbation(coeffs, u, v, grid, solver=None):
    """(T - T_hat) U as a ``LinearData`` triple."""
    dA, dB, dC, d0, d1 = _deviations(coeffs, grid)
    ux, uy = cartesian_gradient(u, grid, solver)
    vx, vy = cartesian_gradient(v, grid, solver)
    f1 = dA[..., 0, 0] * ux + dA[..., 0, 1] * vx + dB[..., 0, 0] * uy + dB[..., 0, 1] * vy
    f2 = dA[..., 1, 0] * ux + dA[..., 1, 1] * vx + dB[..., 1, 0] * uy + dB[..., 1, 1] * vy
    if dC is not None:
        f1 = f1 + dC[..., 0, 0] * u + dC[..., 0, 1] * v
        f2 = f2 + dC[..., 1, 0] * u + dC[..., 1, 1] * v
    g0 = d0[:, 0] * u[:, 0] + d0[:, 1] * v[:, 0]
    g1 = d1[:, 0] * u[:, -1] + d1[:, 1] * v[:, -1]
    return LinearData(f1, f2, g0, g1)


@dataclass
class PerturbedSolution:
    solution: FirstOrderSolution
    iterations: int
    rate: float
    rates: list = field(default_factory=list)
    residual: float = 0.0
    eps_hat: float = 0.0

    @property
    def u(self):
        return self.solution.u

    @property
    def v(self):
        return self.solution.v


def solve_perturbed(coeffs, data, grid, tol=1e-9, max_iter=60, rate_cap=0.95,
                    initial=None, decay_tol=DECAY_TOL, backend=None, q=Q_DEFAULT):
    """Fixed point U <- S_hat(data - (T - T_hat) U) around the base solver.

    Stops once successive differences fall below ``tol`` in the
    W^{1,q}_{(0)} norm. The observed ratio of successive differences is
    monitored; a ratio at or above ``rate_cap`` on two consecutive steps, a
    ratio above 1.5 at any step, or hitting ``max_iter`` raises
    ``NonContractionError``. ``residual`` is the relative fixed-point defect
    of the returned iterate.
    """
    solver = get_solver(grid, backend)
    eps_hat = perturbation_size(coeffs, grid)
    et = np.exp(grid.t)[:, None]
    for name, arr in (("f1", et * data.f1), ("f2", et * data.f2), ("g0", data.g0), ("g1", data.g1)):
        check_decay(arr, name, decay_tol)
    # corrected data inherit the tails of the iterates; only gross growth is rejected
    inner_tol = max(decay_tol, INNER_DECAY_TOL)
    if initial is None:
        sol = solve_first_order(data, grid, inner_tol, backend)
    else:
        corr = apply_perturbation(coeffs, initial[0], initial[1], grid, solver)
        sol = solve_first_order(data - corr, grid, inner_tol, backend)
    diffs = []
    rates = []
    high = 0
    for it in range(1, max_iter + 1):
        corr = apply_perturbation(coeffs, sol.u, sol.v, grid, solver)
        try:
            new = solve_first_order(data - corr, grid, inner_tol, backend)
        except TruncationError as exc:
            # growing tails are the first visible sign of divergence
            raise NonContractionError(
                "perturbed iterates lost decay", eps_hat=eps_hat, iteration=it, **exc.diagnostics
            ) from exc
        d = pair_norm(new.u - sol.u, new.v - sol.v, grid, q)
        if diffs and diffs[-1] > 0:
            r = d / diffs[-1]
            rates.append(r)
            high = high + 1 if r >= rate_cap else 0
            if high >= 2 or r > 1.5:
                raise NonContractionError(
                    "perturbed iteration is not contracting", rate=r, eps_hat=eps_hat, iteration=it
                )
        diffs.append(d)
        sol = new
        if d < tol * max(1.0, pair_norm(sol.u, sol.v, grid, q)) and (it >= 2 or d == 0.0):
            scale = max(pair_norm(sol.u, sol.v, grid, q), 1e-300)
            rate = rates[-1] if rates else 0.0
            return PerturbedSolution(sol, it, rate, rates, d / scale, eps_hat)
    raise NonContractionError("perturbed iteration hit the iteration cap", iterations=max_iter, eps_hat=eps_hat)


def solve_summary(sol, data, rate=0.0, q=Q_DEFAULT):
    """JSON-ready diagnostic summary of a first-order solve."""
    return {
        "residual_interior": float(sol.residual_interior),
        "residual_bc0": float(sol.residual_bc0),
        "residual_bc1": float(sol.residual_bc1),
        "stability_ratio": float(stability_ratio(sol, data, q)),
        "modes_solved": int(sol.potential.modes_solved),
        "rate": float(rate),
    }
