"""Polytropic gas closure in scaled variables (upstream speed = 1).

Pressure law p = rho**gamma / gamma, sound speed c = rho**((gamma-1)/2),
and Bernoulli's law fixing the density as a function of the speed.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CavitationError, DomainError

CAVITATION_EPS = 1e-12


def _check_gamma(gamma):
    if not (1.0 < gamma <= 2.0):
        raise DomainError(f"gamma must lie in (1, 2], got {gamma!r}", gamma=gamma)


def bernoulli_constant(rho_inf, gamma):
    """Bernoulli constant 1/2 + rho_inf**(gamma-1)/(gamma-1) of the scaled flow."""
    if not rho_inf > 0:
        raise DomainError(f"rho_inf must be positive, got {rho_inf!r}")
    if not gamma > 1:
        raise DomainError(f"gamma must exceed 1, got {gamma!r}")
    return 0.5 + rho_inf ** (gamma - 1.0) / (gamma - 1.0)


@dataclass(frozen=True)
class GasParameters:
    gamma: float
    rho_inf: float
    nu: float = field(init=False)
    kappa_inf: float = field(init=False)
    kappa_tilde: float = field(init=False)

    def __post_init__(self):
        _check_gamma(self.gamma)
        if not self.rho_inf > 0:
            raise DomainError(f"rho_inf must be positive, got {self.rho_inf!r}")
        object.__setattr__(self, "nu", self.rho_inf ** (self.gamma - 1.0))
        kappa = bernoulli_constant(self.rho_inf, self.gamma)
        object.__setattr__(self, "kappa_inf", kappa)
        object.__setattr__(self, "kappa_tilde", (self.gamma - 1.0) * kappa)

    @classmethod
    def from_nu(cls, gamma, nu):
        _check_gamma(gamma)
        if not nu > 0:
            raise DomainError(f"nu must be positive, got {nu!r}")
        return cls(gamma, nu ** (1.0 / (gamma - 1.0)))

    @classmethod
    def from_mach(cls, gamma, mach_inf):
        if not mach_inf > 0:
            raise DomainError(f"upstream Mach number must be positive, got {mach_inf!r}")
        return cls.from_nu(gamma, 1.0 / mach_inf**2)

    @property
    def mach_inf(self):
        return self.nu ** -0.5

    @property
    def q_max_sq(self):
        """Squared speed at which Bernoulli's law gives zero density."""
        return 2.0 * self.kappa_tilde / (self.gamma - 1.0)

    def density(self, q):
        return density_from_speed(q, self)


def density_from_speed(q, params):
    """Bernoulli density (kappa_tilde - (gamma-1) q^2 / 2)**(1/(gamma-1)).

    Accepts scalars or arrays. Raises ``CavitationError`` where the base of
    the power drops below ``CAVITATION_EPS``.
    """
    g1 = params.gamma - 1.0
    arg = params.kappa_tilde - 0.5 * g1 * np.square(q)
    if np.any(np.asarray(arg) <= CAVITATION_EPS):
        raise CavitationError("speed exceeds the cavitation limit", q=q)
    out = arg ** (1.0 / g1)
    return float(out) if np.ndim(out) == 0 else out


def density_uv(u, v, params):
    return density_from_speed(np.hypot(u, v), params)


@dataclass(frozen=True)
class FlowState:
    u: float
    v: float
    rho: float

    @property
    def q(self):
        return float(np.hypot(self.u, self.v))

    def sound_speed(self, gamma):
        return self.rho ** (0.5 * (gamma - 1.0))

    def mach(self, gamma):
        return mach(self, gamma)

    def is_bernoulli_consistent(self, params, rtol=1e-12):
        return abs(self.rho - density_from_speed(self.q, params)) <= rtol * abs(self.rho)

    def as_tuple(self):
        return (self.u, self.v, self.rho)


def bernoulli_state(u, v, params):
    return FlowState(u, v, density_from_speed(np.hypot(u, v), params))


def mach(state, gamma):
    """Local Mach number q / rho**((gamma-1)/2)."""
    if not state.rho > 0:
        raise DomainError("density must be positive to form a Mach number")
    return state.q / state.rho ** (0.5 * (gamma - 1.0))


def scale_state(u, v, rho, u_inf, gamma):
    """Rescale a raw state by the upstream speed; the Mach number is unchanged."""
    if u_inf == 0:
        raise DomainError("reference speed u_inf must be nonzero")
    return FlowState(u / u_inf, v / u_inf, rho / abs(u_inf) ** (2.0 / (gamma - 1.0)))


def potential_residual(u, v, rho, x, y):
    """Finite-difference residuals of the axisymmetric potential equations.

    ``u, v, rho`` are sampled on the tensor grid ``x`` (axis 0) by ``y``
    (axis 1). Returns the mass and irrotationality residuals.
    """
    dx_ru = np.gradient(rho * u, x, axis=0, edge_order=2)
    dy_rv = np.gradient(rho * v, y, axis=1, edge_order=2)
    mass = dx_ru + dy_rv + rho * v / y[None, :]
    curl = np.gradient(v, x, axis=0, edge_order=2) - np.gradient(u, y, axis=1, edge_order=2)
    return mass, curl
