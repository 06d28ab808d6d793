import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conoshock.errors import CavitationError, DomainError
from conoshock.gas import (
    FlowState,
    GasParameters,
    bernoulli_constant,
    density_from_speed,
    mach,
    potential_residual,
    scale_state,
)

gammas = st.floats(1.05, 2.0)
densities = st.floats(1e-3, 2.0)


def test_bernoulli_constant_values():
    assert bernoulli_constant(1.0, 2.0) == 1.5
    assert bernoulli_constant(0.01, 2.0) == pytest.approx(0.51, abs=1e-15)
    assert bernoulli_constant(1e-12, 1.5) == pytest.approx(0.5, abs=1e-5)


@pytest.mark.parametrize("rho, gamma", [(0.0, 2.0), (-1.0, 2.0), (1.0, 1.0), (1.0, 0.5)])
def test_bernoulli_constant_rejects(rho, gamma):
    with pytest.raises(DomainError):
        bernoulli_constant(rho, gamma)


def test_parameters_cross_checked():
    p = GasParameters.from_nu(2.0, 0.01)
    assert p.rho_inf == pytest.approx(0.01)
    assert p.mach_inf == pytest.approx(10.0)
    assert p.kappa_tilde == pytest.approx(p.kappa_inf)
    q = GasParameters.from_mach(1.4, 5.0)
    assert q.nu == pytest.approx(0.04, rel=1e-14)
    assert q.rho_inf ** (q.gamma - 1) == pytest.approx(q.nu, rel=1e-14)


@pytest.mark.parametrize("gamma", [1.0, 0.9, 2.5])
def test_gamma_range(gamma):
    with pytest.raises(DomainError):
        GasParameters(gamma, 0.1)


def test_density_special_speeds():
    p = GasParameters.from_nu(1.5, 0.02)
    assert density_from_speed(0.0, p) == pytest.approx(p.kappa_tilde ** (1 / 0.5))
    assert density_from_speed(1.0, p) == pytest.approx(p.rho_inf, rel=1e-14)
    with pytest.raises(CavitationError):
        density_from_speed(math.sqrt(p.q_max_sq), p)
    with pytest.raises(CavitationError):
        density_from_speed(np.array([0.5, 2.0 * math.sqrt(p.q_max_sq)]), p)


@settings(max_examples=50, deadline=None)
@given(gammas, densities)
def test_density_recovers_upstream(gamma, rho):
    p = GasParameters(gamma, rho)
    assert density_from_speed(1.0, p) == pytest.approx(rho, rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(gammas, densities)
def test_density_strictly_decreasing(gamma, rho):
    p = GasParameters(gamma, rho)
    q = np.linspace(0.0, 0.999 * math.sqrt(p.q_max_sq), 1000)
    assert np.all(np.diff(density_from_speed(q, p)) < 0)


def test_mach_examples():
    assert mach(FlowState(1.0, 0.0, 0.1), 2.0) == pytest.approx(0.1**-0.5, rel=1e-14)
    c = FlowState(0.3, 0.4, 0.25)  # q = 0.5 = c at gamma = 2
    assert mach(c, 2.0) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        mach(FlowState(1.0, 0.0, 0.0), 2.0)


def test_scale_state_identity_and_zero():
    s = scale_state(0.3, 0.2, 0.7, 1.0, 1.4)
    assert s.as_tuple() == (0.3, 0.2, 0.7)
    with pytest.raises(DomainError):
        scale_state(0.3, 0.2, 0.7, 0.0, 1.4)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 5), st.floats(0.1, 10).map(lambda x: x), gammas,
)
def test_scaling_preserves_mach(u, v, rho, u_inf, gamma):
    raw = FlowState(u, v, rho)
    scaled = scale_state(u, v, rho, u_inf, gamma)
    assert mach(scaled, gamma) == pytest.approx(mach(raw, gamma), rel=1e-13, abs=1e-300)


def test_potential_residual_scaling_invariant():
    # uniform-in-x flow with a radial-like potential; the residual of the scaled
    # field equals the scaled residual up to the discretization error
    x = np.linspace(1.0, 2.0, 81)
    y = np.linspace(1.0, 2.0, 81)
    X, Y = np.meshgrid(x, y, indexing="ij")
    gamma, u_inf = 1.4, 3.0
    u, v = 0.3 + 0.1 * X * Y, 0.2 - 0.05 * Y**2
    rho = 1.0 + 0.1 * np.sin(X + Y)
    raw = potential_residual(u, v, rho, x, y)
    s = scale_state(u, v, rho, u_inf, gamma)
    scaled = potential_residual(s.u, s.v, s.rho, x, y)
    fac_mass = u_inf ** (1 + 2 / (gamma - 1))
    assert np.max(np.abs(scaled[0] * fac_mass - raw[0])) < 1e-12 * np.max(np.abs(raw[0]))
    assert np.max(np.abs(scaled[1] * u_inf - raw[1])) < 1e-12 * max(np.max(np.abs(raw[1])), 1.0)


def test_conical_flow_residual_survives_scaling(background):
    # the conical background solves the potential equations; its discrete
    # residual stays at truncation level before and after rescaling
    from conoshock.background import background_at_theta

    gamma, u_inf = background.params.gamma, 2.5
    errs = []
    for n in (21, 41):
        x = np.linspace(0.1, 0.3, n)
        y = np.linspace(1.0, 1.2, n)
        X, Y = np.meshgrid(x, y, indexing="ij")
        u, v, rho = background_at_theta(background, np.arctan2(Y, X))
        raw = FlowState(u * u_inf, v * u_inf, rho * u_inf ** (2 / (gamma - 1)))
        s = scale_state(raw.u, raw.v, raw.rho, u_inf, gamma)
        m_raw, c_raw = potential_residual(raw.u, raw.v, raw.rho, x, y)
        m_s, c_s = potential_residual(s.u, s.v, s.rho, x, y)
        scale_raw = np.max(np.abs(raw.rho * raw.u))
        scale_s = np.max(np.abs(s.rho * s.u))
        errs.append((np.max(np.abs(m_raw)) / scale_raw, np.max(np.abs(m_s)) / scale_s,
                     np.max(np.abs(c_raw)) / u_inf, np.max(np.abs(c_s))))
    for a, b in zip(errs[0], errs[1]):
        assert b < a / 3  # second-order decay
    assert errs[1][0] == pytest.approx(errs[1][1], rel=1e-8)
    assert errs[1][2] == pytest.approx(errs[1][3], rel=1e-8)
