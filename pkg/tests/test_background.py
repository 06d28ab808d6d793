import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conoshock.background import (
    background_at_theta,
    background_profile,
    background_rhs,
    solve_background,
    solve_background_for_cone,
    verify_background,
)
from conoshock.errors import DegeneracyError, DomainError, NoConeError
from conoshock.gas import GasParameters, density_from_speed
from conoshock.polar import post_shock_state, solve_tau

SWEEP = [(g, b, nu) for g in (1.5, 2.0) for b in (0.5, 1.0, 2.0) for nu in (1e-4, 1e-3, 1e-2)]

# reference run with step h/16 (32000 steps) of the minimal case; an
# adaptive DOP853 integration at rtol 1e-14 agrees to 5e-16
KAPPA_REF = 0.4911703969379663
TAU_REF = 0.0204423182774041


def _reference_ivp(params, b):
    """Adaptive high-order integration of the conical-flow system."""
    tau = solve_tau(params.nu, params.gamma, b)
    st = post_shock_state(tau, b, params.rho_inf)

    def rhs(s, y):
        u, v = y
        c2 = params.kappa_tilde - 0.5 * (params.gamma - 1) * (u * u + v * v)
        D = (1 - u * u / c2) + 2 * u * v * s / c2 + (1 - v * v / c2) * s * s
        return [-v / D, s * v / D]

    def slip(s, y):
        return y[0] - s * y[1]

    slip.terminal = True
    return solve_ivp(rhs, (tau, 1.0 / b), [st.u, st.v], method="DOP853", rtol=2.3e-14, atol=1e-16,
                     events=slip, dense_output=True)


def test_rhs_examples(params):
    assert background_rhs(0.3, 0.2, 0.0, params) == (0.0, 0.0)
    tau = solve_tau(params.nu, params.gamma, 1.0)
    st = post_shock_state(tau, 1.0, params.rho_inf)
    du, dv = background_rhs(tau, st.u, st.v, params)
    assert du < 0 < dv


def test_rhs_sonic_guard(params):
    # at sigma = 0, D = 1 - u^2/c^2 vanishes for u = c: u^2 = kappa_tilde / (1 + (gamma-1)/2)
    u = math.sqrt(params.kappa_tilde / (1 + 0.5 * (params.gamma - 1)))
    assert density_from_speed(u, params) ** (params.gamma - 1) == pytest.approx(u * u)
    with pytest.raises(DegeneracyError):
        background_rhs(0.0, u, 0.1, params)


def test_slip_positive_at_start(params):
    for b in (0.5, 1.0, 2.0):
        tau = solve_tau(params.nu, 2.0, b)
        st = post_shock_state(tau, b, params.rho_inf)
        assert st.u - tau * st.v == pytest.approx(st.u * (1 - tau * b), rel=1e-14)
        assert st.u - tau * st.v > 0


def test_minimal_case_reference(background):
    assert TAU_REF < background.kappa < 1.0
    assert background.tau == pytest.approx(TAU_REF, rel=1e-14)
    assert background.kappa == pytest.approx(KAPPA_REF, rel=1e-13)
    ivp = _reference_ivp(background.params, 1.0)
    assert ivp.t_events[0][0] == pytest.approx(KAPPA_REF, rel=1e-13)


@pytest.mark.parametrize("gamma, b, nu", SWEEP)
def test_sweep_checks_and_order(gamma, b, nu):
    p = GasParameters.from_nu(gamma, nu)
    sol = solve_background(p, b)
    report = verify_background(sol)
    assert report["all"], report
    ks = [solve_background(p, b, n_steps=n).kappa for n in (20, 40, 80)]
    order = math.log2(abs(ks[0] - ks[1]) / abs(ks[1] - ks[2]))
    assert 3.5 <= order <= 4.5
    # Richardson constant C = (kappa_h - kappa_{h/2}) / h^4 is O(1) across the sweep
    h = (1 / b - sol.tau) / 40
    assert abs(ks[1] - ks[2]) / h**4 < 10.0


def test_invariants(background):
    s = background
    assert np.all(np.diff(s.u0) < 0) and np.all(np.diff(s.v0) > 0)
    assert s.b == pytest.approx(s.v0[0] / s.u0[0])
    assert s.v0[0] / s.u0[0] < s.v0[-1] / s.u0[-1] == pytest.approx(1 / s.kappa, rel=1e-10)
    assert s.slip_residual < 1e-10
    assert np.all(s.mach0 < 1)
    assert s.omega0 == pytest.approx(math.atan2(1, s.kappa))
    assert s.omega1 == pytest.approx(math.atan2(1, s.tau))


def test_at_theta_endpoints(background):
    s = background
    st = background_at_theta(s, s.omega1)
    assert (st.u, st.v) == pytest.approx((s.u0[0], s.v0[0]), rel=1e-14)
    cone = background_at_theta(s, s.omega0)
    assert cone.v / cone.u == pytest.approx(math.tan(s.omega0), abs=1e-9)
    assert cone.rho == pytest.approx(density_from_speed(cone.q, s.params))
    with pytest.raises(DomainError):
        background_at_theta(s, s.omega0 - 1e-3)
    with pytest.raises(DomainError):
        background_at_theta(s, s.omega1 + 1e-3)


def test_dense_output_against_reintegration(params):
    ivp = _reference_ivp(params, 1.0)
    errs = []
    for n in (50, 100, 200):
        s = solve_background(params, 1.0, n_steps=n)
        # midpoints of the integration cells carry the interpolation error
        mids = 0.5 * (s.sigma_grid[1:-2] + s.sigma_grid[2:-1])
        u, v = s.evaluate(mids)
        ref = ivp.sol(mids)
        errs.append(max(np.max(np.abs(u - ref[0])), np.max(np.abs(v - ref[1]))))
    assert errs[-1] < 1e-9
    assert math.log2(errs[0] / errs[1]) > 3.5 and math.log2(errs[1] / errs[2]) > 3.5


def test_profile_derivatives_consistent(background):
    th = np.linspace(background.omega0 + 1e-3, background.omega1 - 1e-3, 7)
    u, v, du, dv = background_profile(background, th)
    h = 1e-6
    up, vp, _, _ = background_profile(background, th + h)
    um, vm, _, _ = background_profile(background, th - h)
    assert np.max(np.abs((up - um) / (2 * h) - du)) < 1e-7
    assert np.max(np.abs((vp - vm) / (2 * h) - dv)) < 1e-7


def test_negative_control(background):
    u = background.u0.copy()
    u[[3, 4]] = u[[4, 3]]
    report = verify_background(replace(background, u0=u))
    assert not report["u0_decreasing"] and not report["all"]


@pytest.mark.parametrize("gamma, b", [(1.5, 0.5), (1.5, 2.0), (2.0, 0.5), (2.0, 1.0)])
def test_near_nu_cap(gamma, b):
    # close to the default cap nu0 = 0.05 the post-shock state is still subsonic
    sol = solve_background(GasParameters.from_nu(gamma, 0.049), b)
    report = verify_background(sol)
    assert sol.mach0[0] < 1 and report["all"]


def test_inverse_cone_angle(params, background):
    sol = solve_background_for_cone(params, background.omega0)
    assert sol.b == pytest.approx(1.0, abs=1e-9)
    assert sol.omega0 == pytest.approx(background.omega0, abs=1e-12)
    for omega0 in (0.01, 1.4):  # too slender for the b bracket; too blunt for an attached shock
        with pytest.raises(NoConeError):
            solve_background_for_cone(params, omega0)
