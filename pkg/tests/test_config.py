import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conoshock.config import CaseConfig, emit_case, parse_case, parse_text
from conoshock.errors import ConfigError

CASES = Path(__file__).resolve().parent.parent / "cases"


@pytest.mark.parametrize("name", ["minimal.ini", "sweep_epsilon.ini", "perturbed.canonical.ini"])
def test_canonical_files_round_trip(name):
    text = (CASES / name).read_text()
    assert emit_case(parse_text(text)) == text


def test_perturbed_golden():
    case = parse_case(CASES / "perturbed.ini")
    assert emit_case(case) == (CASES / "perturbed.canonical.ini").read_text()
    assert case.nu_value == pytest.approx(0.01, rel=1e-15)
    assert case.upstream_bumps == ((1.0, 0.5, 0.3, 0.8, 0.0),)
    assert parse_text(emit_case(case)) == case


def test_defaults_and_gas():
    case = parse_case(CASES / "minimal.ini")
    assert case.n_t == 1024 and case.n_theta == 129 and case.epsilon == 0.0
    gas = case.gas()
    assert gas.gamma == 2.0 and gas.nu == 0.01


def test_consistent_pair_accepted():
    case = parse_text("[gas]\nnu = 0.01\nmach_inf = 10\nb = 1\n")
    assert case.nu == 0.01


@pytest.mark.parametrize(
    "text,line",
    [
        ("[gas]\nnu = 0.01\nb = 1\nmach_inf = 5\n", 4),
        ("[gas]\nnu = 0.01\nb = 1\nfoo = 2\n", 4),
        ("[gas]\nnu = 0.01\nb = 1\n\n[bogus]\nx = 1\n", 5),
        ("[gas]\nnu = 0.01\nnu = 0.02\nb = 1\n", 3),
        ("[gas]\nnu = 0.01\nb = 1\n[grid]\nn_t = 1000\n", 5),
        ("[gas]\nnu = 0.01\nb = 1\ngamma = 2.5\n", 4),
        ("[gas]\nnu = 0.01\nb = 1\n[perturbation]\nepsilon = abc\n", 5),
        ("[gas]\nnu = 0.01\nb = 1\nomega0 = 0.3\n", 4),
        ("[gas]\nnu = 0.01\nb = 1\n[cone]\nbumps = 1, 0\n", 5),
        ("[gas]\nb = 1\n", 1),
    ],
)
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    assert info.value.diagnostics.get("line") == line


@pytest.mark.parametrize(
    "kwargs",
    [
        {"nu": -0.1, "b": 1.0},
        {"nu": 0.01},
        {"nu": 0.01, "b": 1.0, "epsilon": -1e-3},
        {"nu": 0.01, "b": 1.0, "q": 2.0},
        {"nu": 0.01, "b": 1.0, "rate_cap": 1.0},
        {"nu": 0.01, "b": 1.0, "t_min": 1.0, "t_max": 0.0},
        {"nu": 0.01, "b": 1.0, "sweep_parameter": "epsilon"},
        {"nu": 0.01, "b": 1.0, "sweep_parameter": "n_t", "sweep_values": (1.0,)},
        {"nu": 0.01, "omega0": 2.0},
    ],
)
def test_validation(kwargs):
    with pytest.raises(ConfigError):
        CaseConfig(**kwargs)


def test_with_value_drops_the_partner():
    case = parse_case(CASES / "perturbed.ini")
    assert case.with_value("nu", 0.005).mach_inf is None
    assert case.with_value("mach_inf", 20.0).nu_value == pytest.approx(0.0025)
    by_angle = CaseConfig(nu=0.01, omega0=0.5).with_value("b", 1.0)
    assert by_angle.omega0 is None and by_angle.b == 1.0


def test_with_value_rejects_invalid():
    with pytest.raises(ConfigError):
        CaseConfig(nu=0.01, b=1.0).with_value("epsilon", -1.0)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(1.05, 2.0), st.floats(1e-4, 0.05), st.floats(0.1, 3.0),
    st.floats(0.0, 1e-2), st.sampled_from([256, 512, 1024]),
)
def test_emit_parse_round_trip(gamma, nu, b, eps, n_t):
    case = CaseConfig(gamma=gamma, nu=nu, b=b, epsilon=eps, n_t=n_t)
    text = emit_case(case)
    back = parse_text(text)
    assert back == case
    assert emit_case(back) == text
    assert math.isfinite(back.nu_value)
