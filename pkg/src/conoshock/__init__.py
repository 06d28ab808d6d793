"""Conical transonic-shock workbench.

Shock polar and self-similar background for a straight cone, a log-polar
spectral solver for the singular sector problems, and the double fixed-point
iteration for perturbed cones and upstream flows.
"""

__version__ = "0.1.0"

from .background import SelfSimilarSolution, solve_background, verify_background
from .config import CaseConfig, emit_case, parse_case, parse_text
from .errors import ConoshockError
from .gas import FlowState, GasParameters, density_from_speed, mach
from .iteration import solve_case
from .polar import polar_point, post_shock_state, solve_tau
from .spaces import StripGrid, WeightedField

__all__ = [
    "CaseConfig",
    "ConoshockError",
    "FlowState",
    "GasParameters",
    "SelfSimilarSolution",
    "StripGrid",
    "WeightedField",
    "density_from_speed",
    "emit_case",
    "mach",
    "parse_case",
    "parse_text",
    "polar_point",
    "post_shock_state",
    "solve_background",
    "solve_case",
    "solve_tau",
    "verify_background",
]
