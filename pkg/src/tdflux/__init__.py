"""Scalar conservation laws ``u_t + (v(t) g(u))_x = 0`` on a segment or a half line.

Lax-Friedrichs finite volumes with Godunov boundary fluxes, exact Riemann
oracles, checks against the a priori estimates, and a traffic-light
application.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import DomainError, InfeasibleInflowError, NumericalError, OracleValidityError, StepSizeError
from .flux import FluxModel, LWRFlux, MollifiedSpeed, QuadraticFlux, SpeedProfile, gamma, gamma_inverse, mollify_speed
from .ibvp import IBVPProblem, PiecewiseConstantFn, hull, tv_functional, tv_functional_segment
from .solver import GridSpec, SolutionField, SolverConfig, solve, solve_via_gamma

__all__ = [
    "BACKEND",
    "DomainError",
    "FluxModel",
    "GridSpec",
    "IBVPProblem",
    "InfeasibleInflowError",
    "LWRFlux",
    "MollifiedSpeed",
    "NumericalError",
    "OracleValidityError",
    "PiecewiseConstantFn",
    "QuadraticFlux",
    "SolutionField",
    "SolverConfig",
    "SpeedProfile",
    "StepSizeError",
    "gamma",
    "gamma_inverse",
    "hull",
    "mollify_speed",
    "solve",
    "solve_via_gamma",
    "tv_functional",
    "tv_functional_segment",
]
