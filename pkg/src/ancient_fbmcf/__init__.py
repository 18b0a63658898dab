"""Numerics for convex ancient free-boundary mean curvature flow in the unit ball."""
from .errors import (CFLViolation, ConfigError, InsufficientData, InvariantBreach,
                     NoConvergenceError, NoOverlap, OutOfRangeError)
from .kernels import IMPLEMENTATION
from .spectrum import GroundState, phi0_eval, phi_ratios, solve_lambda0

__version__ = "0.1.0"

__all__ = [
    "CFLViolation", "ConfigError", "GroundState", "IMPLEMENTATION", "InsufficientData",
    "InvariantBreach", "NoConvergenceError", "NoOverlap", "OutOfRangeError",
    "phi0_eval", "phi_ratios", "solve_lambda0",
]
