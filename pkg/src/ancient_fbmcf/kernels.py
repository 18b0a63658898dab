"""Kernel selection: compiled extension if importable, numpy fallback otherwise.

Set ``ANCIENT_FBMCF_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py as python_impl

compiled_impl = None
if not os.environ.get("ANCIENT_FBMCF_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_impl
    except ImportError:  # extension not built
        compiled_impl = None

impl = compiled_impl if compiled_impl is not None else python_impl

IMPLEMENTATION = impl.IMPLEMENTATION
shoot_residuals = impl.shoot_residuals
heat_advance = impl.heat_advance
flow_advance = impl.flow_advance
closure_height = python_impl.closure_height
boundary_velocity = python_impl.boundary_velocity
rk4_log_radial = python_impl.rk4_log_radial

RUNNING = python_impl.RUNNING
HIT_STOP_TIME = python_impl.HIT_STOP_TIME
HIT_STOP_HEIGHT = python_impl.HIT_STOP_HEIGHT
HIT_MIN_RADIUS = python_impl.HIT_MIN_RADIUS
LOST_MONOTONICITY = python_impl.LOST_MONOTONICITY
LEFT_BALL = python_impl.LEFT_BALL
