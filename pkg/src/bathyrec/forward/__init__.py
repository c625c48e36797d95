"""Forward shallow-water solvers (ALF low-order and MCL limited high-order)."""

from .kernels import COMPILED
from .solver import (alf_rhs, apply_boundary, cfl_number, compute_dij,
                     heun_step, mcl_rhs, rhs)
from .state import GRAVITY, FlowState, ForwardConfig, make_state

__all__ = [
    "COMPILED", "GRAVITY", "FlowState", "ForwardConfig", "make_state",
    "compute_dij", "alf_rhs", "mcl_rhs", "rhs", "apply_boundary",
    "heun_step", "cfl_number",
]
