"""Shallow-water forward solvers and bathymetry reconstruction by per-step
optimal control with Tikhonov, TVD, and L1-dual regularization."""

__version__ = "0.1.0"

from .fem import FemOperators, assemble_dg_gradient, assemble_operators
from .forward import COMPILED, FlowState, ForwardConfig
from .inverse import RegWeights
from .mesh import Mesh, build_structured_mesh
from .scenarios import ScenarioConfig, make_scenario

__all__ = [
    "__version__", "COMPILED", "Mesh", "build_structured_mesh",
    "FemOperators", "assemble_operators", "assemble_dg_gradient",
    "FlowState", "ForwardConfig", "RegWeights",
    "ScenarioConfig", "make_scenario",
]
