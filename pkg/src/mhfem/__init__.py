"""Hybrid (Lagrange multiplier) finite elements for moving-habitat models.

The habitat ``Omega0`` and its surroundings ``Omega1`` carry separate P1
spaces; the proportional density jump ``w0 = kappa w1`` across the interface
is imposed weakly through a P1 multiplier, and the reaction-diffusion
system is advanced with IMEX Euler steps in a frame that moves with the
habitat.
"""
from ._kernels import BACKEND
from .errors import (ConfigError, DivergenceError, EvalError, GeometryError, HorizonError,
                     MeshTopologyError, MhfemError, ParseError, SolveError)
from .fespace import build_spaces, interpolate, interpolate_pieces
from .mesh import (Marker, Mesh, check_invariants, extract_interface_traces, gen_disk_bidomain,
                   gen_rect_bidomain, gen_strip_bidomain, mesh_quality)
from .model import AleMap, ModelParams, kappa, robin_from_far_side
from .oracle1d import solve_1d_steady
from .saddle import BlockSaddleSystem, SaddleSolver
from .stepper import Simulation, StepperConfig

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AleMap", "BlockSaddleSystem", "ConfigError", "DivergenceError", "EvalError",
    "GeometryError", "HorizonError", "Marker", "Mesh", "MeshTopologyError", "MhfemError",
    "ModelParams", "ParseError", "SaddleSolver", "Simulation", "SolveError", "StepperConfig",
    "build_spaces", "check_invariants", "extract_interface_traces", "gen_disk_bidomain",
    "gen_rect_bidomain", "gen_strip_bidomain", "interpolate", "interpolate_pieces", "kappa",
    "mesh_quality", "robin_from_far_side", "solve_1d_steady",
]
