"""Numerical laboratory for the 1-D Lagrangian Navier-Stokes/Allen-Cahn system."""

from .config import ExperimentConfig
from .errors import InsufficientHistory, NonConvergence, NoTwoRarefactionSolution, PositivityBreach
from .gas import GasModel, ThermoState, phi_convex
from .profile import SmoothingParams, WaveProfile
from .riemann import EndStates, RiemannData, riemann_eval, solve_intermediate

__version__ = "0.1.0"
