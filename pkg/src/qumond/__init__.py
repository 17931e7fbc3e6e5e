"""QUMOND potentials, the singular-integral Helmholtz projector and
regularity diagnostics on uniform 3-D grids and radial meshes."""

from .grid import RadialProfile, ScalarGrid, VectorGrid, integrate, lq_norm
from .helmholtz import Decomposition, decompose, project_irrotational
from .mond import InterpolationFunction, lambda_deep_mond, lambda_simple, milgrom_potential, mond_field, phantom_field
from .newtonian import NewtonianSolution, hessian, interaction_energy, solve_field, solve_potential
from .singular import ConvergenceError, EpsilonSchedule, KernelIndex, omega, t_ij, t_ij_eps
from .spherical import SphericalModel

__version__ = "0.1.0"

__all__ = [
    "ScalarGrid",
    "VectorGrid",
    "RadialProfile",
    "integrate",
    "lq_norm",
    "NewtonianSolution",
    "solve_potential",
    "solve_field",
    "hessian",
    "interaction_energy",
    "KernelIndex",
    "EpsilonSchedule",
    "ConvergenceError",
    "omega",
    "t_ij",
    "t_ij_eps",
    "Decomposition",
    "decompose",
    "project_irrotational",
    "InterpolationFunction",
    "lambda_deep_mond",
    "lambda_simple",
    "phantom_field",
    "mond_field",
    "milgrom_potential",
    "SphericalModel",
]
