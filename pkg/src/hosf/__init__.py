"""Pseudospectral dynamics for higher-order Schrodinger equations and
Hartree-Fock orbital systems on periodic grids."""

__version__ = "0.1.0"

from hosf.coefficients import PhysicalConstants, alpha_coeff, make_operator
from hosf.grid import Field, GridSpec, OrbitalSet
from hosf.potentials import PotentialSpec
from hosf.propagation import EvolutionProblem, IntegratorConfig, run_simulation

__all__ = [
    "EvolutionProblem",
    "Field",
    "GridSpec",
    "IntegratorConfig",
    "OrbitalSet",
    "PhysicalConstants",
    "PotentialSpec",
    "alpha_coeff",
    "make_operator",
    "run_simulation",
]
