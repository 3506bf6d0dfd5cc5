"""Dynamics of a triangular (Steiner) drop model and a spherical-cap comparison."""

from .equilibria import (
    Branch,
    Equilibrium,
    Stability,
    bifurcation_scan,
    classify,
    critical_alpha_star,
    eigenvalues,
    primary_equilibrium,
    secondary_equilibrium,
)
from .errors import (
    CoincidentRootsError,
    DomainError,
    NumericalError,
    SingularManifoldError,
    SingularStateError,
    SteinerError,
)
from .model import Params, State, apply_G1, apply_G2, apply_S, q_of_alpha, rhs

__all__ = [
    "Branch",
    "CoincidentRootsError",
    "DomainError",
    "Equilibrium",
    "NumericalError",
    "Params",
    "SingularManifoldError",
    "SingularStateError",
    "Stability",
    "State",
    "SteinerError",
    "apply_G1",
    "apply_G2",
    "apply_S",
    "bifurcation_scan",
    "classify",
    "critical_alpha_star",
    "eigenvalues",
    "primary_equilibrium",
    "q_of_alpha",
    "rhs",
    "secondary_equilibrium",
]

__version__ = "0.1.0"
