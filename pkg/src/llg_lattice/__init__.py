"""Lattice simulator and verification suite for semi-discrete Landau-Lifshitz-Gilbert
and harmonic map heat flows into closed surfaces in R^3."""
from .dynamics import (EnergyTrace, SolverConfig, State, discrete_energy, evolve,
                       rhs_heatflow, rhs_llg)
from .grid import Boundary, GridMismatchError, GridSpec, ScalarField, VectorField
from .target import Ellipsoid, Torus, UnitSphere, surface_from_string

__version__ = "0.1.0"

__all__ = [
    "Boundary", "GridMismatchError", "GridSpec", "ScalarField", "VectorField",
    "Ellipsoid", "Torus", "UnitSphere", "surface_from_string",
    "EnergyTrace", "SolverConfig", "State", "discrete_energy", "evolve",
    "rhs_heatflow", "rhs_llg",
]
