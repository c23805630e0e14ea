"""Lattice Ginzburg-Landau vortex toolkit: gauge-covariant energies, Lorentz-space norms,
elliptic solves, vortex balls, minimization, renormalized energies and a check harness."""

from .grid import Domain, GLParams, VectorField, full_energy, free_energy
from .elliptic import solve_xi0, solve_green, meissner_potential
from .minimizer import plant_configuration, minimize_G, radial_profile
from .vortex import degree, find_zeros, initial_balls, grow_and_merge

__version__ = "0.1.0"

__all__ = ["Domain", "GLParams", "VectorField", "full_energy", "free_energy", "solve_xi0",
           "solve_green", "meissner_potential", "plant_configuration", "minimize_G",
           "radial_profile", "degree", "find_zeros", "initial_balls", "grow_and_merge"]
