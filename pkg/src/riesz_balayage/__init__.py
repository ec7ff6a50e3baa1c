"""Inner balayage, equilibrium measures and Gauss minimisers for Riesz kernels on panel sets."""

__version__ = "0.1.0"

from .geometry import SetSpec, DiscreteSet, discretize, exhaustion, join, restrict
from .kernel import KernelSpec, assemble_matrix, potential
from .measure import DiscreteMeasure, PointCharge
from .balayage import sweep, verify_characterizations
from .equilibrium import equilibrium_measure, capacity
from .gauss import solve_gauss

__all__ = [
    "SetSpec", "DiscreteSet", "discretize", "exhaustion", "join", "restrict",
    "KernelSpec", "assemble_matrix", "potential", "DiscreteMeasure", "PointCharge",
    "sweep", "verify_characterizations", "equilibrium_measure", "capacity", "solve_gauss",
]
