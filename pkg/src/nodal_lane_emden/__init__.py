"""Sign-changing solutions of the critical Lane-Emden system via its
fourth-order reduction Lap(|Lap u|^{q'-2} Lap u) = |u|^{p-2} u."""
from .exponents import Exponents, conjugate, hyperbola_complete, special_case
from .discretize import Field, Grid, build_grid, load_field, save_field
from .functional import EnergyReport, energy, gradient, nehari_scale
from .symmetry import SymmetrySpec, symmetrize
from .solver import SolveConfig, SolveResult, ground_state_radial, minimize_equivariant
from .inversion import SystemPair, second_component, system_residual
from .kelvin import KelvinReport, kelvin_constant, kelvin_transform

__version__ = "0.1.0"

__all__ = [
    "Exponents", "conjugate", "hyperbola_complete", "special_case",
    "Field", "Grid", "build_grid", "load_field", "save_field",
    "EnergyReport", "energy", "gradient", "nehari_scale",
    "SymmetrySpec", "symmetrize",
    "SolveConfig", "SolveResult", "ground_state_radial", "minimize_equivariant",
    "SystemPair", "second_component", "system_residual",
    "KelvinReport", "kelvin_constant", "kelvin_transform",
    "__version__",
]
