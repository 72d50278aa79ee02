"""Linearized kinetic equation of a Bose gas near a condensed equilibrium.

Kernels, a conservative discrete generator, time integration, observables,
the physical-time map, the Mellin symbol layer and a nonlinear condensate
variant. See the README for the command line interface.
"""

from .errors import (BecLinearError, ConsistencyError, ContractError, DomainError,
                     InvariantViolation, NumericalFailure, PoleError, RangeError)
from .kernels import Convention, EquilibriumWeights, equilibrium_weights
from .operators import GeneratorMatrix, RadialGrid, StateField, assemble_generator, make_grid

__all__ = [
    "BecLinearError", "ConsistencyError", "ContractError", "DomainError", "InvariantViolation",
    "NumericalFailure", "PoleError", "RangeError", "Convention", "EquilibriumWeights",
    "equilibrium_weights", "GeneratorMatrix", "RadialGrid", "StateField",
    "assemble_generator", "make_grid",
]
