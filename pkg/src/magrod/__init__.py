"""Homoclinic chaos in the equilibria of a magnetic elastic rod.

Modules: :mod:`model` (Hamiltonian, first integral, vector field),
:mod:`analytic` (closed-form homoclinic orbits, equilibria, Melnikov
amplitude), :mod:`numerics` (integration, Newton, eigen-data, quadrature),
:mod:`melnikov`, :mod:`manifolds` and :mod:`cli`.
"""

from .errors import RodError
from .model import Params, PhysicalParams, State, first_integral, hamiltonian, jacobian, vector_field

__version__ = "0.1.0"

__all__ = [
    "Params",
    "PhysicalParams",
    "RodError",
    "State",
    "first_integral",
    "hamiltonian",
    "jacobian",
    "vector_field",
    "__version__",
]
