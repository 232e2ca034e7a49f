"""Numerical verification of quasi-Einstein structures with constant scalar curvature."""

from .errors import DomainError, InfeasibleError, InputError, QEMError, StructureRejected

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "InfeasibleError",
    "InputError",
    "QEMError",
    "StructureRejected",
    "__version__",
]
