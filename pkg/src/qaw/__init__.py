"""Numerical toolkit for a family of integrals extending the Askey-Wilson integral."""

from .errors import (
    ConvergenceError,
    DivergenceError,
    ParameterError,
    PoleProximityError,
    QawError,
    UnsupportedDomainError,
)
from .qkernel import QContext

__version__ = "0.1.0"

__all__ = [
    "QContext",
    "QawError",
    "ParameterError",
    "PoleProximityError",
    "DivergenceError",
    "ConvergenceError",
    "UnsupportedDomainError",
]
