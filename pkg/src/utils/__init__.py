"""
Shared helpers: error hierarchy and seeded random generators
"""

from .errors import DataError, DomainError, FormatError, InputShapeError, OdinError, ParameterError
from .rng import get_rng, spawn_rngs

__all__ = [
    'DataError', 'DomainError', 'FormatError', 'InputShapeError', 'OdinError', 'ParameterError',
    'get_rng', 'spawn_rngs',
]
