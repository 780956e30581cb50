"""
Error hierarchy for the ODIN toolkit

Each error carries a machine-readable category and the CLI exit code for it.
"""

from typing import Optional


class OdinError(Exception):
    """Base class for all toolkit errors"""
    category = 'internal'
    exit_code = 1


class ParameterError(OdinError, ValueError):
    """Invalid parameter value (temperature, epsilon, grid, sizes...)"""
    category = 'parameter'
    exit_code = 2


class InputShapeError(ParameterError):
    """Input vector or matrix does not match the model dimensions"""


class DataError(OdinError, ValueError):
    """Empty, inconsistent or missing dataset"""
    category = 'data'
    exit_code = 3


class FormatError(OdinError):
    """Malformed weight, IDX or tensor file"""
    category = 'format'
    exit_code = 4

    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DomainError(OdinError, ValueError):
    """Quantity undefined for the given inputs (degenerate bandwidth, invalid expansion...)"""
    category = 'domain'
    exit_code = 5
