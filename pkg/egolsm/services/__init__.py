"""Estimation, simulation and analysis services for egolsm."""

from .config_service import ConfigService
from .solver import FitResult, StepSizes, fit

__all__ = [
    'ConfigService',
    'FitResult',
    'StepSizes',
    'fit',
]
