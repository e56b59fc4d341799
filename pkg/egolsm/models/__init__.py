"""Configuration models for egolsm."""

from .config import ExperimentConfig, InitConfig, ProjectionMode, Scenario, SolverConfig

__all__ = [
    'ExperimentConfig',
    'InitConfig',
    'ProjectionMode',
    'Scenario',
    'SolverConfig',
]
