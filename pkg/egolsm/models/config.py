"""Validated configuration models for fitting and experiments."""

from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from egolsm.constants import (
    DEFAULT_ETA,
    DEFAULT_ITERS,
    DEFAULT_KMEANS_RESTARTS,
    DEFAULT_M1,
    DEFAULT_M2,
    DEFAULT_PROB_CLIP_EPS,
    DEFAULT_REFINE_STEPS,
    DEFAULT_REFINE_TOL,
    DEFAULT_STOP_WINDOW,
    DEFAULT_USVT_CONST,
    MAX_WORKERS,
    OUTPUT_DIR,
)


class ProjectionMode(str, Enum):
    """How iterates are projected after each gradient step."""
    PRACTICAL = "practical"      # Z <- JZ only
    THEORETICAL = "theoretical"  # JZ plus the bound constraint sets


class Scenario(str, Enum):
    """Neighborhood scenarios of the simulation study."""
    IMBALANCED = "imbalanced"
    BALANCED = "balanced"
    FULL = "full"


class SolverConfig(BaseModel):
    """Settings for projected gradient descent."""

    eta: float = Field(DEFAULT_ETA, gt=0, description="Base step size")
    T: int = Field(DEFAULT_ITERS, ge=1, description="Maximum number of iterations")
    projection_mode: ProjectionMode = Field(ProjectionMode.PRACTICAL, description="Projection after each step")
    M1: float = Field(DEFAULT_M1, gt=0, description="Lower bound magnitude on Theta (theoretical mode)")
    M2: float = Field(DEFAULT_M2, gt=0, description="Upper bound magnitude on Theta (theoretical mode)")
    stop_tol: Optional[float] = Field(None, gt=0, description="Relative objective change for early stopping")
    stop_window: int = Field(DEFAULT_STOP_WINDOW, ge=1, description="Consecutive small changes required to stop")
    conditional: bool = Field(False, description="Drop pairs containing the center from the objective")

    model_config = {"frozen": True}

    @model_validator(mode='after')
    def bounds_ordered(self):
        if self.M2 >= self.M1:
            raise ValueError('M2 must be smaller than M1')
        return self


class InitConfig(BaseModel):
    """Settings for the spectral initializer."""

    k: int = Field(..., ge=1, description="Latent dimension")
    usvt_threshold_const: float = Field(DEFAULT_USVT_CONST, gt=0, description="c in tau = c * sqrt(n * p_hat)")
    prob_clip_eps: float = Field(DEFAULT_PROB_CLIP_EPS, gt=0, lt=0.5, description="Clip level before logit")
    refine_steps: int = Field(DEFAULT_REFINE_STEPS, ge=0, description="Maximum alternating refinement rounds")
    refine_tol: float = Field(DEFAULT_REFINE_TOL, gt=0, description="Stop refining once Theta moves less than this")

    model_config = {"frozen": True}


class ExperimentConfig(BaseModel):
    """Everything a CLI run needs; built from preset, config file and flags."""

    mode: Literal["simulate", "fit", "analyze", "experiment"] = "experiment"

    # Network source: an edge list, or a generator
    network: Optional[Path] = Field(None, description="Edge-list path")
    covariates: Optional[Path] = Field(None, description="Covariate matrix path (dense CSV or triplets)")
    no_covariates: bool = Field(False, description="Use X = 0 (beta frozen)")
    labels: Optional[Path] = Field(None, description="node_id,label CSV")
    index_base: Literal["auto", "0", "1"] = "auto"
    generator: Literal["simulation1", "dcsbm"] = "simulation1"
    n: int = Field(300, ge=2, description="Generated network size")
    blocks: int = Field(2, ge=1, description="Number of DC-SBM blocks")

    centers: List[int] = Field(default_factory=lambda: [0], description="Center node id(s)")
    scenarios: List[Scenario] = Field(default_factory=lambda: [Scenario.IMBALANCED])
    k: int = Field(3, ge=1, description="Latent dimension")

    eta: float = Field(DEFAULT_ETA, gt=0)
    iters: int = Field(DEFAULT_ITERS, ge=1)
    projection: ProjectionMode = ProjectionMode.PRACTICAL
    conditional: bool = False
    stop_tol: Optional[float] = Field(None, gt=0)
    M1: float = Field(DEFAULT_M1, gt=0)
    M2: float = Field(DEFAULT_M2, gt=0)
    usvt_const: float = Field(DEFAULT_USVT_CONST, gt=0)
    prob_clip_eps: float = Field(DEFAULT_PROB_CLIP_EPS, gt=0, lt=0.5)

    replicates: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    workers: int = Field(MAX_WORKERS, ge=1)
    restarts: int = Field(DEFAULT_KMEANS_RESTARTS, ge=1, description="k-means restarts")
    clusters: Optional[int] = Field(None, ge=2, description="k-means K (default: number of labels)")
    out: Path = Field(OUTPUT_DIR, description="Output directory")

    @field_validator('centers')
    @classmethod
    def centers_not_empty(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError('at least one center is required')
        if any(c < 0 for c in v):
            raise ValueError('center ids must be non-negative')
        return v

    @field_validator('scenarios')
    @classmethod
    def scenarios_unique(cls, v: List[Scenario]) -> List[Scenario]:
        if not v:
            raise ValueError('at least one scenario is required')
        return list(dict.fromkeys(v))

    @model_validator(mode='after')
    def validate_source(self):
        """Simulation 1 needs two equal halves; real-data modes need a network."""
        if self.network is None and self.generator == "simulation1" and self.n % 2:
            raise ValueError('simulation1 requires an even n')
        if self.network is None and self.generator == "dcsbm" and self.k != max(self.blocks - 1, 1):
            raise ValueError(f'dcsbm with {self.blocks} blocks has latent dimension {max(self.blocks - 1, 1)}, got k={self.k}')
        if self.mode in ("fit", "analyze") and self.network is None:
            raise ValueError(f'{self.mode} requires a network edge list')
        if self.mode in ("simulate", "experiment") and self.network is not None:
            raise ValueError(f'{self.mode} generates its networks; use fit or analyze for an edge list')
        if self.M2 >= self.M1:
            raise ValueError('M2 must be smaller than M1')
        return self

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            eta=self.eta,
            T=self.iters,
            projection_mode=self.projection,
            M1=self.M1,
            M2=self.M2,
            stop_tol=self.stop_tol,
            conditional=self.conditional,
        )

    def init_config(self) -> InitConfig:
        return InitConfig(
            k=self.k,
            usvt_threshold_const=self.usvt_const,
            prob_clip_eps=self.prob_clip_eps,
        )
