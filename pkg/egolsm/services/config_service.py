"""Named experiment presets and the preset < config file < flags merge."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from egolsm.constants import KARATE_EDGE_LIST, KARATE_LABELS
from egolsm.exceptions import ParseError
from egolsm.models.config import ExperimentConfig

logger = logging.getLogger(__name__)

# Config-file spellings that differ from the ExperimentConfig field names
KEY_ALIASES = {
    "center": "centers",
    "scenario": "scenarios",
    "network_path": "network",
    "iterations": "iters",
    "projection_mode": "projection",
    "output": "out",
    "output_dir": "out",
}
LIST_KEYS = {"centers", "scenarios"}


@dataclass
class ExperimentPreset:
    """A named bundle of ExperimentConfig values."""
    name: str
    description: str
    values: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> Tuple[bool, Optional[str]]:
        """
        Validate the preset on its own.

        Returns:
            (is_valid, error_message)
        """
        unknown = set(self.values) - set(ExperimentConfig.model_fields)
        if unknown:
            return False, f"Unknown keys: {sorted(unknown)}"
        try:
            ExperimentConfig(**self.values)
        except ValidationError as e:
            return False, str(e)
        return True, None


PREDEFINED_PRESETS: Dict[str, ExperimentPreset] = {
    "simulation1": ExperimentPreset(
        name="simulation1",
        description="Simulation 1 at full scale (n=1000, k=3, 100 replicates, all scenarios, bounded projection)",
        values={
            "mode": "experiment",
            "generator": "simulation1",
            "n": 1000,
            "k": 3,
            "scenarios": ["imbalanced", "balanced", "full"],
            "replicates": 100,
            "eta": 0.2,
            "iters": 500,
            "projection": "theoretical",
            "M1": 15.0,
        },
    ),
    "simulation1-desk": ExperimentPreset(
        name="simulation1-desk",
        description="Simulation 1 at desk scale (n=300, 20 replicates, bounded projection)",
        values={
            "mode": "experiment",
            "generator": "simulation1",
            "n": 300,
            "k": 3,
            "scenarios": ["imbalanced", "balanced", "full"],
            "replicates": 20,
            "eta": 0.2,
            "iters": 500,
            "projection": "theoretical",
            "M1": 15.0,
        },
    ),
    "karate": ExperimentPreset(
        name="karate",
        description="Zachary karate club, k=2, six centers, bounded projection, 50-restart k-means",
        values={
            "mode": "analyze",
            "network": KARATE_EDGE_LIST,
            "labels": KARATE_LABELS,
            "no_covariates": True,
            "k": 2,
            "clusters": 2,
            "centers": [1, 2, 3, 20, 32, 34],
            "restarts": 50,
            "projection": "theoretical",
        },
    ),
    "dcsbm": ExperimentPreset(
        name="dcsbm",
        description="Three-block DC-SBM (k = K - 1 = 2), imbalanced vs balanced",
        values={
            "mode": "experiment",
            "generator": "dcsbm",
            "n": 300,
            "blocks": 3,
            "k": 2,
            "scenarios": ["imbalanced", "balanced"],
            "replicates": 20,
            "projection": "theoretical",
            "M1": 15.0,
        },
    ),
}


class ConfigService:
    """Builds ExperimentConfig objects from presets, config files and flag overrides."""

    def __init__(self, presets: Optional[Dict[str, ExperimentPreset]] = None):
        self._presets = dict(PREDEFINED_PRESETS if presets is None else presets)
        for name, preset in self._presets.items():
            ok, error = preset.validate()
            if not ok:
                logger.warning(f"Preset '{name}' is invalid: {error}")

    def list_presets(self) -> List[Dict[str, str]]:
        return [{"name": p.name, "description": p.description} for p in self._presets.values()]

    def get_preset(self, name: str) -> ExperimentPreset:
        if name not in self._presets:
            raise KeyError(f"Unknown preset '{name}'. Available: {list(self._presets)}")
        return self._presets[name]

    @staticmethod
    def normalize_key(key: str) -> str:
        key = key.strip().lstrip("-").replace("-", "_").lower()
        return KEY_ALIASES.get(key, key)

    def load_file(self, path: Union[str, Path]) -> Dict[str, Any]:
        """Parse a flat ``key = value`` (or ``key: value``) file; unknown keys are an error."""
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise ParseError(str(path), f"cannot read config: {e}") from e

        values: Dict[str, Any] = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else ":" if ":" in line else None
            if sep is None:
                raise ParseError(str(path), f"expected 'key = value', got '{line}'", lineno)
            key, value = (part.strip() for part in line.split(sep, 1))
            key = self.normalize_key(key)
            if key not in ExperimentConfig.model_fields:
                raise ParseError(str(path), f"unknown key '{key}'", lineno)
            if key in LIST_KEYS:
                values[key] = [v.strip() for v in value.split(",") if v.strip()]
            else:
                values[key] = value
        logger.info(f"Loaded config file {path}: {sorted(values)}")
        return values

    def build(
        self,
        preset: Optional[str] = None,
        config_file: Optional[Union[str, Path]] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> ExperimentConfig:
        """Merge preset < config file < overrides (None values in overrides are ignored)."""
        merged: Dict[str, Any] = {}
        if preset:
            merged.update(self.get_preset(preset).values)
            logger.info(f"Using preset: {preset}")
        if config_file:
            merged.update(self.load_file(config_file))
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            key = self.normalize_key(key)
            if key not in ExperimentConfig.model_fields:
                raise KeyError(f"Unknown setting '{key}'")
            merged[key] = value
        return ExperimentConfig(**merged)
