"""Exception hierarchy for egolsm."""

from typing import Optional


class EgoLSMError(Exception):
    """Base class for all egolsm errors."""


class DimensionError(EgoLSMError, ValueError):
    """Inputs have inconsistent shapes."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DegenerateInitError(EgoLSMError, ValueError):
    """Initial latent positions have zero operator norm."""


class DivergenceError(EgoLSMError, FloatingPointError):
    """An iterate became non-finite."""

    def __init__(self, iteration: int, quantity: str):
        self.iteration = iteration
        self.quantity = quantity
        super().__init__(
            f"non-finite {quantity} at iteration {iteration} (step size too large?)"
        )


class ModelSpecError(EgoLSMError, ValueError):
    """Generator parameters violate the model's requirements."""


class ParseError(EgoLSMError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, path: str, message: str, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")
