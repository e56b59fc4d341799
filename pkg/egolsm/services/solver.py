"""Projected gradient descent on (Z, alpha, beta) for the partial-view likelihood."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from egolsm.core.model import AdjacencyMatrix, neg_log_likelihood, sigmoid, theta_from_parts
from egolsm.core.partial_view import PartialView, apply_centering, build_partial_view, mask_transform
from egolsm.exceptions import DegenerateInitError, DimensionError, DivergenceError
from egolsm.models.config import ProjectionMode, SolverConfig
from egolsm.services.metrics import ErrorReport, error_metric

if TYPE_CHECKING:
    from egolsm.services.simulation import GroundTruth

logger = logging.getLogger(__name__)


class PGDState(NamedTuple):
    Z: np.ndarray
    alpha: np.ndarray
    beta: float


@dataclass(frozen=True)
class StepSizes:
    eta_Z: float
    eta_alpha_S: float
    eta_alpha_IS: float
    eta_beta: float

    @property
    def beta_frozen(self) -> bool:
        return self.eta_beta == 0.0


@dataclass
class FitResult:
    """Final iterate plus the per-iteration objective (initial value included)."""
    Z_hat: np.ndarray
    alpha_hat: np.ndarray
    beta_hat: float
    objective_trace: np.ndarray
    iterations_run: int
    step_sizes: StepSizes
    converged: bool = False
    error_reports: List[ErrorReport] = field(default_factory=list)

    @property
    def e_t_trace(self) -> Optional[np.ndarray]:
        if not self.error_reports:
            return None
        return np.array([r.e_t for r in self.error_reports])

    @property
    def k(self) -> int:
        return self.Z_hat.shape[1]


def compute_step_sizes(Z0: np.ndarray, view: PartialView, X: np.ndarray, eta: float) -> StepSizes:
    """eta_Z = eta / (2 ||Z0||_op^2), eta_alpha = eta / 4n (set) or eta / 4n_S (complement),
    eta_beta = eta / (2 ||S(X)||_F^2)."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    op = float(np.linalg.norm(np.atleast_2d(Z0), 2))
    if op == 0.0:
        raise DegenerateInitError("degenerate initialization: ||Z0||_op = 0")

    sx = float(np.linalg.norm(mask_transform(X, view)))
    if sx == 0.0:
        logger.warning("S(X) = 0: beta cannot be estimated and stays at its initial value")
        eta_beta = 0.0
    else:
        eta_beta = eta / (2.0 * sx ** 2)

    return StepSizes(
        eta_Z=eta / (2.0 * op ** 2),
        eta_alpha_S=eta / (4.0 * view.n),
        eta_alpha_IS=eta / (4.0 * view.n_S),
        eta_beta=eta_beta,
    )


def residual(theta: np.ndarray, B: np.ndarray, view: PartialView, conditional: bool = False) -> np.ndarray:
    """R = B - S(P) with P = sigma(Theta) and a zero diagonal."""
    P = sigmoid(theta)
    np.fill_diagonal(P, 0.0)
    R = B - mask_transform(P, view)
    if conditional:
        R[view.center, :] = 0.0
        R[:, view.center] = 0.0
    return R


def gradients(
    state: PGDState, B: np.ndarray, X: np.ndarray, view: PartialView, conditional: bool = False
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Gradients of neg_log_likelihood with respect to Z, alpha and beta."""
    theta = theta_from_parts(state.alpha, state.beta, state.Z, X)
    R = residual(theta, B, view, conditional)
    return -(R @ state.Z), -R.sum(axis=1), -0.5 * float(np.sum(R * X))


def project(
    Z: np.ndarray,
    alpha: np.ndarray,
    beta: float,
    view: PartialView,
    config: SolverConfig,
    X: Optional[np.ndarray] = None,
) -> PGDState:
    """Practical mode centers Z with J; theoretical mode also applies the bound constraint sets."""
    Z = apply_centering(Z, view)
    if config.projection_mode is ProjectionMode.PRACTICAL:
        return PGDState(Z, alpha, beta)

    radius_sq = config.M1 / 3.0
    row_sq = np.sum(Z ** 2, axis=1)
    over = row_sq > radius_sq
    if np.any(over):
        Z = Z.copy()
        Z[over] *= np.sqrt(radius_sq / row_sq[over])[:, None]

    alpha = np.clip(alpha, -config.M1 / 6.0, config.M1 / 6.0)

    if X is not None:
        x_max = float(np.max(np.abs(X[~np.eye(X.shape[0], dtype=bool)]), initial=0.0))
        if x_max > 0:
            limit = config.M1 / (3.0 * x_max)
            beta = float(np.clip(beta, -limit, limit))
    return PGDState(Z, alpha, beta)


def _step(
    state: PGDState,
    theta: np.ndarray,
    B: np.ndarray,
    X: np.ndarray,
    view: PartialView,
    steps: StepSizes,
    config: SolverConfig,
    iteration: int,
) -> PGDState:
    R = residual(theta, B, view, config.conditional)

    Z = state.Z + 2.0 * steps.eta_Z * (R @ state.Z)
    eta_alpha = np.where(view.S_diag, steps.eta_alpha_S, steps.eta_alpha_IS)
    alpha = state.alpha + 2.0 * eta_alpha * R.sum(axis=1)
    beta = state.beta + steps.eta_beta * float(np.sum(R * X))

    if not np.all(np.isfinite(Z)):
        raise DivergenceError(iteration, "Z")
    if not np.all(np.isfinite(alpha)):
        raise DivergenceError(iteration, "alpha")
    if not math.isfinite(beta):
        raise DivergenceError(iteration, "beta")

    return project(Z, alpha, beta, view, config, X)


def pgd_step(
    state: PGDState,
    B: np.ndarray,
    X: np.ndarray,
    view: PartialView,
    steps: StepSizes,
    config: SolverConfig,
    iteration: int = 0,
) -> PGDState:
    """One simultaneous update of (Z, alpha, beta) at P^t = sigma(Theta^t), then projection."""
    theta = theta_from_parts(state.alpha, state.beta, state.Z, X)
    return _step(state, theta, np.asarray(B, dtype=float), X, view, steps, config, iteration)


def _resolve_view(source) -> PartialView:
    if isinstance(source, PartialView):
        return source
    A, center = source
    return build_partial_view(A, center)


def fit(
    source: Union[PartialView, Tuple[Union[AdjacencyMatrix, np.ndarray], int]],
    X: np.ndarray,
    init: Tuple[np.ndarray, np.ndarray, float],
    config: SolverConfig,
    truth: Optional[GroundTruth] = None,
) -> FitResult:
    """Run projected gradient descent from ``init``.

    ``source`` is a PartialView or an (A, center) pair. With ``truth`` an
    ErrorReport is recorded for the initial state and every iterate.
    """
    view = _resolve_view(source)
    X = np.asarray(X, dtype=float)
    B = view.B.astype(float)

    Z0, alpha0, beta0 = init
    Z0 = np.atleast_2d(np.asarray(Z0, dtype=float))
    alpha0 = np.asarray(alpha0, dtype=float)
    if Z0.shape[0] != view.n:
        raise DimensionError("Z0", f"expected {view.n} rows, got {Z0.shape[0]}")
    if alpha0.shape != (view.n,):
        raise DimensionError("alpha0", f"expected length {view.n}, got shape {alpha0.shape}")
    if X.shape != (view.n, view.n):
        raise DimensionError("X", f"expected shape ({view.n}, {view.n}), got {X.shape}")

    steps = compute_step_sizes(Z0, view, X, config.eta)
    state = PGDState(Z0, alpha0, float(beta0))
    logger.info(
        f"PGD start: n={view.n}, k={Z0.shape[1]}, center={view.center}, n_S={view.n_S}, "
        f"eta={config.eta}, T={config.T}, mode={config.projection_mode.value}, "
        f"conditional={config.conditional}"
    )

    theta = theta_from_parts(state.alpha, state.beta, state.Z, X)
    trace = [neg_log_likelihood(B, theta, view, config.conditional)]
    reports: List[ErrorReport] = []
    if truth is not None:
        reports.append(error_metric(state.Z, state.alpha, state.beta, truth, view, config.conditional))

    small_changes = 0
    converged = False
    t = 0
    for t in range(1, config.T + 1):
        state = _step(state, theta, B, X, view, steps, config, t)
        theta = theta_from_parts(state.alpha, state.beta, state.Z, X)
        value = neg_log_likelihood(B, theta, view, config.conditional)
        if not math.isfinite(value):
            raise DivergenceError(t, "objective")
        if truth is not None:
            reports.append(error_metric(state.Z, state.alpha, state.beta, truth, view, config.conditional))

        previous = trace[-1]
        trace.append(value)
        if t % 100 == 0:
            logger.debug(f"iteration {t}: objective={value:.6f}")

        if config.stop_tol is not None:
            change = abs(previous - value) / max(abs(previous), 1e-300)
            small_changes = small_changes + 1 if change < config.stop_tol else 0
            if small_changes >= config.stop_window:
                converged = True
                break

    logger.info(
        f"PGD done: {t} iterations, objective {trace[0]:.4f} -> {trace[-1]:.4f}"
        + (" (early stop)" if converged else "")
    )
    return FitResult(
        Z_hat=state.Z,
        alpha_hat=state.alpha,
        beta_hat=state.beta,
        objective_trace=np.array(trace),
        iterations_run=t,
        step_sizes=steps,
        converged=converged,
        error_reports=reports,
    )
