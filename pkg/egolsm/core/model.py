"""Inner-product latent space model: Theta/P assembly and the observed-data likelihood."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np
from scipy.special import expit
from scipy.special import logit as _logit

from egolsm.constants import DEFAULT_M1, DEFAULT_M2
from egolsm.exceptions import DimensionError

if TYPE_CHECKING:
    from egolsm.core.partial_view import PartialView

logger = logging.getLogger(__name__)


@dataclass
class AdjacencyMatrix:
    """Symmetric binary adjacency matrix with zero diagonal."""

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError("A", f"expected a square matrix, got shape {A.shape}")
        if not np.isin(A, (0, 1)).all():
            raise ValueError("A: entries must be 0 or 1")
        if not np.array_equal(A, A.T):
            raise ValueError("A: matrix must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValueError("A: self-loops are not allowed")
        self.A = A.astype(np.int8)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.A, 1).sum())

    @classmethod
    def from_edges(cls, edges, n: int) -> "AdjacencyMatrix":
        """Build from an iterable of (u, v) pairs (0-based)."""
        A = np.zeros((n, n), dtype=np.int8)
        for u, v in edges:
            if u != v:
                A[u, v] = A[v, u] = 1
        return cls(A)


def as_array(A: Union[AdjacencyMatrix, np.ndarray]) -> np.ndarray:
    """Return the dense array behind an AdjacencyMatrix (or the array itself)."""
    return A.A if isinstance(A, AdjacencyMatrix) else np.asarray(A)


@dataclass
class LatentModel:
    """Parameters (alpha, beta, Z) of the inner-product model plus covariates X.

    Theta_ij = alpha_i + alpha_j + beta * X_ij + z_i^T z_j.
    """

    alpha: np.ndarray
    beta: float
    Z: np.ndarray
    X: np.ndarray
    M1: float = DEFAULT_M1
    M2: float = DEFAULT_M2

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.Z = _as_positions(self.Z)
        self.X = np.asarray(self.X, dtype=float)
        self.beta = float(self.beta)
        _check_dimensions(self.alpha, self.Z, self.X)
        if not np.array_equal(self.X, self.X.T):
            raise ValueError("X: covariate matrix must be symmetric")
        if np.any(np.diag(self.X) != 0):
            raise ValueError("X: diagonal must be zero")
        if self.M1 <= 0 or self.M2 <= 0:
            raise ValueError("bounds: M1 and M2 must be positive")

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def k(self) -> int:
        return self.Z.shape[1]

    def theta(self) -> np.ndarray:
        return assemble_theta(self)

    def probabilities(self) -> np.ndarray:
        """Edge probabilities sigma(Theta) with the diagonal set to 0."""
        P = sigmoid(self.theta())
        np.fill_diagonal(P, 0.0)
        return P

    def is_centered(self, atol: float = 1e-8) -> bool:
        """Column sums of Z vanish (J0 Z = Z)."""
        return bool(np.all(np.abs(self.Z.sum(axis=0)) <= atol * max(1.0, np.abs(self.Z).max())))

    def within_bounds(self) -> bool:
        """-M1 <= Theta_ij <= -M2 off the diagonal and |Theta_ii| <= M1."""
        theta = self.theta()
        off = theta[~np.eye(self.n, dtype=bool)]
        return bool(
            np.all(off >= -self.M1) and np.all(off <= -self.M2)
            and np.all(np.abs(np.diag(theta)) <= self.M1)
        )


def _as_positions(Z) -> np.ndarray:
    """Z as an (n, k) array; a length-n vector is one latent dimension."""
    Z = np.asarray(Z, dtype=float)
    return Z.reshape(-1, 1) if Z.ndim == 1 else Z


def _check_dimensions(alpha: np.ndarray, Z: np.ndarray, X: np.ndarray) -> None:
    if alpha.ndim != 1:
        raise DimensionError("alpha", f"expected a vector, got shape {alpha.shape}")
    n = alpha.shape[0]
    if Z.ndim != 2 or Z.shape[0] != n:
        raise DimensionError("Z", f"expected {n} rows, got shape {Z.shape}")
    if X.shape != (n, n):
        raise DimensionError("X", f"expected shape ({n}, {n}), got {X.shape}")


def assemble_theta(model: LatentModel) -> np.ndarray:
    """Theta = alpha 1^T + 1 alpha^T + beta X + Z Z^T (exactly symmetric)."""
    return theta_from_parts(model.alpha, model.beta, model.Z, model.X)


def theta_from_parts(alpha: np.ndarray, beta: float, Z: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Assemble Theta from raw arrays; used by the solver's inner loop."""
    Z = _as_positions(Z)
    _check_dimensions(alpha, Z, X)
    G = Z @ Z.T
    # gemm is not guaranteed to round symmetrically
    G = (G + G.T) / 2.0
    return (alpha[:, None] + alpha[None, :]) + beta * X + G


def sigmoid(x):
    """Numerically stable logistic function."""
    return expit(x)


def logit(p):
    """Inverse of sigmoid; p must lie strictly inside (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)) or np.any(np.isnan(p_arr)):
        raise ValueError("logit: argument must lie in the open interval (0, 1)")
    return _logit(p)


def log_one_minus_sigmoid(x):
    """log(1 - sigma(x)) = -log(1 + e^x), stable for large |x|."""
    return -np.logaddexp(0.0, x)


def neg_log_likelihood(
    B: np.ndarray,
    theta: np.ndarray,
    view: PartialView,
    conditional: bool = False,
) -> float:
    """Negative log-likelihood of the observed pairs.

    Sums -[B_ij Theta_ij + log(1 - sigma(Theta_ij))] once per unordered pair
    with at least one endpoint in the neighbor set. With ``conditional`` the
    pairs that contain the center are dropped.
    """
    n = view.n
    if B.shape != (n, n):
        raise DimensionError("B", f"expected shape ({n}, {n}), got {B.shape}")
    if theta.shape != (n, n):
        raise DimensionError("theta", f"expected shape ({n}, {n}), got {theta.shape}")

    rows, cols = view.conditional_pairs if conditional else view.pairs
    t = theta[rows, cols]
    b = B[rows, cols]
    return float(-np.sum(b * t + log_one_minus_sigmoid(t)))
