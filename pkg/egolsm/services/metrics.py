"""Error metrics, Procrustes alignment, neighborhood imbalance and conditioning diagnostics."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np
from scipy.linalg import orthogonal_procrustes

from egolsm.constants import BIAS_BOUND_CONSTANT
from egolsm.core.model import sigmoid, theta_from_parts
from egolsm.core.partial_view import PartialView, apply_centering, mask_transform
from egolsm.exceptions import DimensionError

if TYPE_CHECKING:
    from egolsm.services.simulation import GroundTruth
    from egolsm.services.solver import FitResult

logger = logging.getLogger(__name__)


@dataclass
class ErrorReport:
    """Estimation errors of one iterate against the truth.

    ``delta_G_F_sq`` compares against the neighborhood-centered truth JZ*;
    ``delta_G_raw_F_sq`` against Z* itself.
    """
    e_t: float
    delta_Z_F: float
    delta_G_F_sq: float
    delta_G_raw_F_sq: float
    delta_Theta_F_sq: float
    delta_S_Theta_F_sq: float
    relative_error_Theta: float
    c: float  # ||Delta_Z||_F / ||JZ*||_op

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DiagnosticStats:
    """Neighborhood diagnostics of a view under a known truth."""
    r_S: float
    n_S: int
    U_S: float
    U_S_normalized: float
    gamma_S: float
    kappa_prime: float
    p_S: float
    delta_n_sq: float
    covariate_stable_rank: float
    centering_gap_F_sq: float
    bias_bound_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def procrustes_align(Z_hat: np.ndarray, Z_ref: np.ndarray) -> Tuple[np.ndarray, float]:
    """Orthogonal R minimizing ||Z_hat - Z_ref R||_F, and the aligned error."""
    Z_hat = np.atleast_2d(np.asarray(Z_hat, dtype=float))
    Z_ref = np.atleast_2d(np.asarray(Z_ref, dtype=float))
    if Z_hat.shape != Z_ref.shape:
        raise ValueError(f"procrustes: shapes differ {Z_hat.shape} vs {Z_ref.shape}")
    R, _ = orthogonal_procrustes(Z_ref, Z_hat)
    return R, float(np.linalg.norm(Z_hat - Z_ref @ R))


def _zero_center(M: np.ndarray, center: int) -> np.ndarray:
    M = M.copy()
    M[center, :] = 0.0
    M[:, center] = 0.0
    return M


def _offdiag(M: np.ndarray) -> np.ndarray:
    M = M.copy()
    np.fill_diagonal(M, 0.0)
    return M


def error_metric(
    Z_t: np.ndarray,
    alpha_t: np.ndarray,
    beta_t: float,
    truth: GroundTruth,
    view: PartialView,
    conditional: bool = False,
) -> ErrorReport:
    """Errors of (Z_t, alpha_t, beta_t) against ``truth`` as seen through ``view``."""
    star = truth.model
    X = star.X
    Z_c = apply_centering(star.Z, view)

    _, dz = procrustes_align(Z_t, Z_c)
    op = float(np.linalg.norm(Z_c, 2))

    d_alpha = np.asarray(alpha_t, dtype=float) - star.alpha
    alpha_term = mask_transform(np.outer(d_alpha, np.ones(view.n)), view)
    d_beta = float(beta_t) - star.beta
    SX_sq = float(np.sum(mask_transform(X, view) ** 2))
    e_t = op ** 2 * dz ** 2 + 2.0 * float(np.sum(alpha_term ** 2)) + d_beta ** 2 * SX_sq

    G_t = Z_t @ Z_t.T
    d_G = G_t - Z_c @ Z_c.T
    d_G_raw = G_t - truth.G_star
    d_theta = _offdiag(theta_from_parts(np.asarray(alpha_t, dtype=float), beta_t, Z_t, X) - truth.theta_star)
    theta_ref = _offdiag(truth.theta_star)
    if conditional:
        d_G = _zero_center(d_G, view.center)
        d_G_raw = _zero_center(d_G_raw, view.center)
        d_theta = _zero_center(d_theta, view.center)
        theta_ref = _zero_center(theta_ref, view.center)

    d_theta_sq = float(np.sum(d_theta ** 2))
    theta_norm_sq = float(np.sum(theta_ref ** 2))
    return ErrorReport(
        e_t=e_t,
        delta_Z_F=dz,
        delta_G_F_sq=float(np.sum(d_G ** 2)),
        delta_G_raw_F_sq=float(np.sum(d_G_raw ** 2)),
        delta_Theta_F_sq=d_theta_sq,
        delta_S_Theta_F_sq=float(np.sum(mask_transform(d_theta, view) ** 2)),
        relative_error_Theta=d_theta_sq / theta_norm_sq if theta_norm_sq > 0 else math.inf,
        c=dz / op if op > 0 else math.inf,
    )


def imbalance(
    Z_star: np.ndarray, view: PartialView, G_star_norm: Optional[float] = None
) -> Tuple[float, float]:
    """U_S and U_S / ||G||_F.

    U_S^2 = (1/n) sum_i (z_i . s)^2 with s the position sum over the neighbor
    set. Without ``G_star_norm`` the norm of Z Z^T is used, which is how the
    empirical measure is normalized for fitted positions.
    """
    Z = np.asarray(Z_star, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != view.n:
        raise DimensionError("Z", f"expected {view.n} rows, got {Z.shape[0]}")
    s = Z[view.S_diag].sum(axis=0)
    U_S = math.sqrt(float(np.mean((Z @ s) ** 2)))
    if G_star_norm is None:
        # ||Z Z^T||_F = ||Z^T Z||_F, k x k instead of n x n
        G_star_norm = float(np.linalg.norm(Z.T @ Z))
    normalized = U_S / G_star_norm if G_star_norm > 0 else 0.0
    return U_S, normalized


def _singular_values(M: np.ndarray) -> np.ndarray:
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def neighborhood_diagnostics(truth: GroundTruth, view: PartialView) -> DiagnosticStats:
    """Conditioning and imbalance diagnostics of ``view`` under ``truth``."""
    star = truth.model
    k = star.k
    Z_c = apply_centering(star.Z, view)

    sigma = _singular_values(Z_c)
    sigma_S = _singular_values(Z_c[view.S_diag])
    sigma_1 = float(sigma[0]) if sigma.size else 0.0
    sigma_k_S = float(sigma_S[k - 1]) if sigma_S.size >= k else 0.0
    if sigma_k_S > 0:
        kappa_prime = sigma_1 / sigma_k_S
        gamma_S = min(view.r_S, kappa_prime ** -4)
    else:
        kappa_prime = math.inf
        gamma_S = 0.0

    P_row = sigmoid(truth.theta_star[view.center])
    P_row[view.center] = 0.0  # no self-loops
    p_S = float(P_row.mean())
    delta_n_sq = float(np.sum((P_row @ star.Z) ** 2))

    G_norm = float(np.linalg.norm(truth.G_star))
    U_S, U_norm = imbalance(star.Z, view, G_norm)

    SX = mask_transform(star.X, view)
    SX_F_sq = float(np.sum(SX ** 2))
    SX_op = float(np.linalg.norm(SX, 2)) if SX_F_sq > 0 else 0.0
    stable_rank = SX_F_sq / SX_op ** 2 if SX_op > 0 else 0.0

    gap = float(np.sum((Z_c @ Z_c.T - truth.G_star) ** 2))
    bound = U_S ** 2 / view.r_S
    if bound > 0:
        ratio = gap / bound
    else:
        ratio = 0.0 if gap <= 1e-12 * max(1.0, G_norm ** 2) else math.inf
    if ratio > BIAS_BOUND_CONSTANT:
        logger.warning(
            f"Centering gap {gap:.4g} exceeds {BIAS_BOUND_CONSTANT:g} * U_S^2/r_S "
            f"(ratio {ratio:.3g}) for center {view.center}"
        )

    return DiagnosticStats(
        r_S=view.r_S,
        n_S=view.n_S,
        U_S=U_S,
        U_S_normalized=U_norm,
        gamma_S=gamma_S,
        kappa_prime=kappa_prime,
        p_S=p_S,
        delta_n_sq=delta_n_sq,
        covariate_stable_rank=stable_rank,
        centering_gap_F_sq=gap,
        bias_bound_ratio=ratio,
    )


def gram_bound_violations(fit_result: FitResult, rtol: float = 1e-9) -> int:
    """Traced iterations with c <= 1 where ||Delta_G||^2 > (2 + c)^2 e_t."""
    count = 0
    for report in fit_result.error_reports:
        if report.c > 1:
            continue
        bound = (2.0 + report.c) ** 2 * report.e_t
        if report.delta_G_F_sq > bound * (1 + rtol) + 1e-12:
            count += 1
    return count
