"""Spectral initialization: USVT probability estimate, then a logit-scale decomposition into (Z0, alpha0, beta0)."""
from __future__ import annotations

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import eigh, pinvh

from egolsm.constants import DEFAULT_REFINE_STEPS, DEFAULT_REFINE_TOL
from egolsm.core.model import logit
from egolsm.core.partial_view import PartialView, apply_centering, mask_transform
from egolsm.exceptions import DimensionError
from egolsm.models.config import InitConfig

logger = logging.getLogger(__name__)


def usvt_probability_estimate(
    B: np.ndarray, view: PartialView, config: InitConfig, min_rank: int = 0
) -> np.ndarray:
    """Universal singular value thresholding of B.

    Keeps singular values strictly above tau = c * sqrt(n * p_hat), with
    p_hat the edge density over observed pairs, and clips the reconstruction
    to [eps, 1 - eps]. ``min_rank`` forces the leading components to be kept
    even when they fall below tau. Entries on the hidden block are
    meaningless downstream.
    """
    B = np.asarray(B, dtype=float)
    n = view.n
    if B.shape != (n, n):
        raise DimensionError("B", f"expected shape ({n}, {n}), got {B.shape}")

    rows, cols = view.pairs
    p_hat = float(B[rows, cols].mean()) if rows.size else 0.0
    tau = config.usvt_threshold_const * math.sqrt(n * p_hat)

    U, s, Vt = np.linalg.svd(B)
    keep = s > tau
    keep[:min_rank] = True
    P = (U[:, keep] * s[keep]) @ Vt[keep]
    P = (P + P.T) / 2.0
    logger.debug(f"USVT: p_hat={p_hat:.4f}, tau={tau:.3f}, kept {int(keep.sum())} of {n} singular values")

    eps = config.prob_clip_eps
    return np.clip(P, eps, 1.0 - eps)


def _degree_covariate_solver(
    X: np.ndarray, observed: np.ndarray, with_beta: bool
) -> Callable[[np.ndarray], Tuple[np.ndarray, float]]:
    """Least squares for Y_ij ~ alpha_i + alpha_j + beta X_ij over observed pairs.

    Solved through the (n+1) x (n+1) normal equations rather than the
    pair-by-parameter design matrix. The pseudo-inverse is formed once and
    reused by every refinement round.
    """
    n = X.shape[0]
    O = observed.astype(float)
    OX = O * X
    gram = np.diag(O.sum(axis=1)) + O
    if with_beta:
        gram = np.block([
            [gram, OX.sum(axis=1)[:, None]],
            [OX.sum(axis=1)[None, :], np.array([[0.5 * np.sum(OX * X)]])],
        ])
    gram_pinv = pinvh(gram)

    def solve(Y: np.ndarray) -> Tuple[np.ndarray, float]:
        rhs = (O * Y).sum(axis=1)
        if with_beta:
            rhs = np.append(rhs, 0.5 * np.sum(OX * Y))
        solution = gram_pinv @ rhs
        if with_beta:
            return solution[:n], float(solution[n])
        return solution, 0.0

    return solve


def _double_center(M: np.ndarray, view: PartialView) -> np.ndarray:
    """J M J."""
    return apply_centering(apply_centering(M, view).T, view).T


def _top_k_factor(C: np.ndarray, k: int) -> Tuple[np.ndarray, int]:
    """Top-k nonnegative spectral factor of C, zero-padded to k columns; also returns its rank."""
    n = C.shape[0]
    k_eff = min(k, n)
    w, V = eigh(C, subset_by_index=[n - k_eff, n - 1])
    w, V = w[::-1], V[:, ::-1]
    floor = 1e-10 * max(1.0, float(np.abs(w).max(initial=0.0)))
    positive = w > floor
    Z = V[:, positive] * np.sqrt(w[positive])
    rank = Z.shape[1]
    if rank < k:
        Z = np.hstack([Z, np.zeros((n, k - rank))])
    return Z, rank


def decompose_initial(
    P_hat: np.ndarray,
    X: np.ndarray,
    view: PartialView,
    k: int,
    refine_steps: int = DEFAULT_REFINE_STEPS,
    refine_tol: float = DEFAULT_REFINE_TOL,
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Split logit(P_hat) into degree, covariate and latent parts.

    Round 0 regresses Theta_hat on (alpha, beta), factorizes the J-centered
    residual (hidden block and diagonal set to 0) and keeps the top-k
    nonnegative part. Each refinement round subtracts the current latent
    part before the regression and imputes the residual's diagonal with
    diag(Z Z^T). Rounds stop once the reassembled Theta moves by at most
    ``refine_tol`` (relative to max(1, max |Theta|)) on the observed pairs,
    or after ``refine_steps`` refinement rounds. On noiseless input with a
    rank-k latent part the reassembly is exact at convergence.
    """
    P_hat = np.asarray(P_hat, dtype=float)
    X = np.asarray(X, dtype=float)
    n = view.n
    if P_hat.shape != (n, n):
        raise DimensionError("P_hat", f"expected shape ({n}, {n}), got {P_hat.shape}")
    if X.shape != (n, n):
        raise DimensionError("X", f"expected shape ({n}, {n}), got {X.shape}")

    observed = view.mask & ~np.eye(n, dtype=bool)
    theta_hat = np.zeros((n, n))
    theta_hat[observed] = logit(P_hat[observed])

    with_beta = bool(np.any(mask_transform(X, view) != 0))
    if not with_beta:
        logger.info("S(X) = 0: beta0 fixed at 0")
    solve = _degree_covariate_solver(X, observed, with_beta)

    latent = np.zeros((n, n))
    previous = None
    for round_ in range(refine_steps + 1):
        alpha, beta = solve(theta_hat - latent)

        base = alpha[:, None] + alpha[None, :] + beta * X
        resid = np.where(observed, theta_hat - base, 0.0)
        if round_ > 0:
            np.fill_diagonal(resid, np.diag(latent))
        resid = (resid + resid.T) / 2.0

        Z, rank = _top_k_factor(_double_center(resid, view), k)
        Z = apply_centering(Z, view)
        latent = Z @ Z.T

        current = (base + latent)[observed]
        if previous is not None:
            change = float(np.abs(current - previous).max(initial=0.0))
            if change <= refine_tol * max(1.0, float(np.abs(current).max(initial=0.0))):
                logger.debug(f"decompose_initial converged after {round_} refinement round(s)")
                break
        previous = current
    else:
        if refine_steps > 0:
            logger.debug(f"decompose_initial stopped at the {refine_steps} round limit, last change {change:.3g}")

    if rank < k:
        logger.warning(f"Only {rank} positive eigenvalues for k={k}; padding Z0 with zero columns")
    return Z, alpha, beta


def initialize(
    view: PartialView,
    X: np.ndarray,
    config: InitConfig,
    B: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, float]:
    """USVT estimate followed by decompose_initial; returns (Z0, alpha0, beta0).

    Sparse partial views can fall entirely below the USVT threshold, which
    leaves Z0 = 0. The estimate is then redone keeping the leading k + 1
    components (degree direction plus k latent ones).
    """
    B = view.B if B is None else B
    P_hat = usvt_probability_estimate(B, view, config)
    Z0, alpha0, beta0 = decompose_initial(P_hat, X, view, config.k, config.refine_steps, config.refine_tol)
    if not np.any(Z0):
        logger.warning(
            f"USVT kept no latent signal for center={view.center}; retrying with the top {config.k + 1} components"
        )
        P_hat = usvt_probability_estimate(B, view, config, min_rank=config.k + 1)
        Z0, alpha0, beta0 = decompose_initial(P_hat, X, view, config.k, config.refine_steps, config.refine_tol)
    logger.info(
        f"Initialized center={view.center}: ||Z0||_F={np.linalg.norm(Z0):.3f}, "
        f"mean(alpha0)={alpha0.mean():.3f}, beta0={beta0:.4f}"
    )
    return Z0, alpha0, beta0
