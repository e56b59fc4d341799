"""Ground-truth generators, Bernoulli sampling and neighborhood scenarios."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh

from egolsm.core.model import AdjacencyMatrix, LatentModel, as_array, assemble_theta, sigmoid
from egolsm.core.partial_view import global_centering
from egolsm.exceptions import ModelSpecError
from egolsm.models.config import Scenario

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream id; identical specs yield identical draws."""
    seed: int
    stream: int = 0

    def generator(self, *substreams: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *substreams))
        return np.random.default_rng(ss)


RngLike = Union[RngSpec, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    return np.random.default_rng(rng)


@dataclass
class GroundTruth:
    """Starred parameters of a simulation plus the derived Theta* and G* = Z* Z*^T."""
    model: LatentModel
    labels: Optional[np.ndarray] = None
    scenario: Scenario = Scenario.IMBALANCED
    theta_star: np.ndarray = field(init=False, repr=False)
    G_star: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.theta_star = assemble_theta(self.model)
        G = self.model.Z @ self.model.Z.T
        self.G_star = (G + G.T) / 2.0

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def k(self) -> int:
        return self.model.k


def spectral_factor(G: np.ndarray, k: int, rtol: float = 1e-10) -> np.ndarray:
    """Top-k spectral square root of a symmetric PSD matrix (negative parts dropped)."""
    G = (G + G.T) / 2.0
    n = G.shape[0]
    if not 1 <= k <= n:
        raise ModelSpecError(f"latent dimension k={k} must lie in [1, {n}]")
    w, V = eigh(G, subset_by_index=[n - k, n - 1])
    w, V = w[::-1], V[:, ::-1]
    floor = rtol * max(1.0, float(np.abs(w).max(initial=0.0)))
    w = np.where(w > floor, w, 0.0)
    return V * np.sqrt(w)


def draw_degree_parameters(n: int, rng: np.random.Generator) -> np.ndarray:
    """alpha_i = -n a_i / sum(a) with a_i ~ Uniform(1, 3); sums to -n."""
    a = rng.uniform(1.0, 3.0, size=n)
    return -n * a / a.sum()


def draw_covariates(n: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric X with ||X||_F = n from V_ij = min(|v_ij|, 2), v_ij ~ Normal(1, 1)."""
    iu = np.triu_indices(n, 1)
    V = np.zeros((n, n))
    V[iu] = np.minimum(np.abs(rng.normal(1.0, 1.0, size=iu[0].size)), 2.0)
    V = V + V.T
    return n * V / np.linalg.norm(V)


def gen_simulation1(
    n: int,
    k: int,
    rng: RngLike,
    n_components: int = 2,
    variance: float = 0.2,
    beta: float = -0.5,
) -> GroundTruth:
    """Mixture-of-Gaussians latent positions with normalized G* and covariates.

    Component c draws its mean entries uniformly from the c-th of
    ``n_components`` equal slices of [-0.5, 0.5]; the default two components
    give Uniform(-0.5, 0) and Uniform(0, 0.5).
    """
    if n_components < 1 or n % n_components:
        raise ModelSpecError(f"n={n} must split into {n_components} equal components")
    if k < 1:
        raise ModelSpecError(f"k must be >= 1, got {k}")
    if variance <= 0:
        raise ModelSpecError(f"variance must be positive, got {variance}")
    gen = as_generator(rng)

    alpha = draw_degree_parameters(n, gen)

    edges = np.linspace(-0.5, 0.5, n_components + 1)
    size = n // n_components
    blocks = []
    for c in range(n_components):
        mu = gen.uniform(edges[c], edges[c + 1], size=k)
        blocks.append(gen.normal(mu, np.sqrt(variance), size=(size, k)))
    U = np.vstack(blocks)
    labels = np.repeat(np.arange(n_components), size)

    U_c = global_centering(U)
    G = U_c @ U_c.T
    G_norm = np.linalg.norm(G)
    if G_norm == 0:
        raise ModelSpecError("latent positions collapsed to a point")
    Z_star = spectral_factor(n * G / G_norm, k)

    X = draw_covariates(n, gen)
    model = LatentModel(alpha=alpha, beta=beta, Z=Z_star, X=X)
    logger.debug(f"Simulation 1 truth: n={n}, k={k}, components={n_components}")
    return GroundTruth(model=model, labels=labels)


def _block_sizes(n: int, K: int, sizes: Optional[Sequence[int]]) -> np.ndarray:
    if sizes is None:
        base, extra = divmod(n, K)
        return np.array([base + (1 if b < extra else 0) for b in range(K)])
    sizes = np.asarray(sizes, dtype=int)
    if sizes.shape != (K,) or sizes.sum() != n or np.any(sizes < 1):
        raise ModelSpecError(f"block sizes {sizes.tolist()} must be {K} positive ints summing to {n}")
    return sizes


def gen_dcsbm(
    n: int,
    K: int,
    H: np.ndarray,
    alpha: Union[float, np.ndarray, None] = None,
    beta: float = 0.0,
    X: Optional[np.ndarray] = None,
    rng: RngLike = None,
    sizes: Optional[Sequence[int]] = None,
) -> GroundTruth:
    """Degree-corrected SBM: latent part J0 U H U^T J0 factorized with k = K - 1.

    ``alpha`` may be a scalar or a vector; when omitted it is drawn as in
    Simulation 1 from ``rng``. ``X`` defaults to zero. K = 1 yields a single
    zero latent column.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape != (K, K):
        raise ModelSpecError(f"H must be {K}x{K}, got {H.shape}")
    if not np.allclose(H, H.T):
        raise ModelSpecError("H must be symmetric")
    if np.linalg.eigvalsh(H).min() <= 0:
        raise ModelSpecError("H must be positive definite")

    block_sizes = _block_sizes(n, K, sizes)
    labels = np.repeat(np.arange(K), block_sizes)
    U = np.eye(K)[labels]

    U_c = global_centering(U)
    latent = U_c @ H @ U_c.T
    Z_star = spectral_factor(latent, max(K - 1, 1))

    if alpha is None:
        alpha = draw_degree_parameters(n, as_generator(rng))
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (n,)).copy()
    X = np.zeros((n, n)) if X is None else np.asarray(X, dtype=float)

    model = LatentModel(alpha=alpha, beta=beta, Z=Z_star, X=X)
    return GroundTruth(model=model, labels=labels)


def sample_adjacency(theta_star: np.ndarray, rng: RngLike) -> AdjacencyMatrix:
    """Independent Bernoulli(sigma(Theta_ij)) draws for i < j, mirrored."""
    theta_star = np.asarray(theta_star, dtype=float)
    n = theta_star.shape[0]
    gen = as_generator(rng)
    iu = np.triu_indices(n, 1)
    A = np.zeros((n, n), dtype=np.int8)
    A[iu] = gen.random(iu[0].size) < sigmoid(theta_star[iu])
    return AdjacencyMatrix(A + A.T)


def apply_scenario(
    A: Union[AdjacencyMatrix, np.ndarray], center: int, scenario: Scenario, rng: RngLike
) -> AdjacencyMatrix:
    """Rewrite the center's row/column for the requested neighborhood scenario."""
    A = as_array(A).copy()
    n = A.shape[0]
    if not 0 <= center < n:
        raise IndexError(f"center {center} out of range for n={n}")
    scenario = Scenario(scenario)

    if scenario is Scenario.IMBALANCED:
        return AdjacencyMatrix(A)

    if scenario is Scenario.BALANCED:
        p_hat = A[center].sum() / n
        row = (as_generator(rng).random(n) < p_hat).astype(np.int8)
    else:
        row = np.ones(n, dtype=np.int8)
    row[center] = 0
    A[center, :] = row
    A[:, center] = row
    return AdjacencyMatrix(A)
