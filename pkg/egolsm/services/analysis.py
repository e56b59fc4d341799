"""Community detection on latent positions, clustering accuracy, centralities and correlation tables."""
from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment
from scipy.stats import pearsonr, spearmanr
from sklearn.cluster import KMeans

from egolsm.constants import CORRELATION_MIN_DEGREE, DEFAULT_KMEANS_RESTARTS, HUNGARIAN_MIN_K
from egolsm.core.model import AdjacencyMatrix, as_array
from egolsm.services.simulation import RngLike, RngSpec

logger = logging.getLogger(__name__)

# Columns that describe a center node; everything else in a row is an outcome.
ATTRIBUTE_COLUMNS = ["degree", "fraction_observed", "betweenness", "closeness", "eigenvector", "imbalance"]


@dataclass
class CentralityProfile:
    node: int
    degree: int
    fraction_observed: float
    betweenness: float
    closeness: float
    eigenvector: float
    imbalance: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _random_state(rng: RngLike) -> Optional[int]:
    if rng is None or isinstance(rng, (int, np.integer)):
        return rng
    gen = rng.generator() if isinstance(rng, RngSpec) else rng
    return int(gen.integers(2 ** 31 - 1))


def kmeans_cluster(
    Z_hat: np.ndarray, K: int, restarts: int = DEFAULT_KMEANS_RESTARTS, rng: RngLike = None
) -> np.ndarray:
    """k-means++ seeded Lloyd iterations, best of ``restarts`` runs by inertia."""
    Z_hat = np.asarray(Z_hat, dtype=float)
    if Z_hat.ndim == 1:
        Z_hat = Z_hat[:, None]
    n = Z_hat.shape[0]
    if K < 2 or K > n:
        raise ValueError(f"K={K} must lie in [2, {n}]")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")

    km = KMeans(n_clusters=K, init="k-means++", n_init=restarts, random_state=_random_state(rng))
    return km.fit_predict(Z_hat)


def clustering_accuracy(labels: Sequence, truth_labels: Sequence) -> float:
    """Best fraction of agreeing nodes over relabelings of the predicted clusters."""
    labels = np.asarray(labels)
    truth_labels = np.asarray(truth_labels)
    if labels.shape != truth_labels.shape:
        raise ValueError(f"label vectors differ in length: {labels.shape} vs {truth_labels.shape}")
    n = labels.size
    if n == 0:
        return 0.0

    _, pred = np.unique(labels, return_inverse=True)
    _, true = np.unique(truth_labels, return_inverse=True)
    size = max(pred.max(), true.max()) + 1
    confusion = np.zeros((size, size), dtype=int)
    np.add.at(confusion, (pred, true), 1)

    if size < HUNGARIAN_MIN_K:
        best = max(
            confusion[np.arange(size), list(perm)].sum()
            for perm in itertools.permutations(range(size))
        )
    else:
        rows, cols = linear_sum_assignment(confusion, maximize=True)
        best = confusion[rows, cols].sum()
    return float(best) / n


def fraction_observed(A: Union[AdjacencyMatrix, np.ndarray], center: int) -> float:
    """Share of edges with at least one endpoint in the center's neighbor set."""
    A = as_array(A)
    total = A.sum() / 2
    if total == 0:
        return 0.0
    hidden = ~A[center].astype(bool)
    hidden[center] = False
    inside_hidden = A[np.ix_(hidden, hidden)].sum() / 2
    return float((total - inside_hidden) / total)


def _eigenvector(G: nx.Graph) -> dict:
    try:
        return nx.eigenvector_centrality(G, max_iter=1000)
    except nx.PowerIterationFailedConvergence:
        logger.warning("Eigenvector power iteration did not converge; using the dense solver")
        return nx.eigenvector_centrality_numpy(G)


def centralities(
    A: Union[AdjacencyMatrix, np.ndarray],
    nodes: Optional[Iterable[int]] = None,
    betweenness_pivots: Optional[int] = None,
    rng: RngLike = None,
) -> List[CentralityProfile]:
    """Degree, fraction observed, betweenness, closeness and eigenvector centrality per node.

    With ``betweenness_pivots`` smaller than n, betweenness is estimated from
    that many randomly drawn source nodes instead of all of them.
    """
    A = as_array(A)
    n = A.shape[0]
    nodes = list(range(n)) if nodes is None else list(nodes)
    degree = A.sum(axis=1)

    if A.sum() == 0:
        return [CentralityProfile(int(i), 0, 0.0, 0.0, 0.0, 0.0) for i in nodes]

    G = nx.from_numpy_array(A)
    if betweenness_pivots is not None and betweenness_pivots < n:
        betweenness = nx.betweenness_centrality(
            G, k=betweenness_pivots, normalized=True, seed=_random_state(rng)
        )
    else:
        betweenness = nx.betweenness_centrality(G, normalized=True)
    if len(nodes) < n:
        closeness = {i: nx.closeness_centrality(G, u=i, wf_improved=False) for i in nodes}
    else:
        closeness = nx.closeness_centrality(G, wf_improved=False)
    eigenvector = _eigenvector(G)

    return [
        CentralityProfile(
            node=int(i),
            degree=int(degree[i]),
            fraction_observed=fraction_observed(A, i),
            betweenness=float(betweenness[i]),
            closeness=float(closeness[i]),
            eigenvector=float(eigenvector[i]),
        )
        for i in nodes
    ]


def correlation_table(x: Sequence[float], y: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    """(Pearson, Spearman); None for both when either vector is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"vectors differ in length: {x.shape} vs {y.shape}")
    if x.size < 3:
        raise ValueError("correlation needs at least 3 observations")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return None, None
    pearson = pearsonr(x, y)[0]
    spearman = spearmanr(x, y)[0]
    return float(pearson), float(spearman)


def attribute_correlations(
    rows: Union[pd.DataFrame, Sequence[Mapping]],
    target: str = "accuracy",
    min_degree: int = CORRELATION_MIN_DEGREE,
) -> pd.DataFrame:
    """Correlation of ``target`` with every node attribute, over centers of degree > min_degree."""
    df = pd.DataFrame(rows)
    if "degree" in df:
        df = df[df["degree"] > min_degree]
    records = []
    for attribute in ATTRIBUTE_COLUMNS:
        if attribute not in df or target not in df:
            continue
        sub = df[[attribute, target]].dropna()
        if len(sub) < 3:
            continue
        pearson, spearman = correlation_table(sub[attribute], sub[target])
        records.append({"attribute": attribute, "pearson": pearson, "spearman": spearman, "n": len(sub)})
    return pd.DataFrame(records, columns=["attribute", "pearson", "spearman", "n"])


def attribute_spearman_matrix(rows: Union[pd.DataFrame, Sequence[Mapping]]) -> pd.DataFrame:
    """Pairwise Spearman correlations between the node attributes present in ``rows``."""
    df = pd.DataFrame(rows)
    present = [c for c in ATTRIBUTE_COLUMNS if c in df]
    return df[present].astype(float).corr(method="spearman")
