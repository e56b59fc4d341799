"""Edge lists, covariates, labels, co-sponsorship counts and position files."""
from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from egolsm.core.model import AdjacencyMatrix, as_array
from egolsm.exceptions import DimensionError, ParseError

logger = logging.getLogger(__name__)

IndexBase = Literal["auto", "0", "1", 0, 1]
_SPLIT = re.compile(r"[,\s]+")
_NODES_HEADER = re.compile(r"^#\s*nodes\s*[:=]?\s*(\d+)\s*$", re.IGNORECASE)


def _data_lines(path: Path):
    """Yield (line_number, tokens) for non-empty, non-comment lines."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(str(path), f"cannot read file: {e}") from e
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, _SPLIT.split(line)


def _resolve_base(index_base: IndexBase, min_id: int) -> int:
    if index_base in ("auto", None):
        return 0 if min_id == 0 else 1
    return int(index_base)


def _read_int_pairs(path: Path, min_tokens: int = 2) -> Tuple[List[Tuple[int, int, int]], List[List[str]]]:
    pairs, rest = [], []
    for lineno, tokens in _data_lines(path):
        if len(tokens) < min_tokens:
            raise ParseError(str(path), f"expected at least {min_tokens} fields, got {len(tokens)}", lineno)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ParseError(str(path), f"non-integer node id in {tokens[:2]}", lineno) from None
        pairs.append((lineno, u, v))
        rest.append(tokens[2:])
    return pairs, rest


def _shift_ids(path: Path, pairs, index_base: IndexBase, n: Optional[int]) -> Tuple[np.ndarray, int, int]:
    """Convert ids to 0-based; returns (ids as m x 2 array, base, n)."""
    if not pairs:
        if n is None:
            raise ParseError(str(path), "no edges and no declared node count")
        return np.zeros((0, 2), dtype=int), _resolve_base(index_base, 0), n

    raw = np.array([(u, v) for _, u, v in pairs], dtype=int)
    base = _resolve_base(index_base, int(raw.min()))
    ids = raw - base
    for row, (lineno, u, v) in enumerate(pairs):
        if ids[row].min() < 0:
            raise ParseError(str(path), f"node id below index base {base}: {u} {v}", lineno)
        if n is not None and ids[row].max() >= n:
            raise ParseError(str(path), f"node id exceeds declared n={n}: {u} {v}", lineno)
    return ids, base, int(ids.max()) + 1 if n is None else n


def load_network(
    path: Union[str, Path], index_base: IndexBase = "auto", n: Optional[int] = None
) -> Tuple[AdjacencyMatrix, int]:
    """Read an edge list; returns the adjacency matrix and the detected id base.

    A leading ``# nodes N`` comment declares the node count when ``n`` is not
    given, so isolated trailing nodes survive a write and reload.
    """
    path = Path(path)
    if n is None:
        n = _declared_nodes(path)
    pairs, _ = _read_int_pairs(path)
    ids, base, n = _shift_ids(path, pairs, index_base, n)

    loops = ids[:, 0] == ids[:, 1]
    if loops.any():
        logger.warning(f"{path}: dropped {int(loops.sum())} self-loop(s)")
    ids = ids[~loops]

    A = np.zeros((n, n), dtype=np.int8)
    A[ids[:, 0], ids[:, 1]] = 1
    A[ids[:, 1], ids[:, 0]] = 1
    adjacency = AdjacencyMatrix(A)
    logger.info(f"Loaded {path}: {n} nodes, {adjacency.edge_count} edges ({base}-based ids)")
    return adjacency, base


def _declared_nodes(path: Path) -> Optional[int]:
    try:
        with open(path, encoding="utf-8") as f:
            first = f.readline()
    except OSError:
        return None
    match = _NODES_HEADER.match(first.strip())
    return int(match.group(1)) if match else None


def read_edge_list(
    path: Union[str, Path], index_base: IndexBase = "auto", n: Optional[int] = None
) -> AdjacencyMatrix:
    """Whitespace- or comma-delimited ``u v`` lines; duplicates collapse, self-loops drop."""
    return load_network(path, index_base, n)[0]


def read_covariates(
    path: Union[str, Path],
    n: int,
    fmt: Literal["auto", "dense", "triplet"] = "auto",
    index_base: IndexBase = "auto",
) -> np.ndarray:
    """Dense n x n CSV or ``i j x`` triplets, symmetrized by averaging, zero diagonal."""
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines:
        raise ParseError(str(path), "empty covariate file")
    if fmt == "auto":
        fmt = "dense" if len(lines[0][1]) == n and (n != 3 or len(lines) == n) else "triplet"

    if fmt == "dense":
        try:
            X = np.array([[float(t) for t in tokens] for _, tokens in lines], dtype=float)
        except ValueError as e:
            raise ParseError(str(path), f"non-numeric covariate entry: {e}") from None
        if X.shape != (n, n):
            raise DimensionError("X", f"{path} has shape {X.shape}, expected ({n}, {n})")
        X = (X + X.T) / 2.0
    else:
        pairs, rest = _read_int_pairs(path, min_tokens=3)
        ids, _, _ = _shift_ids(path, pairs, index_base, n)
        try:
            values = np.array([float(r[0]) for r in rest], dtype=float)
        except ValueError:
            raise ParseError(str(path), "non-numeric covariate value") from None
        total = np.zeros((n, n))
        count = np.zeros((n, n))
        np.add.at(total, (ids[:, 0], ids[:, 1]), values)
        np.add.at(count, (ids[:, 0], ids[:, 1]), 1)
        total, count = total + total.T, count + count.T
        X = np.divide(total, count, out=np.zeros((n, n)), where=count > 0)

    if np.any(np.diag(X) != 0):
        logger.warning(f"{path}: nonzero covariate diagonal set to 0")
        np.fill_diagonal(X, 0.0)
    return X


def read_labels(path: Union[str, Path], n: int, base: int = 0) -> np.ndarray:
    """``node_id,label`` CSV into a length-n label array (ids shifted by ``base``)."""
    path = Path(path)
    try:
        df = pd.read_csv(path, comment="#")
    except (OSError, pd.errors.ParserError) as e:
        raise ParseError(str(path), f"cannot read labels: {e}") from e
    if list(df.columns[:2]) != ["node_id", "label"]:
        raise ParseError(str(path), "expected header 'node_id,label'", 1)

    labels = np.full(n, None, dtype=object)
    for node_id, label in zip(df["node_id"].astype(int) - base, df["label"]):
        if not 0 <= node_id < n:
            raise ParseError(str(path), f"label for unknown node {node_id + base}")
        labels[node_id] = label
    missing = np.flatnonzero(pd.isna(labels))
    if missing.size:
        raise ParseError(str(path), f"{missing.size} node(s) without a label, e.g. {int(missing[0]) + base}")
    return labels


def read_cosponsorship(
    path: Union[str, Path], n: Optional[int] = None, index_base: IndexBase = "auto"
) -> np.ndarray:
    """``i j count`` triplets into a symmetric count matrix (repeated pairs add up)."""
    path = Path(path)
    pairs, rest = _read_int_pairs(path, min_tokens=3)
    ids, _, n = _shift_ids(path, pairs, index_base, n)
    try:
        values = np.array([float(r[0]) for r in rest], dtype=float)
    except ValueError:
        raise ParseError(str(path), "non-numeric co-sponsorship count") from None
    counts = np.zeros((n, n))
    off = ids[:, 0] != ids[:, 1]
    np.add.at(counts, (ids[off, 0], ids[off, 1]), values[off])
    counts = np.triu(counts, 1) + np.tril(counts, -1).T
    return counts + counts.T


def cosponsorship_network(counts: np.ndarray) -> AdjacencyMatrix:
    """Edge between two legislators iff their count exceeds the median over all pairs."""
    counts = np.asarray(counts, dtype=float)
    iu = np.triu_indices(counts.shape[0], 1)
    threshold = float(np.median(counts[iu]))
    A = np.zeros(counts.shape, dtype=np.int8)
    A[iu] = counts[iu] > threshold
    logger.info(f"Co-sponsorship threshold {threshold:g}: {int(A.sum())} edges")
    return AdjacencyMatrix(A + A.T)


def write_positions(
    Z: np.ndarray,
    alpha: np.ndarray,
    beta: float,
    path: Union[str, Path],
    labels: Optional[Sequence] = None,
    base: int = 0,
    meta: Optional[dict] = None,
) -> Path:
    """node_id, z_1..z_k, alpha_hat[, label] CSV at 17 significant digits plus a beta_hat JSON sidecar."""
    path = Path(path)
    n, k = Z.shape
    df = pd.DataFrame({"node_id": np.arange(n) + base})
    for j in range(k):
        df[f"z_{j + 1}"] = Z[:, j]
    df["alpha_hat"] = alpha
    if labels is not None:
        df["label"] = list(labels)

    sidecar = path.with_suffix(".json")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format="%.17g")
        sidecar.write_text(json.dumps({"beta_hat": float(beta), "k": k, **(meta or {})}, indent=2), encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write positions to {path}: {e}") from e

    logger.info(f"Saved positions to: {path}")
    return path


def emit_positions(
    fit,
    path: Union[str, Path],
    labels: Optional[Sequence] = None,
    base: int = 0,
) -> Path:
    """Write a FitResult's estimates with write_positions."""
    return write_positions(
        fit.Z_hat, fit.alpha_hat, fit.beta_hat, path, labels, base,
        meta={"iterations_run": fit.iterations_run},
    )


def write_covariates(X: np.ndarray, path: Union[str, Path]) -> Path:
    """Dense CSV readable by read_covariates."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, X, delimiter=",", fmt="%.17g")
    return path


def load_positions(path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray, float, Optional[np.ndarray]]:
    """Read back (Z_hat, alpha_hat, beta_hat, labels) written by emit_positions."""
    path = Path(path)
    df = pd.read_csv(path, float_precision="round_trip")
    z_cols = sorted((c for c in df.columns if c.startswith("z_")), key=lambda c: int(c[2:]))
    Z = df[z_cols].to_numpy(dtype=float)
    alpha = df["alpha_hat"].to_numpy(dtype=float)
    labels = df["label"].to_numpy() if "label" in df else None

    beta = float("nan")
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        beta = float(json.loads(sidecar.read_text(encoding="utf-8"))["beta_hat"])
    return Z, alpha, beta, labels


def write_adjacency(A: Union[AdjacencyMatrix, np.ndarray], path: Union[str, Path], base: int = 0) -> Path:
    """Edge list with one ``u v`` line per edge (u < v)."""
    path = Path(path)
    rows, cols = np.nonzero(np.triu(as_array(A), 1))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# nodes {as_array(A).shape[0]}\n")
        for u, v in zip(rows + base, cols + base):
            f.write(f"{u} {v}\n")
    return path
