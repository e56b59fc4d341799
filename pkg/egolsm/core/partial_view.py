"""Ego-centered partial observation: the masked adjacency B, mask operator S(.) and centering J."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Tuple, Union

import numpy as np

from egolsm.core.model import AdjacencyMatrix, as_array
from egolsm.exceptions import DimensionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartialView:
    """What the center node sees of the network (knowledge depth 2).

    B keeps every pair with at least one endpoint in the neighbor set and
    zeroes the hidden block. Immutable after construction.
    """

    B: np.ndarray
    center: int
    neighbor_set: np.ndarray
    S_diag: np.ndarray = field(repr=False)

    def __post_init__(self):
        # freeze the arrays so views can be shared between worker threads
        for arr in (self.B, self.neighbor_set, self.S_diag):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def n_S(self) -> int:
        return int(self.neighbor_set.shape[0])

    @property
    def n_IS(self) -> int:
        return self.n - self.n_S

    @property
    def r_S(self) -> float:
        return self.n_S / self.n

    @property
    def is_full(self) -> bool:
        return self.n_S == self.n

    @cached_property
    def complement(self) -> np.ndarray:
        return np.flatnonzero(~self.S_diag)

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean n x n pattern of observed positions (diagonal of S rows included)."""
        s = self.S_diag
        m = s[:, None] | s[None, :]
        m.setflags(write=False)
        return m

    @cached_property
    def pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Observed unordered pairs i < j as index arrays, sorted by (i, j)."""
        n, members = self.n, self.neighbor_set
        # a row in S pairs with every later node, any other row only with later members of S
        chunks = [
            np.arange(i + 1, n) if self.S_diag[i] else members[np.searchsorted(members, i, side="right"):]
            for i in range(n)
        ]
        cols = np.concatenate(chunks).astype(np.intp)
        rows = np.repeat(np.arange(n, dtype=np.intp), [c.size for c in chunks])
        return rows, cols

    @cached_property
    def conditional_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Observed pairs that do not involve the center."""
        rows, cols = self.pairs
        keep = (rows != self.center) & (cols != self.center)
        return rows[keep], cols[keep]


def _from_neighbor_indicator(A: np.ndarray, s: np.ndarray, center: int) -> PartialView:
    mask = s[:, None] | s[None, :]
    B = np.where(mask, A, 0).astype(np.int8)
    return PartialView(
        B=B,
        center=int(center),
        neighbor_set=np.flatnonzero(s),
        S_diag=s.copy(),
    )


def _check_center(center: int, n: int) -> None:
    if not 0 <= center < n:
        raise IndexError(f"center {center} out of range for n={n}")


def build_partial_view(A: Union[AdjacencyMatrix, np.ndarray], center: int) -> PartialView:
    """Build the view of ``center``: its neighbors plus itself form the neighbor set."""
    A = as_array(A)
    n = A.shape[0]
    _check_center(center, n)

    s = A[center].astype(bool)
    s[center] = True
    view = _from_neighbor_indicator(A, s, center)
    logger.debug(f"Partial view of center {center}: n_S={view.n_S}, r_S={view.r_S:.3f}")
    return view


def full_view(A: Union[AdjacencyMatrix, np.ndarray], center: int = 0) -> PartialView:
    """View with every node observed (B = A)."""
    A = as_array(A)
    _check_center(center, A.shape[0])
    return _from_neighbor_indicator(A, np.ones(A.shape[0], dtype=bool), center)


def view_from_neighbor_set(
    A: Union[AdjacencyMatrix, np.ndarray], neighbor_set: Iterable[int], center: int
) -> PartialView:
    """View for a prescribed neighbor set; the center is always added."""
    A = as_array(A)
    n = A.shape[0]
    _check_center(center, n)

    s = np.zeros(n, dtype=bool)
    idx = np.asarray(list(neighbor_set), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"neighbor set contains ids outside [0, {n})")
    s[idx] = True
    s[center] = True
    return _from_neighbor_indicator(A, s, center)


def _check_square(M: np.ndarray, view: PartialView, name: str = "M") -> None:
    if M.shape != (view.n, view.n):
        raise DimensionError(name, f"expected shape ({view.n}, {view.n}), got {M.shape}")


def mask_transform(M: np.ndarray, view: PartialView) -> np.ndarray:
    """S(M) = SM + MS - SMS: keep rows/columns of the neighbor set, zero the hidden block."""
    M = np.asarray(M)
    _check_square(M, view)
    return np.where(view.mask, M, 0)


def apply_centering(Z: np.ndarray, view: PartialView) -> np.ndarray:
    """JZ: subtract the neighbor-set mean and the complement mean separately.

    With no complement this is the global centering J0 Z.
    """
    Z = np.asarray(Z, dtype=float)
    squeeze = Z.ndim == 1
    if squeeze:
        Z = Z[:, None]
    if Z.shape[0] != view.n:
        raise DimensionError("Z", f"expected {view.n} rows, got {Z.shape[0]}")

    out = Z.copy()
    s = view.S_diag
    out[s] -= Z[s].mean(axis=0)
    if view.n_IS:
        out[~s] -= Z[~s].mean(axis=0)
    return out[:, 0] if squeeze else out


def global_centering(Z: np.ndarray) -> np.ndarray:
    """J0 Z: subtract the column means."""
    Z = np.asarray(Z, dtype=float)
    return Z - Z.mean(axis=0)


def submatrix_views(M: np.ndarray, view: PartialView) -> Dict[str, np.ndarray]:
    """Block decomposition of M by the neighbor set.

    Keys: ``SS``, ``S_IS``, ``IS_S``, ``IS_IS``, ``S`` (rows in the set) and
    ``IS`` (rows in the complement). Contiguous neighbor sets give
    basic-slicing views; otherwise numpy returns copies.
    """
    M = np.asarray(M)
    if M.shape[0] != view.n:
        raise DimensionError("M", f"expected {view.n} rows, got {M.shape[0]}")
    S = view.neighbor_set
    IS = view.complement
    blocks = {"S": _take_rows(M, S), "IS": _take_rows(M, IS)}
    if M.ndim == 2 and M.shape[1] == view.n:
        blocks["SS"] = M[np.ix_(S, S)]
        blocks["S_IS"] = M[np.ix_(S, IS)]
        blocks["IS_S"] = M[np.ix_(IS, S)]
        blocks["IS_IS"] = M[np.ix_(IS, IS)]
    return blocks


def _take_rows(M: np.ndarray, idx: np.ndarray) -> np.ndarray:
    if idx.size and np.array_equal(idx, np.arange(idx[0], idx[0] + idx.size)):
        return M[idx[0]: idx[0] + idx.size]
    return M[idx]
