"""Model and partial-view primitives."""

from .model import (
    AdjacencyMatrix,
    LatentModel,
    assemble_theta,
    logit,
    neg_log_likelihood,
    sigmoid,
)
from .partial_view import (
    PartialView,
    apply_centering,
    build_partial_view,
    full_view,
    mask_transform,
    submatrix_views,
    view_from_neighbor_set,
)

__all__ = [
    'AdjacencyMatrix',
    'LatentModel',
    'PartialView',
    'apply_centering',
    'assemble_theta',
    'build_partial_view',
    'full_view',
    'logit',
    'mask_transform',
    'neg_log_likelihood',
    'sigmoid',
    'submatrix_views',
    'view_from_neighbor_set',
]
