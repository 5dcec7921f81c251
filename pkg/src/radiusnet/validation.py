"""Input checks shared by the estimators."""

import numpy as np
from sklearn.utils import check_array

from .graph import SpatialGraph


def check_graph(g, min_edges=0):
    if not isinstance(g, SpatialGraph):
        raise TypeError(f"expected a SpatialGraph, got {type(g).__name__}")
    if g.n_edges < min_edges:
        raise ValueError(f"graph needs at least {min_edges} edge(s), has {g.n_edges}")
    return g


def check_pairs(pairs, n_nodes):
    """Validate an (m, 2) array of node-index pairs."""
    pairs = np.asarray(pairs)
    if pairs.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = check_array(pairs, dtype=np.int64)
    if pairs.shape[1] != 2:
        raise ValueError(f"pairs must have shape (m, 2), got {pairs.shape}")
    if pairs.min() < 0 or pairs.max() >= n_nodes:
        raise ValueError("pair index out of range")
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise ValueError("pairs must join distinct nodes")
    return pairs


def all_pairs(n):
    """Every unordered pair ``(i, j)`` with ``i < j``."""
    i, j = np.triu_indices(n, k=1)
    return np.column_stack([i, j])
