"""Degree/distance baselines: preferential attachment and gravity-style decays.

* ``PA``       ``min(1, k_i k_j / (2 sum_t k_t))``
* ``ExpDist``  ``min(1, k_i k_j exp(-D_ij / d_hat) / Z)``
* ``EmpDist``  ``min(1, k_i k_j f(D_ij) / Z)`` with ``f`` the empirical
  link frequency in equal-count distance bins

``Z`` is set so the unclamped scores over all training pairs sum to the
training edge count.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .graph import pairwise_distances
from .validation import all_pairs, check_graph, check_pairs

__all__ = ["GravityBaseline", "fit_baseline", "BASELINES"]

BASELINES = ("PA", "ExpDist", "EmpDist")


class GravityBaseline(BaseEstimator):
    """Closed-form link-probability baseline fitted on a training graph.

    Parameters
    ----------
    kind : {"PA", "ExpDist", "EmpDist"}
    n_bins : int
        Number of equal-count distance bins for ``EmpDist``.

    Attributes
    ----------
    d_hat_ : float
        Mean linked distance (``ExpDist``).
    bin_edges_, bin_prob_ : ndarray
        Distance bin edges and per-bin link probability (``EmpDist``).
    Z_ : float
        Normaliser.
    """

    def __init__(self, kind="PA", n_bins=20):
        self.kind = kind
        self.n_bins = n_bins

    def fit(self, graph, y=None):
        if self.kind not in BASELINES:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        check_graph(graph, min_edges=1)
        self.graph_ = graph
        self.degrees_ = graph.degrees.astype(float)
        self.distances_ = pairwise_distances(graph)
        m = graph.n_edges
        pairs = all_pairs(graph.n_nodes)
        e = graph.edges
        self.d_hat_ = float(self.distances_.pairs(e[:, 0], e[:, 1]).mean())
        self.bin_edges_ = None
        self.bin_prob_ = None
        if self.kind == "PA":
            self.Z_ = 2.0 * graph.total_degree
            return self
        if self.kind == "ExpDist":
            if self.d_hat_ <= 0:
                raise ValueError("mean linked distance must be positive")
        else:
            self._fit_bins(graph, pairs)
        raw = self._unnormalised(pairs)
        self.Z_ = float(raw.sum() / m)
        return self

    def _fit_bins(self, graph, pairs):
        d = self.distances_.pairs(pairs[:, 0], pairs[:, 1])
        linked = graph.adjacency[pairs[:, 0], pairs[:, 1]]
        edges = np.unique(np.quantile(d, np.linspace(0.0, 1.0, self.n_bins + 1)))
        if len(edges) < 2:
            edges = np.array([d.min(), d.min() + 1.0])
        n_b = len(edges) - 1
        idx = self._bin_index(d, edges)
        n_pairs = np.bincount(idx, minlength=n_b).astype(float)
        n_linked = np.bincount(idx, weights=linked.astype(float), minlength=n_b)
        if np.any(n_pairs == 0):
            raise ValueError("empty distance bin")
        if np.any(n_linked == 0):
            # add-one smoothing, rescaled so the expected link count is preserved
            m = n_linked.sum()
            prob = (n_linked + 1.0) / n_pairs * (m / (m + n_b))
        else:
            prob = n_linked / n_pairs
        self.bin_edges_ = edges
        self.bin_prob_ = np.clip(prob, 0.0, 1.0)
        self.bin_pair_counts_ = n_pairs
        self.bin_link_counts_ = n_linked

    @staticmethod
    def _bin_index(d, edges):
        return np.clip(np.searchsorted(edges, d, side="right") - 1, 0, len(edges) - 2)

    def _decay(self, d):
        if self.kind == "ExpDist":
            return np.exp(-d / self.d_hat_)
        if self.kind == "EmpDist":
            return self.bin_prob_[self._bin_index(d, self.bin_edges_)]
        return np.ones_like(d)

    def _unnormalised(self, pairs):
        k = self.degrees_
        i, j = pairs[:, 0], pairs[:, 1]
        d = self.distances_.pairs(i, j)
        return k[i] * k[j] * self._decay(d)

    def predict_proba(self, pairs):
        """Clamped link scores for index pairs."""
        check_is_fitted(self, "Z_")
        pairs = check_pairs(pairs, self.graph_.n_nodes)
        return np.minimum(1.0, self._unnormalised(pairs) / self.Z_)

    def expected_matrix(self):
        """Full (n, n) matrix of clamped expectations, diagonal included."""
        check_is_fitted(self, "Z_")
        k = self.degrees_
        d = self.distances_.to_array()
        raw = np.outer(k, k) * self._decay(d)
        return np.minimum(1.0, raw / self.Z_)


def fit_baseline(kind, train_graph, **params):
    return GravityBaseline(kind=kind, **params).fit(train_graph)
