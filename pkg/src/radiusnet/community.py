"""Community detection: posterior label extraction, generalised modularity, NMI."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._louvain import louvain_labels
from .baselines import GravityBaseline
from .estimators import RadiusModel
from .graph import SpatialGraph
from .sampler import PosteriorTrace, make_rng

__all__ = [
    "Partition",
    "NullModel",
    "NULL_KINDS",
    "COMMUNITY_METHODS",
    "align_labels",
    "extract_communities",
    "build_null",
    "modularity",
    "louvain_optimize",
    "nmi",
    "comparison_matrix",
    "write_partition",
]

NULL_KINDS = ("PA", "ExpDist", "EmpDist", "RadiusFit")
# method name -> null model kind; RadiusComms detects communities itself
COMMUNITY_METHODS = {"Radius": "RadiusFit", "PA": "PA", "ExpDist": "ExpDist",
                     "EmpDist": "EmpDist", "RadiusComms": None}


@dataclass
class Partition:
    """Per-node labels; 0 marks don't-care nodes for Radius+Comms output."""

    labels: np.ndarray
    origin: str = ""

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if np.any(self.labels < 0):
            raise ValueError("labels must be non-negative")

    def __len__(self):
        return len(self.labels)

    @property
    def n_communities(self):
        return len(np.unique(self.labels[self.labels > 0]))


@dataclass
class NullModel:
    """Expected link probabilities ``P`` (n x n, symmetric, clamped to [0, 1]).

    ``factor`` optionally gives ``(f, s)`` with ``P = outer(f, f) / s``
    exactly, which lets modularity use per-community sums.
    """

    kind: str
    P: np.ndarray
    factor: tuple | None = None

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        if not np.allclose(self.P, self.P.T):
            raise ValueError("null model must be symmetric")
        if np.any((self.P < 0) | (self.P > 1)):
            raise ValueError("null model probabilities must lie in [0, 1]")


def _labels(p):
    return p.labels if isinstance(p, Partition) else np.asarray(p, dtype=np.int64)


def align_labels(labels, reference, k_comm):
    """Relabel communities ``1..k_comm`` of ``labels`` to best overlap ``reference``.

    Label 0 is never permuted.
    """
    labels = np.asarray(labels)
    overlap = np.zeros((k_comm, k_comm))
    m = (labels > 0) & (reference > 0)
    np.add.at(overlap, (labels[m] - 1, reference[m] - 1), 1)
    rows, cols = linear_sum_assignment(-overlap)
    mapping = np.zeros(k_comm + 1, dtype=np.int64)
    mapping[rows + 1] = cols + 1
    return mapping[labels]


def extract_communities(trace: PosteriorTrace, k_comm=None) -> Partition:
    """Posterior-mode label per node after aligning every sample to the MAP sample.

    Ties between labels go to the smaller label, so 0 wins any tie.
    """
    if not trace.has_communities:
        raise ValueError("trace has no community labels")
    if len(trace) == 0:
        raise ValueError("empty trace")
    labels = trace.labels
    k = int(labels.max()) if k_comm is None else int(k_comm)
    k = max(k, 1)
    ref = labels[trace.map_index]
    n = labels.shape[1]
    counts = np.zeros((n, k + 1), dtype=np.int64)
    rows = np.arange(n)
    for s in range(len(trace)):
        aligned = align_labels(labels[s], ref, k)
        counts[rows, aligned] += 1
    return Partition(counts.argmax(axis=1), origin="RadiusComms")


def build_null(kind, g: SpatialGraph, trace: PosteriorTrace | None = None, fitted: RadiusModel | None = None) -> NullModel:
    """Expected-link matrix for modularity.

    ``RadiusFit`` needs a fitted Radius model (or its trace) and uses the
    posterior predictive probability.
    """
    if kind == "PA":
        if g.n_edges == 0:
            raise ValueError("PA null needs at least one edge")
        k = g.degrees.astype(float)
        raw = np.outer(k, k) / g.total_degree
        # rank one unless a hub pair gets clamped
        factor = (k, float(g.total_degree)) if raw.max() <= 1.0 else None
        return NullModel(kind, np.minimum(1.0, raw), factor)
    if kind in ("ExpDist", "EmpDist"):
        return NullModel(kind, GravityBaseline(kind=kind).fit(g).expected_matrix())
    if kind == "RadiusFit":
        if fitted is None:
            if trace is None:
                raise ValueError("RadiusFit null needs a fitted Radius trace")
            fitted = RadiusModel(communities=trace.has_communities)
            from .model import ModelContext

            fitted.context_ = ModelContext(g)
            fitted.trace_ = trace
        P = fitted.expected_matrix(method="predictive")
        return NullModel(kind, np.clip(0.5 * (P + P.T), 0.0, 1.0))
    raise ValueError(f"unknown null kind {kind!r}")


def modularity(g: SpatialGraph, partition, null: NullModel, renormalize=False) -> float:
    """``Q = (1/2m) sum_ij (A_ij - P_ij) [c_i == c_j]`` over all ordered pairs.

    The diagonal is included, which makes the one-community partition score
    exactly 0 under the PA null. ``renormalize`` rescales ``P`` to total ``2m``.
    """
    m = g.n_edges
    if m == 0:
        raise ValueError("modularity needs at least one edge")
    c = _labels(partition)
    if len(c) != g.n_nodes:
        raise ValueError("partition size does not match the graph")
    _, inv = np.unique(c, return_inverse=True)
    S = np.zeros((len(c), inv.max() + 1))
    S[np.arange(len(c)), inv] = 1.0
    if null.factor is not None and not renormalize:
        f, s = null.factor
        a_in = np.trace(S.T @ g.adjacency.astype(float) @ S)
        p_in = float(((f @ S) ** 2).sum() / s)
        return float((a_in - p_in) / (2.0 * m))
    P = null.P
    if renormalize:
        P = P * (2.0 * m / P.sum())
    B = g.adjacency.astype(float) - P
    return float(np.trace(S.T @ B @ S) / (2.0 * m))


def louvain_optimize(g: SpatialGraph, null: NullModel, seed=0, tol=1e-12, renormalize=False) -> Partition:
    """Two-phase Louvain optimisation of the generalised modularity.

    Local moves visit nodes in a seeded random order; communities are then
    aggregated and the process repeats until no move improves ``Q`` by more
    than ``tol``. Labels are ``1..C`` ordered by each community's smallest node.
    """
    m = g.n_edges
    if m == 0:
        raise ValueError("modularity needs at least one edge")
    P = null.P
    if renormalize:
        P = P * (2.0 * m / P.sum())
    B = g.adjacency.astype(float) - P
    return Partition(louvain_labels(B, make_rng(seed), tol), origin="louvain")


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(p1, p2, restrict_to=None) -> float:
    """Normalised mutual information, geometric-mean normalisation.

    When either side has zero entropy the value is 1.0 if both do (two
    trivial partitions agree) and 0.0 otherwise.
    """
    a = _labels(p1)
    b = _labels(p2)
    if len(a) != len(b):
        raise ValueError("partitions cover different node sets")
    if restrict_to is not None:
        idx = np.asarray(restrict_to)
        if idx.dtype == bool:
            idx = np.nonzero(idx)[0]
        if len(idx) == 0:
            raise ValueError("empty restriction set")
        a, b = a[idx], b[idx]
    if len(a) == 0:
        raise ValueError("empty partitions")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1)
    ha = _entropy(table.sum(axis=1))
    hb = _entropy(table.sum(axis=0))
    if ha == 0 or hb == 0:
        return 1.0 if ha == hb else 0.0
    pij = table / table.sum()
    outer = np.outer(pij.sum(axis=1), pij.sum(axis=0))
    nz = pij > 0
    mi = float((pij[nz] * np.log(pij[nz] / outer[nz])).sum())
    return float(min(1.0, max(0.0, mi / np.sqrt(ha * hb))))


def comparison_matrix(g: SpatialGraph, methods, fits=None, seed=0, model_params=None):
    """Run each method and compare all pairs of partitions by NMI.

    ``fits`` may map ``"Radius"``/``"RadiusComms"`` to fitted
    :class:`RadiusModel` instances; missing ones are fitted here.

    Returns
    -------
    dict with ``methods``, ``partitions``, ``nmi`` (all nodes) and, when
    ``RadiusComms`` is among the methods, ``nmi_restricted`` over the nodes it
    placed in a community plus ``restricted_size``.
    """
    methods = list(methods)
    if not methods:
        raise ValueError("need at least one method")
    fits = dict(fits or {})
    partitions = {}
    for name in methods:
        if name not in COMMUNITY_METHODS:
            raise ValueError(f"unknown community method {name!r}")
        if name in ("Radius", "RadiusComms") and name not in fits:
            fits[name] = RadiusModel(communities=name == "RadiusComms", random_state=seed,
                                     **(model_params or {})).fit(g)
        if name == "RadiusComms":
            partitions[name] = extract_communities(fits[name].trace_, fits[name].priors_.k_comm)
        else:
            null = build_null(COMMUNITY_METHODS[name], g, fitted=fits.get("Radius"))
            partitions[name] = louvain_optimize(g, null, seed=seed)
            partitions[name].origin = name
    k = len(methods)
    full = np.ones((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            full[a, b] = full[b, a] = nmi(partitions[methods[a]], partitions[methods[b]])
    out = {"methods": methods, "partitions": partitions, "nmi": full,
           "normalization": "geometric", "nmi_restricted": None, "restricted_size": None}
    if "RadiusComms" in partitions:
        keep = partitions["RadiusComms"].labels > 0
        out["restricted_size"] = int(keep.sum())
        if keep.any():
            sub = np.ones((k, k))
            for a in range(k):
                for b in range(a + 1, k):
                    sub[a, b] = sub[b, a] = nmi(partitions[methods[a]], partitions[methods[b]], keep)
            out["nmi_restricted"] = sub
    out["fits"] = fits
    return out


def write_partition(partition, node_ids, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        for nid, c in zip(node_ids, _labels(partition)):
            w.writerow([nid, int(c)])
