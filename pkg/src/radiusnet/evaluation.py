"""Cross-validated link prediction, ROC AUC and quantile breakdowns."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata
from sklearn.base import clone

from .baselines import BASELINES, GravityBaseline
from .estimators import RadiusModel
from .graph import SpatialGraph, pairwise_distances
from .sampler import derive_seed, make_rng

__all__ = [
    "LinkScoreSet",
    "CVConfig",
    "CVReport",
    "kfold_split",
    "roc_auc",
    "quantile_auc",
    "make_estimator",
    "score_fold",
    "crossval",
    "METHODS",
]

METHODS = ("Radius", "RadiusComms") + BASELINES


@dataclass
class LinkScoreSet:
    """Scored node pairs with truth labels and pair covariates."""

    i: np.ndarray
    j: np.ndarray
    score: np.ndarray
    truth: np.ndarray
    distance: np.ndarray
    deg_product: np.ndarray

    def __post_init__(self):
        self.i = np.asarray(self.i, dtype=np.int64)
        self.j = np.asarray(self.j, dtype=np.int64)
        self.score = np.asarray(self.score, dtype=float)
        self.truth = np.asarray(self.truth, dtype=np.int8)
        self.distance = np.asarray(self.distance, dtype=float)
        self.deg_product = np.asarray(self.deg_product, dtype=float)
        if np.any(self.i == self.j):
            raise ValueError("scored pairs must join distinct nodes")
        if np.any((self.score < 0) | (self.score > 1)) or np.any(np.isnan(self.score)):
            raise ValueError("scores must lie in [0, 1]")
        lo = np.minimum(self.i, self.j)
        hi = np.maximum(self.i, self.j)
        if len(np.unique(np.column_stack([lo, hi]), axis=0)) != len(lo):
            raise ValueError("duplicate unordered pair")

    def __len__(self):
        return len(self.score)

    def subset(self, mask):
        return LinkScoreSet(self.i[mask], self.j[mask], self.score[mask], self.truth[mask],
                            self.distance[mask], self.deg_product[mask])

    def to_csv(self, path, node_ids=None):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "score", "truth", "distance", "deg_product"])
            for row in zip(self.i, self.j, self.score, self.truth, self.distance, self.deg_product):
                a, b = (node_ids[row[0]], node_ids[row[1]]) if node_ids is not None else (int(row[0]), int(row[1]))
                w.writerow([a, b, repr(float(row[2])), int(row[3]), repr(float(row[4])), repr(float(row[5]))])


def kfold_split(g: SpatialGraph, folds=10, seed=0):
    """Partition the edges into ``folds`` random groups.

    Returns a list of ``(train_graph, test_edges)``; each train graph keeps
    every node and drops its fold's edges.
    """
    if folds < 2:
        raise ValueError("need at least two folds")
    edges = g.edges
    if folds > len(edges):
        raise ValueError(f"{folds} folds but only {len(edges)} edges")
    perm = make_rng(seed).permutation(len(edges))
    out = []
    for part in np.array_split(perm, folds):
        mask = np.ones(len(edges), dtype=bool)
        mask[part] = False
        out.append((g.with_edges(edges[mask]), edges[np.sort(part)]))
    return out


def roc_auc(scores, truth=None):
    """Probability a random positive outscores a random negative (ties count half)."""
    if isinstance(scores, LinkScoreSet):
        scores, truth = scores.score, scores.truth
    s = np.asarray(scores, dtype=float)
    t = np.asarray(truth).astype(bool)
    n_pos = int(t.sum())
    n_neg = len(t) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    ranks = rankdata(s)
    u = ranks[t].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def quantile_auc(scores: LinkScoreSet, axis="distance", bins=5):
    """AUC within bins that split the positives evenly along ``axis``.

    Pairs are ordered by ``(value, position)``; bin boundaries fall after
    every ``n_pos / bins`` positives and negatives follow the same order.
    Bins without a negative report ``None``.

    Returns
    -------
    list of dict with keys ``bin``, ``lower``, ``upper``, ``n_pos``, ``n_neg``, ``auc``.
    """
    if axis not in ("distance", "degree_product"):
        raise ValueError(f"unknown axis {axis!r}")
    values = scores.distance if axis == "distance" else scores.deg_product
    truth = scores.truth.astype(bool)
    n_pos = int(truth.sum())
    if n_pos < bins:
        raise ValueError(f"need at least {bins} positives, have {n_pos}")
    order = np.lexsort((np.arange(len(values)), values))
    pos_rank = np.cumsum(truth[order])
    # positives 1..n_pos split as np.array_split would
    sizes = [len(a) for a in np.array_split(np.arange(n_pos), bins)]
    cuts = np.cumsum(sizes)[:-1]
    bin_of = np.searchsorted(cuts, pos_rank - truth[order], side="right")
    assign = np.empty(len(values), dtype=np.int64)
    assign[order] = bin_of
    out = []
    for b in range(bins):
        m = assign == b
        sub = scores.subset(m)
        p = int(sub.truth.sum())
        q = len(sub) - p
        vals = values[m]
        out.append({
            "bin": b + 1,
            "lower": float(vals.min()) if len(vals) else None,
            "upper": float(vals.max()) if len(vals) else None,
            "n_pos": p,
            "n_neg": q,
            "auc": roc_auc(sub) if p and q else None,
        })
    return out


@dataclass
class CVConfig:
    """Cross-validation protocol.

    ``neg_ratio=None`` scores every non-edge of the full graph as a negative;
    a number samples that many negatives per positive instead.
    """

    folds: int = 10
    seed: int = 0
    bins: int = 5
    scoring: str = "predictive"
    neg_ratio: float | None = None
    jobs: int = 1

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class CVReport:
    method: str
    seed: int
    folds: list = field(default_factory=list)
    negatives: str = "all non-edges of the full graph"

    @property
    def fold_auc(self):
        return [f["auc"] for f in self.folds]

    @property
    def mean_auc(self):
        return float(np.mean(self.fold_auc))

    def mean_quantile_auc(self, axis):
        """Per-bin AUC averaged over the folds where it is defined."""
        n_bins = len(self.folds[0]["quantiles"][axis])
        out = []
        for b in range(n_bins):
            vals = [f["quantiles"][axis][b]["auc"] for f in self.folds]
            vals = [v for v in vals if v is not None]
            out.append(float(np.mean(vals)) if vals else None)
        return out

    def to_dict(self):
        return {
            "method": self.method,
            "seed": self.seed,
            "negatives": self.negatives,
            "mean_auc": self.mean_auc,
            "sd_auc": float(np.std(self.fold_auc)),
            "fold_auc": self.fold_auc,
            "mean_quantile_auc": {
                "distance": self.mean_quantile_auc("distance"),
                "degree_product": self.mean_quantile_auc("degree_product"),
            },
            "folds": self.folds,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(method=d["method"], seed=d["seed"], folds=d["folds"], negatives=d["negatives"])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def make_estimator(method, model_params=None):
    """Unfitted estimator for a method name."""
    params = dict(model_params or {})
    if method in BASELINES:
        return GravityBaseline(kind=method)
    if method == "Radius":
        return RadiusModel(communities=False, **params)
    if method == "RadiusComms":
        return RadiusModel(communities=True, **params)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def _test_pairs(g, test_edges, neg_ratio, rng):
    n = g.n_nodes
    iu = np.triu_indices(n, k=1)
    non = ~g.adjacency[iu]
    neg = np.column_stack([iu[0][non], iu[1][non]])
    if neg_ratio is not None:
        k = min(len(neg), int(round(neg_ratio * len(test_edges))))
        neg = neg[np.sort(rng.choice(len(neg), size=k, replace=False))]
    pairs = np.vstack([test_edges, neg]).astype(np.int64)
    truth = np.r_[np.ones(len(test_edges), dtype=np.int8), np.zeros(len(neg), dtype=np.int8)]
    return pairs, truth


def score_fold(g, train, test_edges, estimator, seed, neg_ratio=None, scoring="predictive"):
    """Fit ``estimator`` on ``train`` and score held-out edges against non-edges of ``g``."""
    est = clone(estimator)
    if isinstance(est, RadiusModel):
        est.set_params(random_state=seed, scoring=scoring)
    est.fit(train)
    pairs, truth = _test_pairs(g, test_edges, neg_ratio, make_rng(derive_seed(seed, 1)))
    scores = est.predict_proba(pairs)
    d = pairwise_distances(g).pairs(pairs[:, 0], pairs[:, 1])
    k = train.degrees.astype(float)
    return LinkScoreSet(pairs[:, 0], pairs[:, 1], scores, truth, d, k[pairs[:, 0]] * k[pairs[:, 1]])


def _run_fold(args):
    g, train, test_edges, estimator, seed, cfg, f = args
    ss = score_fold(g, train, test_edges, estimator, seed, cfg.neg_ratio, cfg.scoring)
    rec = {
        "fold": f,
        "seed": seed,
        "n_pos": int(ss.truth.sum()),
        "n_neg": int(len(ss) - ss.truth.sum()),
        "auc": roc_auc(ss),
        "quantiles": {
            "distance": quantile_auc(ss, "distance", cfg.bins),
            "degree_product": quantile_auc(ss, "degree_product", cfg.bins),
        },
    }
    return rec, ss


def crossval(g: SpatialGraph, model="Radius", cfg: CVConfig | None = None, model_params=None,
             return_scores=False):
    """k-fold link-prediction cross-validation for one method.

    ``model`` is a method name from :data:`METHODS` or an unfitted estimator.
    Fold ``f`` is fitted with seed ``derive_seed(cfg.seed, f)``.
    """
    cfg = cfg or CVConfig()
    if isinstance(model, str):
        name, estimator = model, make_estimator(model, model_params)
    else:
        name, estimator = type(model).__name__, model
    splits = kfold_split(g, cfg.folds, cfg.seed)
    jobs = [(g, train, test, estimator, derive_seed(cfg.seed, f), cfg, f)
            for f, (train, test) in enumerate(splits)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_run_fold, jobs))
    else:
        results = [_run_fold(j) for j in jobs]
    report = CVReport(method=name, seed=cfg.seed, folds=[r for r, _ in results])
    if cfg.neg_ratio is not None:
        report.negatives = f"{cfg.neg_ratio} sampled non-edges per positive"
    if return_scores:
        return report, [s for _, s in results]
    return report
