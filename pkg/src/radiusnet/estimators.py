"""Estimator front-end for the Radius and Radius+Comms models."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from .model import ModelContext, PriorConfig, default_k_comm
from .sampler import (
    PosteriorTrace,
    SamplerConfig,
    derive_seed,
    initialize_map,
    make_rng,
    run_chain,
)
from .validation import check_graph, check_pairs

__all__ = ["RadiusModel", "RadiusCommsModel", "predictive_link_probability", "map_link_probability", "score_pairs"]


def score_pairs(trace: PosteriorTrace, ctx: ModelContext, pairs, method="predictive"):
    """Link probabilities for index pairs from a fitted trace.

    ``method="predictive"`` averages over all retained samples;
    ``method="map"`` plugs in the maximum-posterior sample.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    if method not in ("predictive", "map"):
        raise ValueError(f"unknown scoring method {method!r}")
    pairs = check_pairs(pairs, ctx.n)
    comms = trace.has_communities
    n_s = len(trace)
    phis = trace.phi if comms else np.ones(n_s)
    labels = trace.labels if comms else np.zeros((n_s, ctx.n), dtype=np.int64)
    return _kernels.predictive_probs(
        np.ascontiguousarray(ctx.D), np.ascontiguousarray(ctx.pam),
        np.ascontiguousarray(pairs[:, 0]), np.ascontiguousarray(pairs[:, 1]),
        trace.alpha, trace.gamma, phis, np.ascontiguousarray(trace.radii),
        np.ascontiguousarray(labels), comms, method == "map", trace.map_index,
    )


def predictive_link_probability(trace, ctx_train, i, j):
    return float(score_pairs(trace, ctx_train, [[i, j]], "predictive")[0])


def map_link_probability(trace, ctx_train, i, j):
    return float(score_pairs(trace, ctx_train, [[i, j]], "map")[0])


class RadiusModel(BaseEstimator):
    """Latent-radius spatial link model fitted by MCMC.

    Parameters
    ----------
    communities : bool
        Fit Radius+Comms (labels and ``phi``) instead of Radius.
    degree_term : bool
        Include the preferential-attachment term.
    priors : PriorConfig or dict, optional
        Full prior config, or overrides on top of graph-scaled defaults.
    k_comm : int, optional
        Number of communities; defaults to 10% of the nodes.
    sampler : SamplerConfig, optional
        Main-chain settings.
    init_iters : int
        Length of each MAP-initialisation chain.
    init_restarts : int
        Extra initialisation chains started from prior draws. The main
        chain starts from the highest-posterior state over all of them and
        the regression-based warm start (or ``fit``'s ``init``).
    scoring : {"predictive", "map"}
    random_state : int, optional
        Overrides ``sampler.seed``.

    Attributes
    ----------
    context_ : ModelContext
    priors_ : PriorConfig
    init_trace_, trace_ : PosteriorTrace
    """

    def __init__(self, communities=False, degree_term=True, priors=None, k_comm=None,
                 sampler=None, init_iters=500, init_restarts=1, scoring="predictive", random_state=None):
        self.communities = communities
        self.degree_term = degree_term
        self.priors = priors
        self.k_comm = k_comm
        self.sampler = sampler
        self.init_iters = init_iters
        self.init_restarts = init_restarts
        self.scoring = scoring
        self.random_state = random_state

    def _resolve_priors(self, graph):
        k = self.k_comm if self.k_comm is not None else default_k_comm(graph.n_nodes)
        if isinstance(self.priors, PriorConfig):
            return self.priors
        overrides = dict(self.priors or {})
        overrides.setdefault("k_comm", k)
        return PriorConfig.for_graph(graph, **overrides)

    def fit(self, graph, y=None, init=None):
        check_graph(graph)
        cfg = self.sampler if self.sampler is not None else SamplerConfig()
        if self.random_state is not None:
            cfg = SamplerConfig(**{**cfg.to_dict(), "seed": int(self.random_state)})
        self.context_ = ModelContext(graph, degree_term=self.degree_term)
        self.priors_ = self._resolve_priors(graph)
        rng = make_rng(cfg.seed)
        start = "warm" if init is None else init
        self.init_trace_ = None
        if self.init_iters > 0:
            short = SamplerConfig(**{**cfg.to_dict(), "total_iters": self.init_iters, "burn_in": 0, "thin": 1})
            best = None
            for k, s0 in enumerate([start] + ["random"] * int(self.init_restarts)):
                r = rng if k == 0 else make_rng(derive_seed(cfg.seed, 1, k))
                state, tr = initialize_map(self.context_, self.priors_, short,
                                           communities=self.communities, rng=r, init=s0)
                if best is None or tr.log_posts.max() > best[1].log_posts.max():
                    best = (state, tr)
            start, self.init_trace_ = best
            cfg = cfg.with_proposals(self.init_trace_.proposal_sigmas)
        self.sampler_ = cfg
        self.trace_ = run_chain(self.context_, self.priors_, cfg, init=start,
                                communities=self.communities, rng=rng)
        return self

    @property
    def map_state_(self):
        check_is_fitted(self, "trace_")
        return self.trace_.map_state

    def predict_proba(self, pairs, method=None):
        check_is_fitted(self, "trace_")
        return score_pairs(self.trace_, self.context_, pairs, method or self.scoring)

    def expected_matrix(self, method=None):
        """(n, n) link-probability matrix, diagonal evaluated at zero distance."""
        check_is_fitted(self, "trace_")
        n = self.context_.n
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        pairs = np.column_stack([i.ravel(), j.ravel()])
        trace = self.trace_
        comms = trace.has_communities
        n_s = len(trace)
        p = _kernels.predictive_probs(
            np.ascontiguousarray(self.context_.D), np.ascontiguousarray(self.context_.pam),
            pairs[:, 0].copy(), pairs[:, 1].copy(), trace.alpha, trace.gamma,
            trace.phi if comms else np.ones(n_s), np.ascontiguousarray(trace.radii),
            np.ascontiguousarray(trace.labels) if comms else np.zeros((n_s, n), dtype=np.int64),
            comms, (method or self.scoring) == "map", trace.map_index,
        )
        return p.reshape(n, n)


class RadiusCommsModel(RadiusModel):
    """:class:`RadiusModel` with the community term switched on."""

    def __init__(self, communities=True, degree_term=True, priors=None, k_comm=None,
                 sampler=None, init_iters=500, init_restarts=1, scoring="predictive", random_state=None):
        super().__init__(communities=communities, degree_term=degree_term, priors=priors,
                         k_comm=k_comm, sampler=sampler, init_iters=init_iters, init_restarts=init_restarts,
                         scoring=scoring, random_state=random_state)
