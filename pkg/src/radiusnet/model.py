"""Likelihood, prior and posterior of the Radius and Radius+Comms models.

The link logit for a pair ``(i, j)`` is::

    eta_ij = (r_i + r_j - D_ij) / alpha + beta(c_i, c_j) + (pa_ij - M) / gamma

with ``pa_ij = k_i k_j / sum_z k_z``. ``beta`` vanishes for the Radius model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import log_ndtr

from .graph import SpatialGraph, pairwise_distances

__all__ = [
    "ParamState",
    "PriorConfig",
    "ModelContext",
    "GLOBAL_PARAMS",
    "default_k_comm",
    "compute_M",
    "log_sigmoid",
    "beta_term",
    "link_logit",
    "link_probability",
    "pair_log_terms",
    "log_likelihood",
    "row_log_likelihood",
    "truncnorm_logpdf",
    "log_prior",
    "log_posterior",
]

GLOBAL_PARAMS = ("alpha", "gamma", "phi")


def default_k_comm(n):
    """Number of non-trivial communities: 10% of the node count, at least one."""
    return max(1, math.ceil(0.10 * n))


@dataclass
class ParamState:
    """One configuration of the latent variables.

    ``phi`` and ``labels`` are ``None`` for the Radius model.
    """

    alpha: float
    gamma: float
    radii: np.ndarray
    phi: float | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.alpha = float(self.alpha)
        self.gamma = float(self.gamma)
        self.radii = np.asarray(self.radii, dtype=float)
        if self.phi is not None:
            self.phi = float(self.phi)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)

    @property
    def has_communities(self):
        return self.labels is not None

    def copy(self):
        return replace(
            self,
            radii=self.radii.copy(),
            labels=None if self.labels is None else self.labels.copy(),
        )

    def is_valid(self, k_comm=None):
        ok = self.alpha > 0 and self.gamma > 0 and bool(np.all(self.radii > 0))
        if self.labels is not None:
            ok = ok and self.phi is not None and self.phi > 0
            if k_comm is not None:
                ok = ok and bool(np.all((self.labels >= 0) & (self.labels <= k_comm)))
        return bool(ok)

    def to_dict(self):
        d = {"alpha": self.alpha, "gamma": self.gamma}
        if self.phi is not None:
            d["phi"] = self.phi
        d["radii"] = [float(r) for r in self.radii]
        if self.labels is not None:
            d["labels"] = [int(c) for c in self.labels]
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            alpha=d["alpha"], gamma=d["gamma"], radii=d["radii"],
            phi=d.get("phi"), labels=d.get("labels"),
        )


@dataclass
class PriorConfig:
    """Truncated-normal hyperparameters and the label prior.

    ``theta`` defaults to uniform over ``{0..k_comm}``.
    """

    mu_alpha: float = 1.0
    sigma_alpha: float = 10.0
    mu_gamma: float = 1.0
    sigma_gamma: float = 10.0
    mu_phi: float = 1.0
    sigma_phi: float = 10.0
    mu_r: float = 1.0
    sigma_r: float = 10.0
    k_comm: int = 1
    theta: np.ndarray | None = None

    def __post_init__(self):
        for name in ("alpha", "gamma", "phi", "r"):
            if not getattr(self, f"sigma_{name}") > 0:
                raise ValueError(f"prior sigma for {name} must be positive")
        if int(self.k_comm) < 1:
            raise ValueError("k_comm must be a positive integer")
        self.k_comm = int(self.k_comm)
        if self.theta is None:
            self.theta = np.full(self.k_comm + 1, 1.0 / (self.k_comm + 1))
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.shape != (self.k_comm + 1,):
            raise ValueError("theta must have k_comm + 1 entries")
        if np.any(self.theta < 0) or abs(self.theta.sum() - 1.0) > 1e-12:
            raise ValueError("theta must be a probability vector")

    @classmethod
    def for_graph(cls, g: SpatialGraph, **overrides):
        """Weak priors scaled to the graph's linked-pair distance."""
        scale = _distance_scale(g)
        params = dict(
            mu_alpha=scale, sigma_alpha=2.0 * scale,
            mu_r=scale / 2.0, sigma_r=2.0 * scale,
            k_comm=default_k_comm(g.n_nodes),
        )
        params.update(overrides)
        return cls(**params)

    def hyper(self, name):
        return getattr(self, f"mu_{name}"), getattr(self, f"sigma_{name}")

    @property
    def log_theta(self):
        with np.errstate(divide="ignore"):
            return np.log(self.theta)

    def to_dict(self):
        d = {k: getattr(self, k) for k in (
            "mu_alpha", "sigma_alpha", "mu_gamma", "sigma_gamma",
            "mu_phi", "sigma_phi", "mu_r", "sigma_r", "k_comm")}
        d["theta"] = [float(t) for t in self.theta]
        return d


def _distance_scale(g):
    if g.n_nodes < 2:
        return 1.0
    d = pairwise_distances(g)
    if g.n_edges:
        e = g.edges
        s = float(d.pairs(e[:, 0], e[:, 1]).mean())
    else:
        iu = np.triu_indices(g.n_nodes, k=1)
        s = float(d.pairs(*iu).mean())
    return s if s > 0 else 1.0


def compute_M(g: SpatialGraph) -> float:
    """Midpoint of the mean normalised degree product over linked and unlinked pairs."""
    n = g.n_nodes
    iu = np.triu_indices(n, k=1)
    linked = g.adjacency[iu]
    if not linked.any() or linked.all():
        raise ValueError("M needs at least one linked and one unlinked pair")
    k = g.degrees.astype(float)
    pa = (k[iu[0]] * k[iu[1]]) / g.total_degree
    return 0.5 * (pa[linked].mean() + pa[~linked].mean())


@dataclass(eq=False)
class ModelContext:
    """Graph-derived constants shared by every likelihood evaluation.

    Parameters
    ----------
    graph : SpatialGraph
    degree_term : bool
        When False the ``(pa - M) / gamma`` contribution is dropped.
    M : float, optional
        Overrides the computed midpoint.
    """

    graph: SpatialGraph
    degree_term: bool = True
    M: float | None = None
    D: np.ndarray = field(init=False, repr=False)
    pa: np.ndarray = field(init=False, repr=False)
    pam: np.ndarray = field(init=False, repr=False)
    A: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = self.graph
        n = g.n_nodes
        self.D = pairwise_distances(g).to_array()
        k = g.degrees.astype(float)
        total = g.total_degree
        self.pa = np.outer(k, k) / total if total > 0 else np.zeros((n, n))
        if self.M is None:
            has_pairs = n >= 2
            if self.degree_term and has_pairs:
                self.M = compute_M(g)
            elif has_pairs and 0 < g.n_edges < n * (n - 1) // 2:
                self.M = compute_M(g)
            else:
                self.M = 0.0
        self.M = float(self.M)
        self.pam = (self.pa - self.M) if self.degree_term else np.zeros((n, n))
        self.A = g.adjacency.astype(np.uint8)
        for a in (self.D, self.pa, self.pam, self.A):
            a.setflags(write=False)

    @property
    def n(self):
        return self.graph.n_nodes


def log_sigmoid(x):
    """``log(1 / (1 + exp(-x)))`` without overflow."""
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(-np.abs(x))))


def beta_term(c_i, c_j, phi):
    """Community reward/penalty; label 0 is the don't-care community."""
    if c_i == 0 or c_j == 0:
        return 0.0
    return phi if c_i == c_j else -phi


def _beta_matrix(labels, phi):
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    active = (labels[:, None] != 0) & (labels[None, :] != 0)
    return np.where(active, np.where(same, phi, -phi), 0.0)


def link_logit(ctx: ModelContext, state: ParamState, i, j):
    if i == j:
        raise ValueError("link logit is undefined for i == j")
    eta = (state.radii[i] + state.radii[j] - ctx.D[i, j]) / state.alpha
    eta += ctx.pam[i, j] / state.gamma
    if state.labels is not None:
        eta += beta_term(state.labels[i], state.labels[j], state.phi)
    return float(eta)


def link_probability(ctx, state, i, j):
    return float(np.exp(log_sigmoid(link_logit(ctx, state, i, j))))


def _logit_matrix(ctx, state):
    r = state.radii
    eta = (r[:, None] + r[None, :] - ctx.D) / state.alpha + ctx.pam / state.gamma
    if state.labels is not None:
        eta = eta + _beta_matrix(state.labels, state.phi)
    return eta


def pair_log_terms(ctx, state):
    """(n, n) matrix of per-pair log-likelihood terms, zero diagonal."""
    eta = _logit_matrix(ctx, state)
    terms = np.where(ctx.A == 1, log_sigmoid(eta), log_sigmoid(-eta))
    np.fill_diagonal(terms, 0.0)
    return terms


def log_likelihood(ctx: ModelContext, state: ParamState) -> float:
    if ctx.n < 2:
        return 0.0
    iu = np.triu_indices(ctx.n, k=1)
    return float(pair_log_terms(ctx, state)[iu].sum())


def row_log_likelihood(ctx: ModelContext, state: ParamState, i) -> float:
    """Sum of the pair terms involving node ``i``."""
    r = state.radii
    eta = (r[i] + r - ctx.D[i]) / state.alpha + ctx.pam[i] / state.gamma
    if state.labels is not None:
        c = state.labels
        if c[i] != 0:
            beta = np.where(c == 0, 0.0, np.where(c == c[i], state.phi, -state.phi))
            eta = eta + beta
    terms = np.where(ctx.A[i] == 1, log_sigmoid(eta), log_sigmoid(-eta))
    terms[i] = 0.0
    return float(terms.sum())


def truncnorm_logpdf(x, mu, sigma):
    """Log density of a normal truncated to ``(0, inf)``; ``-inf`` for ``x <= 0``."""
    x = np.asarray(x, dtype=float)
    z = (x - mu) / sigma
    out = -0.5 * z * z - math.log(sigma * math.sqrt(2 * math.pi)) - log_ndtr(mu / sigma)
    return np.where(x > 0, out, -np.inf)


def log_prior(state: ParamState, priors: PriorConfig) -> float:
    """Sum of truncated-normal log densities plus the label prior.

    Configurations outside the support return ``-inf``.
    """
    total = 0.0
    total += float(truncnorm_logpdf(state.alpha, *priors.hyper("alpha")))
    total += float(truncnorm_logpdf(state.gamma, *priors.hyper("gamma")))
    if len(state.radii):
        total += float(truncnorm_logpdf(state.radii, *priors.hyper("r")).sum())
    if state.labels is not None:
        if state.phi is None:
            return -math.inf
        total += float(truncnorm_logpdf(state.phi, *priors.hyper("phi")))
        c = state.labels
        if np.any((c < 0) | (c > priors.k_comm)):
            return -math.inf
        total += float(priors.log_theta[c].sum())
    return total if not math.isnan(total) else -math.inf


def log_posterior(ctx: ModelContext, state: ParamState, priors: PriorConfig) -> float:
    lp = log_prior(state, priors)
    if lp == -math.inf:
        return -math.inf
    return log_likelihood(ctx, state) + lp
