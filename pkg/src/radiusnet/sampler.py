"""Metropolis-within-Gibbs sampling over :class:`~radiusnet.model.ParamState`.

Random stream layout per sweep (fixed, so chains are reproducible): three
standard normals for the global block, one uniform for its acceptance, ``n``
normals and ``n`` uniforms for the radius moves, then, for Radius+Comms,
``n`` label offsets in ``1..k_comm`` and ``n`` uniforms for the label moves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import minimize_scalar
from scipy.special import expit, log_ndtr
from scipy.stats import gaussian_kde, truncnorm
from sklearn.linear_model import LogisticRegression

from . import _kernels
from ._louvain import louvain_labels
from .model import (
    GLOBAL_PARAMS,
    ModelContext,
    ParamState,
    PriorConfig,
    log_posterior,
    row_log_likelihood,
    truncnorm_logpdf,
    log_likelihood,
)

__all__ = [
    "SamplerConfig",
    "PosteriorTrace",
    "make_rng",
    "derive_seed",
    "sample_prior_state",
    "warm_start_state",
    "step_global",
    "step_radius",
    "step_label",
    "run_chain",
    "initialize_map",
    "trace_summary",
    "split_rhat",
    "posterior_mode",
    "write_trace",
    "read_trace",
]

FIXABLE = ("alpha", "gamma", "phi", "radii", "labels")


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def derive_seed(seed, *keys):
    """Deterministic child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SamplerConfig:
    """Chain length, proposal scales and adaptation settings.

    ``sigma_r_prop=None`` resolves to a tenth of the mean linked distance.
    ``fixed`` lists parameters that are held at their initial value.
    """

    total_iters: int = 2000
    burn_in: int = 1000
    thin: int = 5
    sigma_alpha_prop: float = 0.5
    sigma_gamma_prop: float = 0.5
    sigma_phi_prop: float = 0.5
    sigma_r_prop: float | None = None
    adapt: bool = True
    adapt_window: int = 25
    seed: int = 0
    fixed: tuple = ()

    def __post_init__(self):
        self.fixed = tuple(self.fixed)
        if self.total_iters < 1:
            raise ValueError("total_iters must be positive")
        if not 0 <= self.burn_in < self.total_iters:
            raise ValueError("burn_in must satisfy 0 <= burn_in < total_iters")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.adapt_window < 1:
            raise ValueError("adapt_window must be >= 1")
        for name in ("alpha", "gamma", "phi", "r"):
            s = getattr(self, f"sigma_{name}_prop")
            if s is not None and not s > 0:
                raise ValueError(f"sigma_{name}_prop must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        bad = set(self.fixed) - set(FIXABLE)
        if bad:
            raise ValueError(f"unknown fixed parameters: {sorted(bad)}")

    @property
    def n_retained(self):
        return (self.total_iters - self.burn_in) // self.thin

    def to_dict(self):
        d = dict(self.__dict__)
        d["fixed"] = list(self.fixed)
        return d

    def with_proposals(self, sigmas):
        """Copy with proposal scales taken from a ``PosteriorTrace.proposal_sigmas`` dict."""
        d = self.to_dict()
        for name, v in sigmas.items():
            d[f"sigma_{name}_prop"] = float(v)
        return SamplerConfig(**d)


def _radius_scale(ctx):
    g = ctx.graph
    if g.n_edges:
        e = g.edges
        s = float(ctx.D[e[:, 0], e[:, 1]].mean())
        if s > 0:
            return s
    return 1.0


@dataclass
class PosteriorTrace:
    """Retained samples of one chain, stored column-wise."""

    iters: np.ndarray
    log_posts: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    radii: np.ndarray
    phi: np.ndarray | None = None
    labels: np.ndarray | None = None
    accept_rates: dict = field(default_factory=dict)
    log_post_series: np.ndarray | None = None
    proposal_sigmas: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.log_posts)

    @property
    def has_communities(self):
        return self.labels is not None

    @property
    def map_index(self):
        if len(self) == 0:
            raise ValueError("empty trace")
        return int(np.argmax(self.log_posts))

    def state(self, k):
        return ParamState(
            alpha=self.alpha[k], gamma=self.gamma[k], radii=self.radii[k].copy(),
            phi=None if self.phi is None else self.phi[k],
            labels=None if self.labels is None else self.labels[k].copy(),
        )

    @property
    def samples(self):
        return [self.state(k) for k in range(len(self))]

    @property
    def map_state(self):
        return self.state(self.map_index)

    @classmethod
    def from_states(cls, states, log_posts, iters=None, **kw):
        states = list(states)
        comms = states[0].labels is not None if states else False
        n = len(states[0].radii) if states else 0
        return cls(
            iters=np.arange(len(states)) if iters is None else np.asarray(iters),
            log_posts=np.asarray(log_posts, dtype=float),
            alpha=np.array([s.alpha for s in states], dtype=float),
            gamma=np.array([s.gamma for s in states], dtype=float),
            radii=np.array([s.radii for s in states], dtype=float).reshape(len(states), n),
            phi=np.array([s.phi for s in states], dtype=float) if comms else None,
            labels=np.array([s.labels for s in states], dtype=np.int64).reshape(len(states), n) if comms else None,
            **kw,
        )


def _prior_array(priors):
    rows = []
    for name in ("alpha", "gamma", "phi", "r"):
        mu, sigma = priors.hyper(name)
        rows.append((mu, sigma, math.log(sigma * math.sqrt(2 * math.pi)) + float(log_ndtr(mu / sigma))))
    return np.array(rows, dtype=float)


def _draw_truncnorm(mu, sigma, size, rng):
    return truncnorm.rvs(-mu / sigma, np.inf, loc=mu, scale=sigma, size=size, random_state=rng)


def sample_prior_state(n, priors, rng, communities=False):
    """Draw every latent variable from its prior."""
    alpha = float(_draw_truncnorm(*priors.hyper("alpha"), None, rng))
    gamma = float(_draw_truncnorm(*priors.hyper("gamma"), None, rng))
    radii = np.asarray(_draw_truncnorm(*priors.hyper("r"), n, rng), dtype=float).reshape(n)
    phi = labels = None
    if communities:
        phi = float(_draw_truncnorm(*priors.hyper("phi"), None, rng))
        labels = rng.choice(priors.k_comm + 1, size=n, p=priors.theta).astype(np.int64)
    return ParamState(alpha, gamma, radii, phi, labels)


def _pair_ll(A, x):
    # per-pair Bernoulli log-likelihood at logit x
    return np.where(A == 1, -np.logaddexp(0.0, -x), -np.logaddexp(0.0, x))


def _best_phi(ctx, priors, state, labels):
    def neg_post(log_phi):
        s = ParamState(state.alpha, state.gamma, state.radii, math.exp(log_phi), labels)
        return -log_posterior(ctx, s, priors)

    mu, sigma = priors.hyper("phi")
    hi = math.log(max(mu + 3 * sigma, 1.0))
    opt = minimize_scalar(neg_post, bounds=(math.log(1e-3), hi), method="bounded")
    return float(math.exp(opt.x))


def _greedy_merge(ctx, priors, eta0, labels, phi):
    """Apply the single merge or dissolve that most raises the posterior; None if none does."""
    A = ctx.A
    lt = priors.log_theta
    l_plus, l_minus, l_zero = _pair_ll(A, eta0 + phi), _pair_ll(A, eta0 - phi), _pair_ll(A, eta0)
    present = [c for c in np.unique(labels) if c > 0]
    members = {c: np.nonzero(labels == c)[0] for c in present}
    best, move = 0.0, None
    for a in present:
        ia = members[a]
        others = np.nonzero((labels > 0) & (labels != a))[0]
        within = np.triu(np.ones((len(ia), len(ia)), dtype=bool), k=1)
        sub = np.ix_(ia, ia)
        delta = (l_zero[sub] - l_plus[sub])[within].sum()
        delta += (l_zero[np.ix_(ia, others)] - l_minus[np.ix_(ia, others)]).sum()
        delta += len(ia) * (lt[0] - lt[a])
        if delta > best:
            best, move = delta, (a, 0)
        for b in present:
            if b <= a:
                continue
            ib = members[b]
            blk = np.ix_(ia, ib)
            d = (l_plus[blk] - l_minus[blk]).sum()
            for src, dst in ((a, b), (b, a)):
                dd = d + len(members[src]) * (lt[dst] - lt[src])
                if dd > best:
                    best, move = dd, (src, dst)
    if move is None:
        return None
    out = labels.copy()
    out[labels == move[0]] = move[1]
    return out


def _warm_labels(ctx, priors, state, rng, resolution=1.0):
    r = state.radii
    eta0 = (r[:, None] + r[None, :] - ctx.D) / state.alpha + ctx.pam / state.gamma
    B = ctx.A - resolution * expit(eta0)
    np.fill_diagonal(B, 0.0)
    groups = louvain_labels(B, rng)
    sizes = np.bincount(groups)
    order = [c for c in np.argsort(-sizes, kind="stable") if sizes[c] >= 2][:priors.k_comm]
    mapping = np.zeros(len(sizes), dtype=np.int64)
    mapping[order] = np.arange(1, len(order) + 1)
    labels = mapping[groups]
    phi = _best_phi(ctx, priors, state, labels)
    # Louvain tends to over-split; merge or dissolve groups while that helps
    for _ in range(2 * priors.k_comm):
        merged = _greedy_merge(ctx, priors, eta0, labels, phi)
        if merged is None:
            break
        labels = merged
        phi = _best_phi(ctx, priors, state, labels)
    return ParamState(state.alpha, state.gamma, state.radii, phi, labels)


WARM_RESOLUTIONS = (1.0, 0.5, 0.25)


def _regress(ctx, i, j, y, labels=None):
    """Logistic-regression estimates of the logit's coefficients; None on a wrong sign."""
    n = ctx.n
    m = len(i)
    rows = np.r_[np.arange(m), np.arange(m)]
    nodes = sparse.csr_matrix((np.ones(2 * m), (rows, np.r_[i, j])), shape=(m, n))
    cols = [sparse.csr_matrix(ctx.D[i, j][:, None]), nodes]
    if ctx.degree_term:
        cols.append(sparse.csr_matrix(ctx.pam[i, j][:, None]))
    if labels is not None:
        li, lj = labels[i], labels[j]
        sign = np.where((li > 0) & (lj > 0), np.where(li == lj, 1.0, -1.0), 0.0)
        cols.append(sparse.csr_matrix(sign[:, None]))
    X = sparse.hstack(cols, format="csr")
    w = LogisticRegression(C=100.0, fit_intercept=False, max_iter=1000).fit(X, y).coef_[0]
    if w[0] >= 0:
        return None
    alpha = -1.0 / w[0]
    floor = 1e-3 * float(ctx.D[i, j].mean())
    out = {"alpha": alpha, "radii": np.maximum(w[1:n + 1] * alpha, floor)}
    if ctx.degree_term and w[n + 1] > 0:
        out["gamma"] = 1.0 / w[n + 1]
    if labels is not None and w[-1] > 0:
        out["phi"] = float(w[-1])
    return out


def warm_start_state(ctx, priors, rng, communities=False, max_pairs=200_000, rounds=3):
    """Starting state from a logistic regression of links on the logit's terms.

    Regressing ``A_ij`` on ``D_ij``, node indicators and ``pa_ij - M``
    (no intercept) gives ``-1/alpha``, ``r_i/alpha`` and ``1/gamma``.
    Coefficients with the wrong sign fall back to prior draws. Very large
    graphs use a random subset of ``max_pairs`` pairs.

    With communities, labels come from a Louvain partition of ``A - P``
    where ``P`` holds the link probabilities of the current fit; the
    ``k_comm`` largest groups of two or more nodes get labels ``1..k_comm``
    and every other node starts as don't-care. Groups are then merged or
    dissolved greedily while the posterior improves. The regression is
    refitted with a same/different-community column, whose coefficient is
    ``phi``. Each round tries several Louvain resolutions, keeps the
    candidate with the highest posterior and stops once no candidate beats
    the best so far.
    """
    n = ctx.n
    state = sample_prior_state(n, priors, rng, communities)
    if n < 3 or ctx.graph.n_edges == 0:
        return state
    i, j = np.triu_indices(n, k=1)
    if len(i) > max_pairs:
        keep = np.sort(rng.choice(len(i), size=max_pairs, replace=False))
        i, j = i[keep], j[keep]
    y = ctx.A[i, j]
    if y.all():
        return state
    fit = _regress(ctx, i, j, y)
    if fit is None:
        return state
    state = ParamState(fit["alpha"], fit.get("gamma", state.gamma), fit["radii"], state.phi, state.labels)
    if not communities:
        return state
    best, best_lp = None, -np.inf
    for _ in range(rounds):
        improved = False
        base = state
        for res in WARM_RESOLUTIONS:
            cand = _warm_labels(ctx, priors, base, rng, res)
            fit = _regress(ctx, i, j, y, cand.labels)
            if fit is not None:
                cand = ParamState(fit["alpha"], fit.get("gamma", cand.gamma), fit["radii"],
                                  fit.get("phi", cand.phi), cand.labels)
            lp = log_posterior(ctx, cand, priors)
            if lp > best_lp:
                best, best_lp, improved = cand, lp, True
        if not improved:
            break
        state = best
    return best


def _metropolis(ratio, u):
    return ratio >= 0 or (u > 0 and math.log(u) < ratio)


def step_global(ctx, state, priors, cfg, rng):
    """Joint random-walk move on ``alpha``, ``gamma`` (and ``phi``).

    Draws three normals and one uniform regardless of the model so the
    stream layout does not depend on which parameters move.
    """
    z = rng.standard_normal(3)
    u = rng.random()
    sig = (cfg.sigma_alpha_prop, cfg.sigma_gamma_prop, cfg.sigma_phi_prop)
    new = state.copy()
    skip = set(cfg.fixed)
    if not ctx.degree_term:
        skip.add("gamma")
    if not state.has_communities:
        skip.add("phi")
    names = [p for p in GLOBAL_PARAMS if p not in skip]
    for k, p in enumerate(GLOBAL_PARAMS):
        if p in names:
            setattr(new, p, getattr(state, p) + sig[k] * z[k])
    if any(getattr(new, p) <= 0 for p in names):
        return state, False
    ratio = log_likelihood(ctx, new) - log_likelihood(ctx, state)
    for p in names:
        mu, sigma = priors.hyper(p)
        ratio += float(truncnorm_logpdf(getattr(new, p), mu, sigma) - truncnorm_logpdf(getattr(state, p), mu, sigma))
    if _metropolis(ratio, u):
        return new, True
    return state, False


def radius_log_ratio(ctx, state, i, r_new, priors):
    """Log acceptance ratio of moving ``r_i`` to ``r_new`` using row ``i`` only."""
    new = state.copy()
    new.radii[i] = r_new
    mu, sigma = priors.hyper("r")
    return (row_log_likelihood(ctx, new, i) - row_log_likelihood(ctx, state, i)
            + float(truncnorm_logpdf(r_new, mu, sigma) - truncnorm_logpdf(state.radii[i], mu, sigma)))


def step_radius(ctx, state, i, priors, cfg, rng):
    sigma = cfg.sigma_r_prop if cfg.sigma_r_prop is not None else 0.1 * _radius_scale(ctx)
    r_new = state.radii[i] + sigma * rng.standard_normal()
    u = rng.random()
    if r_new <= 0:
        return state, False
    if _metropolis(radius_log_ratio(ctx, state, i, r_new, priors), u):
        new = state.copy()
        new.radii[i] = r_new
        return new, True
    return state, False


def label_log_ratio(ctx, state, i, c_new, priors):
    new = state.copy()
    new.labels[i] = c_new
    lt = priors.log_theta
    return (row_log_likelihood(ctx, new, i) - row_log_likelihood(ctx, state, i)
            + lt[c_new] - lt[state.labels[i]])


def step_label(ctx, state, i, priors, cfg, rng):
    """Uniform symmetric proposal over the other ``k_comm`` labels."""
    if not state.has_communities:
        raise ValueError("label moves need a Radius+Comms state")
    k1 = priors.k_comm + 1
    c_new = int((state.labels[i] + rng.integers(1, k1)) % k1)
    u = rng.random()
    if _metropolis(label_log_ratio(ctx, state, i, c_new, priors), u):
        new = state.copy()
        new.labels[i] = c_new
        return new, True
    return state, False


class _Chain:
    """Mutable chain state handed to the compiled sweep."""

    def __init__(self, ctx, priors, cfg, state):
        self.ctx = ctx
        self.priors = priors
        self.comms = state.has_communities
        n = ctx.n
        self.r = state.radii.astype(float).copy()
        self.c = state.labels.astype(np.int64).copy() if self.comms else np.zeros(n, dtype=np.int64)
        self.theta = np.array([state.alpha, state.gamma, state.phi if self.comms else 1.0])
        self.prior = _prior_array(priors)
        self.log_theta = priors.log_theta.astype(float)
        sig_r = cfg.sigma_r_prop if cfg.sigma_r_prop is not None else 0.1 * _radius_scale(ctx)
        self.prop = np.array([cfg.sigma_alpha_prop, cfg.sigma_gamma_prop, cfg.sigma_phi_prop, sig_r])
        fixed = set(cfg.fixed)
        if not ctx.degree_term:
            # gamma has no likelihood contribution without the degree term
            fixed.add("gamma")
        self.upd_g = np.array([p not in fixed for p in GLOBAL_PARAMS])
        if not self.comms:
            self.upd_g[2] = False
        self.upd_r = "radii" not in fixed
        self.upd_c = self.comms and "labels" not in fixed
        self.k_comm = priors.k_comm
        self.D = np.ascontiguousarray(ctx.D)
        self.A = np.ascontiguousarray(ctx.A)
        self.PAM = np.ascontiguousarray(ctx.pam)

    def state(self):
        return ParamState(
            self.theta[0], self.theta[1], self.r.copy(),
            self.theta[2] if self.comms else None,
            self.c.copy() if self.comms else None,
        )

    def log_prior(self):
        return _kernels.log_prior(self.theta, self.r, self.c, self.prior, self.log_theta, self.comms)

    def loglik(self):
        t = self.theta
        return _kernels.full_loglik(self.D, self.A, self.PAM, self.r, self.c, t[0], t[1], t[2], self.comms)

    def sweep(self, rng):
        n = self.ctx.n
        zg = rng.standard_normal(3)
        ug = rng.random()
        zr = rng.standard_normal(n)
        ur = rng.random(n)
        if self.comms:
            lo = rng.integers(1, self.k_comm + 1, size=n)
            ul = rng.random(n)
        else:
            lo = np.zeros(n, dtype=np.int64)
            ul = np.zeros(n)
        return _kernels.sweep(
            self.D, self.A, self.PAM, self.r, self.c, self.theta, self.prior,
            self.log_theta, self.prop, zg, ug, zr, ur, lo, ul,
            self.upd_g, self.upd_r, self.upd_c, self.comms,
        )


def _initial_state(ctx, priors, rng, init, communities):
    if isinstance(init, ParamState):
        return init.copy()
    if init == "warm":
        state = warm_start_state(ctx, priors, rng, communities)
        if math.isfinite(log_posterior(ctx, state, priors)):
            return state
        init = "random"
    if init != "random":
        raise ValueError("init must be a ParamState, 'warm' or 'random'")
    for _ in range(100):
        state = sample_prior_state(ctx.n, priors, rng, communities)
        if math.isfinite(log_posterior(ctx, state, priors)):
            return state
    raise RuntimeError("no finite log posterior after 100 random initialisations")


def run_chain(ctx: ModelContext, priors: PriorConfig, cfg: SamplerConfig, init="random",
              communities=False, rng=None, record_all=False, adapt_all=False) -> PosteriorTrace:
    """Run one chain and return the retained, thinned samples.

    Proposal scales adapt during burn-in only: every ``adapt_window`` sweeps a
    block's scale is multiplied by 1.1 when its acceptance exceeded 0.45 and
    by 0.9 when it fell below 0.15.

    With ``record_all`` every sweep is retained (plus the initial state as
    iteration 0) and with ``adapt_all`` adaptation runs for the whole chain;
    MAP initialisation uses both. The final proposal scales are stored on
    the trace so a follow-up chain can start from them.
    """
    rng = make_rng(cfg.seed) if rng is None else rng
    state = _initial_state(ctx, priors, rng, init, communities)
    if state.has_communities and len(state.labels) and state.labels.max() > priors.k_comm:
        raise ValueError("initial labels exceed k_comm")
    chain = _Chain(ctx, priors, cfg, state)
    n = ctx.n
    T = cfg.total_iters

    iters, lps, states = [], [], []
    series = np.empty(T)
    tot = np.zeros(3)
    trials = np.zeros(3)
    win = np.zeros(3)
    win_trials = np.zeros(3)
    if record_all:
        iters.append(0)
        lps.append(chain.loglik() + chain.log_prior())
        states.append(chain.state())
    for s in range(1, T + 1):
        ll, ag, ar, ac = chain.sweep(rng)
        lp = ll + chain.log_prior()
        series[s - 1] = lp
        counts = np.array([ag, ar, ac], dtype=float)
        t = np.array([float(chain.upd_g.any()), n * float(chain.upd_r), n * float(chain.upd_c)])
        tot += counts
        trials += t
        win += counts
        win_trials += t
        if cfg.adapt and (adapt_all or s <= cfg.burn_in) and s % cfg.adapt_window == 0:
            for b, idx in ((0, [0, 1, 2]), (1, [3])):
                if win_trials[b] > 0:
                    rate = win[b] / win_trials[b]
                    if rate > 0.45:
                        chain.prop[idx] *= 1.1
                    elif rate < 0.15:
                        chain.prop[idx] *= 0.9
            win[:] = 0
            win_trials[:] = 0
        if record_all or (s > cfg.burn_in and (s - cfg.burn_in) % cfg.thin == 0):
            iters.append(s)
            lps.append(lp)
            states.append(chain.state())

    rates = {}
    for b, name in enumerate(("global", "radius", "label")):
        if trials[b] > 0:
            rates[name] = float(tot[b] / trials[b])
    sig = dict(zip(("alpha", "gamma", "phi", "r"), map(float, chain.prop)))
    if not states:
        return PosteriorTrace(
            iters=np.zeros(0, dtype=int), log_posts=np.zeros(0), alpha=np.zeros(0),
            gamma=np.zeros(0), radii=np.zeros((0, n)),
            phi=np.zeros(0) if chain.comms else None,
            labels=np.zeros((0, n), dtype=np.int64) if chain.comms else None,
            accept_rates=rates, log_post_series=series, proposal_sigmas=sig,
        )
    return PosteriorTrace.from_states(
        states, lps, iters=iters, accept_rates=rates, log_post_series=series,
        proposal_sigmas=sig,
    )


def initialize_map(ctx, priors, cfg_short: SamplerConfig, communities=False, rng=None, init="random"):
    """Run a short chain and return its highest-posterior state (initial state included)."""
    short = SamplerConfig(**{**cfg_short.to_dict(), "burn_in": 0, "thin": 1})
    trace = run_chain(ctx, priors, short, init=init, communities=communities,
                      rng=rng, record_all=True, adapt_all=True)
    return trace.map_state, trace


def split_rhat(x):
    """Potential scale reduction of ``x`` split into two halves."""
    x = np.asarray(x, dtype=float)
    h = len(x) // 2
    if h < 2:
        return float("nan")
    chains = np.vstack([x[:h], x[h:2 * h]])
    w = chains.var(axis=1, ddof=1).mean()
    b = h * chains.mean(axis=1).var(ddof=1)
    if w == 0:
        return 1.0
    var_plus = (h - 1) / h * w + b / h
    return float(math.sqrt(var_plus / w))


def posterior_mode(x):
    """Mode of a 1-D sample via a Gaussian KDE on a 512-point grid."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise ValueError("empty sample")
    if len(x) < 3 or np.ptp(x) == 0:
        return float(np.median(x))
    kde = gaussian_kde(x)
    grid = np.linspace(x.min(), x.max(), 512)
    return float(grid[np.argmax(kde(grid))])


QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


def _describe(x):
    x = np.asarray(x, dtype=float)
    q = np.quantile(x, QUANTILES)
    return {
        "mean": float(x.mean()),
        "sd": float(x.std()),
        "mode": posterior_mode(x),
        "quantiles": {str(p): float(v) for p, v in zip(QUANTILES, q)},
    }


def trace_summary(trace: PosteriorTrace) -> dict:
    """Posterior summaries, acceptance rates and the log-posterior series."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    params = {"alpha": _describe(trace.alpha), "gamma": _describe(trace.gamma)}
    if trace.phi is not None:
        params["phi"] = _describe(trace.phi)
    radii = {
        "mean": [float(v) for v in trace.radii.mean(axis=0)],
        "sd": [float(v) for v in trace.radii.std(axis=0)],
    }
    out = {
        "n_samples": len(trace),
        "map_index": trace.map_index,
        "map_log_post": float(trace.log_posts[trace.map_index]),
        "params": params,
        "radii": radii,
        "accept_rates": dict(trace.accept_rates),
        "proposal_sigmas": dict(trace.proposal_sigmas),
        "log_post": [float(v) for v in trace.log_posts],
        "rhat_log_post": split_rhat(trace.log_posts),
    }
    if trace.log_post_series is not None:
        out["log_post_all_sweeps"] = [float(v) for v in trace.log_post_series]
    return out


def write_trace(trace: PosteriorTrace, path):
    """One JSON object per retained sample."""
    with open(path, "w", encoding="utf-8") as fh:
        for k in range(len(trace)):
            rec = {"iter": int(trace.iters[k]), "log_post": float(trace.log_posts[k])}
            rec.update(trace.state(k).to_dict())
            fh.write(json.dumps(rec) + "\n")


def read_trace(path, accept_rates=None) -> PosteriorTrace:
    states, lps, iters = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            iters.append(rec["iter"])
            lps.append(rec["log_post"])
            states.append(ParamState.from_dict(rec))
    if not states:
        raise ValueError(f"{path}: trace is empty")
    return PosteriorTrace.from_states(states, lps, iters=iters, accept_rates=dict(accept_rates or {}))
