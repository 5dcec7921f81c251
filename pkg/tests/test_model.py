import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from radiusnet.graph import SpatialGraph
from radiusnet.model import (
    ModelContext,
    ParamState,
    PriorConfig,
    beta_term,
    compute_M,
    default_k_comm,
    link_logit,
    link_probability,
    log_likelihood,
    log_posterior,
    log_prior,
    log_sigmoid,
    row_log_likelihood,
    truncnorm_logpdf,
)


def line_graph(xs, edges):
    coords = np.column_stack([np.asarray(xs, float), np.zeros(len(xs))])
    return SpatialGraph.from_edges([str(i) for i in range(len(xs))], coords, edges)


def brute_loglik(g, state, M, degree_term=True):
    """Independent per-pair reimplementation of the likelihood."""
    k = g.degrees
    total_k = k.sum()
    out = 0.0
    for i, j in itertools.combinations(range(g.n_nodes), 2):
        d = math.dist(g.coords[i], g.coords[j])
        eta = (state.radii[i] + state.radii[j] - d) / state.alpha
        if degree_term:
            eta += (k[i] * k[j] / total_k - M) / state.gamma
        if state.labels is not None:
            ci, cj = state.labels[i], state.labels[j]
            if ci and cj:
                eta += state.phi if ci == cj else -state.phi
        p = 1 / (1 + math.exp(-eta))
        out += math.log(p) if g.adjacency[i, j] else math.log(1 - p)
    return out


def test_compute_M_single_edge():
    g = line_graph([0, 1, 2], [(0, 1)])
    assert compute_M(g) == pytest.approx(0.25)


def test_compute_M_path_matches_enumeration():
    g = line_graph(range(5), [(0, 1), (1, 2), (2, 3), (3, 4)])
    k = g.degrees
    linked, unlinked = [], []
    for i, j in itertools.combinations(range(5), 2):
        (linked if g.adjacency[i, j] else unlinked).append(k[i] * k[j] / k.sum())
    assert compute_M(g) == pytest.approx(0.5 * (np.mean(linked) + np.mean(unlinked)), abs=1e-15)


def test_compute_M_constant_products():
    # a 4-cycle: every degree is 2, so every product is 4 / 8
    g = line_graph(range(4), [(0, 1), (1, 2), (2, 3), (0, 3)])
    assert compute_M(g) == pytest.approx(0.5)


def test_compute_M_errors():
    with pytest.raises(ValueError):
        compute_M(line_graph([0, 1, 2], []))
    with pytest.raises(ValueError):
        compute_M(line_graph([0, 1, 2], [(0, 1), (1, 2), (0, 2)]))


def test_beta_table():
    assert beta_term(0, 3, 0.7) == 0
    assert beta_term(2, 2, 0.7) == 0.7
    assert beta_term(1, 2, 0.7) == -0.7
    assert beta_term(2, 2, 0.7) == -beta_term(2, 5, 0.7)


def _two_node_ctx(d, pam):
    g = line_graph([0, d], [(0, 1)])
    return ModelContext(g, M=0.5 - pam)  # pa = 1*1/2 = 0.5


def test_link_logit_hand_values():
    ctx = _two_node_ctx(5.0, 0.5)
    s = ParamState(alpha=2, gamma=1, radii=[1, 2])
    assert link_logit(ctx, s, 0, 1) == pytest.approx(-0.5)
    assert link_probability(ctx, s, 0, 1) == pytest.approx(0.377540668798, abs=1e-9)
    s2 = ParamState(alpha=2, gamma=1, radii=[1, 2], phi=0.5, labels=[1, 1])
    assert link_logit(ctx, s2, 0, 1) == pytest.approx(0.0)
    balanced = ParamState(alpha=1, gamma=1, radii=[2, 3])
    assert link_probability(_two_node_ctx(5.0, 0.0), balanced, 0, 1) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        link_logit(ctx, s, 1, 1)


def random_state(n, rng, comms=False, k=3):
    return ParamState(
        alpha=rng.uniform(0.2, 2), gamma=rng.uniform(0.2, 2), radii=rng.uniform(0.05, 1, n),
        phi=rng.uniform(0.1, 2) if comms else None,
        labels=rng.integers(0, k + 1, n) if comms else None,
    )


@pytest.mark.parametrize("comms", [False, True])
@pytest.mark.parametrize("degree_term", [False, True])
def test_loglik_matches_pair_oracle(small_graph, comms, degree_term):
    rng = np.random.default_rng(3)
    ctx = ModelContext(small_graph, degree_term=degree_term)
    for _ in range(3):
        s = random_state(small_graph.n_nodes, rng, comms)
        ref = brute_loglik(small_graph, s, ctx.M, degree_term)
        assert log_likelihood(ctx, s) == pytest.approx(ref, rel=1e-12)


def test_two_node_log_half():
    ctx = _two_node_ctx(3.0, 0.0)
    s = ParamState(alpha=1, gamma=1, radii=[1, 2])
    assert log_likelihood(ctx, s) == pytest.approx(math.log(0.5))


def test_row_sum_is_twice_full(small_graph):
    rng = np.random.default_rng(1)
    ctx = ModelContext(small_graph)
    s = random_state(small_graph.n_nodes, rng, comms=True)
    rows = sum(row_log_likelihood(ctx, s, i) for i in range(ctx.n))
    assert 0.5 * rows == pytest.approx(log_likelihood(ctx, s), abs=1e-9)


def test_radius_change_is_local(small_graph):
    rng = np.random.default_rng(2)
    ctx = ModelContext(small_graph)
    s = random_state(small_graph.n_nodes, rng)
    t = s.copy()
    t.radii[4] += 0.3
    full = log_likelihood(ctx, t) - log_likelihood(ctx, s)
    row = row_log_likelihood(ctx, t, 4) - row_log_likelihood(ctx, s, 4)
    assert full == pytest.approx(row, abs=1e-9)


def test_isolated_pair_row():
    ctx = _two_node_ctx(1.0, 0.0)
    s = ParamState(alpha=1, gamma=1, radii=[0.2, 0.3])
    assert row_log_likelihood(ctx, s, 0) == pytest.approx(log_likelihood(ctx, s))


def test_extreme_logits_stay_finite():
    # eta = 1000 on a non-edge and -1e6 on an edge
    g = line_graph([0, 1], [])
    s = ParamState(alpha=1e-3, gamma=1, radii=[1.0, 1.0])
    ll = log_likelihood(ModelContext(g, degree_term=False), s)
    assert ll == pytest.approx(-1000.0)
    g = line_graph([0, 1001], [(0, 1)])
    s = ParamState(alpha=1e-3, gamma=1, radii=[0.5, 0.5])
    ll = log_likelihood(ModelContext(g, degree_term=False), s)
    assert math.isfinite(ll) and ll == pytest.approx(-1e6)


@given(st.floats(-1e6, 1e6))
def test_log_sigmoid_stable(x):
    v = float(log_sigmoid(x))
    assert math.isfinite(v) and v <= 0
    assert v == pytest.approx(-np.logaddexp(0, -x), rel=1e-12, abs=1e-300)


def test_truncnorm_matches_scipy():
    for mu, sigma in [(1, 10), (-2, 1), (3, 0.5), (0, 2)]:
        x = np.linspace(0.01, 8, 25)
        ref = stats.truncnorm.logpdf(x, -mu / sigma, np.inf, loc=mu, scale=sigma)
        assert np.allclose(truncnorm_logpdf(x, mu, sigma), ref, atol=1e-10)
    assert truncnorm_logpdf(-1.0, 1, 1) == -np.inf
    assert truncnorm_logpdf(0.0, 1, 1) == -np.inf


def test_truncnorm_far_truncation():
    assert truncnorm_logpdf(10.0, 10.0, 1.0) == pytest.approx(-math.log(math.sqrt(2 * math.pi)), abs=1e-8)


@pytest.mark.parametrize("mu, sigma", [(1, 10), (-1, 0.5), (5, 2), (0.1, 0.05)])
def test_truncnorm_integrates_to_one(mu, sigma):
    val, _ = integrate.quad(lambda x: math.exp(truncnorm_logpdf(x, mu, sigma)), 0, np.inf, epsabs=1e-12)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_log_prior_components():
    pr = PriorConfig(k_comm=4)
    n = 6
    s = ParamState(1.0, 2.0, np.full(n, 0.5), phi=1.5, labels=np.arange(n) % 5)
    expected = (truncnorm_logpdf(1.0, 1, 10) + truncnorm_logpdf(2.0, 1, 10)
                + truncnorm_logpdf(1.5, 1, 10) + n * truncnorm_logpdf(0.5, 1, 10) - n * math.log(5))
    assert log_prior(s, pr) == pytest.approx(float(expected))


def test_log_prior_rejects_invalid():
    pr = PriorConfig(k_comm=2)
    assert log_prior(ParamState(-1.0, 1.0, [0.5]), pr) == -math.inf
    assert log_prior(ParamState(1.0, 1.0, [0.0]), pr) == -math.inf
    assert log_prior(ParamState(1.0, 1.0, [0.5], phi=1.0, labels=[3]), pr) == -math.inf


def test_posterior_additive(small_graph):
    ctx = ModelContext(small_graph)
    pr = PriorConfig.for_graph(small_graph)
    s = random_state(small_graph.n_nodes, np.random.default_rng(0), comms=True)
    assert log_posterior(ctx, s, pr) == pytest.approx(log_likelihood(ctx, s) + log_prior(s, pr), abs=1e-12)
    bad = ParamState(s.alpha, s.gamma, -s.radii, s.phi, s.labels)
    assert log_posterior(ctx, bad, pr) == -math.inf


def test_all_dont_care_equals_radius(small_graph):
    ctx = ModelContext(small_graph)
    s = random_state(small_graph.n_nodes, np.random.default_rng(4))
    c = ParamState(s.alpha, s.gamma, s.radii, phi=3.0, labels=np.zeros(ctx.n, int))
    assert log_likelihood(ctx, c) == pytest.approx(log_likelihood(ctx, s), abs=1e-12)


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000), st.floats(0.01, 0.5))
def test_monotone_in_radius_and_symmetric(seed, bump):
    g = line_graph([0, 0.3, 1.1, 2.0], [(0, 1), (1, 2)])
    ctx = ModelContext(g)
    rng = np.random.default_rng(seed)
    s = random_state(4, rng, comms=True, k=2)
    t = s.copy()
    t.radii[0] += bump
    for j in range(1, 4):
        assert link_probability(ctx, s, 0, j) == pytest.approx(link_probability(ctx, s, j, 0))
        assert link_probability(ctx, t, 0, j) > link_probability(ctx, s, 0, j)


def test_distance_monotone():
    s = ParamState(1.0, 1.0, [0.5, 0.5])
    near = _two_node_ctx(1.0, 0.0)
    far = _two_node_ctx(2.0, 0.0)
    assert link_probability(far, s, 0, 1) < link_probability(near, s, 0, 1)


def test_prior_config_validation():
    with pytest.raises(ValueError):
        PriorConfig(sigma_alpha=0)
    with pytest.raises(ValueError):
        PriorConfig(k_comm=2, theta=[0.5, 0.5])
    with pytest.raises(ValueError):
        PriorConfig(k_comm=1, theta=[0.7, 0.7])
    assert default_k_comm(80) == 8
    assert default_k_comm(81) == 9
    assert default_k_comm(3) == 1


def test_param_state_roundtrip():
    s = ParamState(1.0, 2.0, [0.1, 0.2], phi=0.3, labels=[0, 1])
    t = ParamState.from_dict(s.to_dict())
    assert t.to_dict() == s.to_dict()
    assert s.is_valid(k_comm=1) and not s.is_valid(k_comm=0)
