import numpy as np
import pytest
from sklearn.base import clone

from radiusnet.estimators import RadiusCommsModel, RadiusModel
from radiusnet.model import PriorConfig, link_probability
from radiusnet.sampler import SamplerConfig

FAST = SamplerConfig(total_iters=120, burn_in=60, thin=3)


def test_fit_predict_shapes(small_graph):
    m = RadiusModel(sampler=FAST, init_iters=30, random_state=1).fit(small_graph)
    pairs = np.array([[0, 1], [2, 5], [7, 3]])
    p = m.predict_proba(pairs)
    assert p.shape == (3,) and np.all((p > 0) & (p < 1))
    P = m.expected_matrix()
    assert P.shape == (30, 30) and np.allclose(P, P.T)
    assert p[0] == pytest.approx(P[0, 1])


def test_map_scoring_uses_map_sample(small_graph):
    m = RadiusModel(sampler=FAST, init_iters=30, scoring="map", random_state=2).fit(small_graph)
    s = m.trace_.map_state
    assert m.predict_proba(np.array([[4, 9]]))[0] == pytest.approx(link_probability(m.context_, s, 4, 9))


def test_seed_reproducible_and_clonable(small_graph):
    a = RadiusModel(sampler=FAST, init_iters=30, random_state=5).fit(small_graph)
    b = clone(a).fit(small_graph)
    assert np.array_equal(a.trace_.radii, b.trace_.radii)


def test_comms_model_defaults(small_graph):
    m = RadiusCommsModel(sampler=FAST, init_iters=30, k_comm=2, random_state=0).fit(small_graph)
    assert m.trace_.has_communities and m.trace_.labels.max() <= 2
    assert m.priors_.k_comm == 2


def test_prior_config_passthrough(small_graph):
    pr = PriorConfig(mu_alpha=0.1, sigma_alpha=0.05)
    m = RadiusModel(priors=pr, sampler=FAST, init_iters=0).fit(small_graph)
    assert m.priors_ is pr and m.init_trace_ is None


def test_unfitted_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        RadiusModel().predict_proba(np.array([[0, 1]]))
