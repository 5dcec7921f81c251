import math

import numpy as np
import pytest

from radiusnet.sampler import SamplerConfig
from radiusnet.synth import GenSpec, generate_batch, generate_network, prior_sensitivity_experiment


def test_deterministic_for_seed():
    a = generate_network(GenSpec(n=50, alpha=0.1, seed=3))
    b = generate_network(GenSpec(n=50, alpha=0.1, seed=3))
    c = generate_network(GenSpec(n=50, alpha=0.1, seed=4))
    assert a.graph.fingerprint() == b.graph.fingerprint()
    assert np.array_equal(a.truth.radii, b.truth.radii)
    assert a.graph.fingerprint() != c.graph.fingerprint()


def test_flat_logit_gives_half_density():
    n = 200
    res = generate_network(GenSpec(n=n, alpha=1e6, radius_mu=1e-3, radius_sigma=1e-3, seed=1))
    pairs = n * (n - 1) / 2
    se = math.sqrt(0.25 / pairs)
    assert abs(res.graph.n_edges / pairs - 0.5) < 3 * se


def test_edge_count_matches_expectation():
    spec = GenSpec(n=120, alpha=0.05, radius_mu=0.08, radius_sigma=0.03, seed=2)
    res = generate_network(spec)
    X = res.graph.coords
    D = np.linalg.norm(X[:, None] - X[None], axis=2)
    r = res.truth.radii
    p = 1 / (1 + np.exp(-(r[:, None] + r[None] - D) / spec.alpha))
    iu = np.triu_indices(spec.n, 1)
    mean = p[iu].sum()
    sd = math.sqrt((p[iu] * (1 - p[iu])).sum())
    assert abs(res.graph.n_edges - mean) < 4 * sd


def test_nodes_inside_region_and_radii_positive():
    res = generate_network(GenSpec(n=300, width=3.0, height=0.5, radius_mu=0.0, radius_sigma=0.2))
    assert res.graph.coords[:, 0].max() <= 3.0 and res.graph.coords[:, 1].max() <= 0.5
    assert res.truth.radii.min() > 0


def test_labels_follow_probs():
    res = generate_network(GenSpec(n=2000, alpha=0.1, phi=1.0, label_probs=[0.5, 0.25, 0.25], seed=5))
    freq = np.bincount(res.truth.labels, minlength=3) / 2000
    assert freq == pytest.approx([0.5, 0.25, 0.25], abs=0.04)
    zero = generate_network(GenSpec(n=20, phi=0.0))
    assert zero.truth.phi is None and zero.truth.labels is None


def test_fixed_point_warns_when_not_converged():
    spec = GenSpec(n=60, alpha=0.1, degree_mode="fixed_point", max_iter=2, tol=1e-9, seed=1)
    with pytest.warns(RuntimeWarning, match="did not converge"):
        res = generate_network(spec)
    assert not res.converged and res.iterations == 2 and res.warnings


def test_fixed_point_converges_with_loose_tol():
    res = generate_network(GenSpec(n=60, alpha=0.1, degree_mode="fixed_point", tol=10.0, seed=1))
    assert res.converged and res.iterations == 1


@pytest.mark.parametrize("kw", [dict(n=1), dict(alpha=0), dict(radius_sigma=0), dict(phi=-1),
                                dict(degree_mode="auto"), dict(label_probs=[0.5, 0.6]),
                                dict(target_mean_degree=500)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        GenSpec(**kw)


def test_batch_seeds_distinct():
    nets = generate_batch(GenSpec(n=30, alpha=0.1), 3)
    assert len({r.graph.fingerprint() for r in nets}) == 3
    with pytest.raises(ValueError):
        generate_batch(GenSpec(), 0)


def test_prior_sensitivity_report_shape():
    spec = GenSpec(n=30, alpha=0.1, radius_mu=0.15, radius_sigma=0.05, seed=1)
    rep = prior_sensitivity_experiment(spec, [{"mu_alpha": 1, "sigma_alpha": 2}, {"mu_alpha": 5, "sigma_alpha": 2}],
                                       SamplerConfig(total_iters=60, burn_in=30, thin=3), count=2, init_iters=20)
    assert len(rep["settings"]) == 2
    s = rep["settings"][1]
    assert len(s["runs"]) == 2 and "alpha" in s["mode_shift"]
    run = s["runs"][0]["alpha"]
    assert run["ci95"][0] <= run["mean"] <= run["ci95"][1]
    assert rep["settings"][0]["mode_shift"]["alpha"] == 0.0
    with pytest.raises(ValueError):
        prior_sensitivity_experiment(spec, [{}], count=1)
