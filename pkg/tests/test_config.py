import pytest

from radiusnet.config import ConfigError, RunConfig, flatten, load_config, parse_override


def test_load_and_override(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("prior.alpha.mu = 10\nprior.alpha.sigma = 8.94\n[sampler]\ntotal_iters = 300\nburn_in = 100\n")
    cfg = load_config(p, [parse_override("sampler.thin=4"), parse_override("model.k_comm=3")])
    assert cfg.prior_overrides() == {"mu_alpha": 10.0, "sigma_alpha": 8.94, "k_comm": 3}
    s = cfg.sampler(seed=7)
    assert (s.total_iters, s.burn_in, s.thin, s.seed) == (300, 100, 4, 7)
    assert cfg.model_params()["k_comm"] == 3


def test_missing_pair_key():
    cfg = RunConfig({"prior.gamma.mu": 2.0})
    with pytest.raises(ConfigError, match="missing config key 'prior.gamma.sigma'"):
        cfg.prior_overrides()


@pytest.mark.parametrize("key, value", [("prior.beta.mu", 1.0), ("sampler.speed", 2), ("nope", 1),
                                        ("sampler.total_iters", 1.5), ("model.degree_term", "yes")])
def test_bad_keys_and_types(key, value):
    with pytest.raises(ConfigError):
        RunConfig().set(key, value)


def test_invalid_section_values_reported():
    cfg = RunConfig({"sampler.burn_in": 5000})
    with pytest.raises(ConfigError, match="sampler"):
        cfg.sampler(0)
    with pytest.raises(ConfigError, match="generate"):
        RunConfig({"generate.n": 1}).genspec(0)


def test_parse_override():
    assert parse_override("cv.folds=5") == ("cv.folds", 5)
    assert parse_override("model.scoring=map") == ("model.scoring", "map")
    assert parse_override("sampler.fixed=['alpha']") == ("sampler.fixed", ["alpha"])
    with pytest.raises(ConfigError):
        parse_override("cv.folds")


def test_flatten_and_bad_toml(tmp_path):
    assert flatten({"a": {"b": 1, "c": {"d": 2}}}) == {"a.b": 1, "a.c.d": 2}
    p = tmp_path / "bad.toml"
    p.write_text("a = = 1\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_genspec_and_cv_sections():
    cfg = RunConfig({"generate.n": 40, "generate.phi": 1.0, "cv.folds": 3})
    assert cfg.genspec(5).n == 40 and cfg.genspec(5).seed == 5
    assert cfg.cv(1).folds == 3
