"""Run configuration from TOML files with dotted keys.

Example::

    prior.alpha.mu = 10.0
    prior.alpha.sigma = 8.94
    model.k_comm = 8
    sampler.total_iters = 4000
    cv.folds = 10

Every key is optional, but a prior ``mu`` needs its ``sigma`` (and the
reverse). Unknown keys are errors.
"""

from __future__ import annotations

import math

import tomli

from .evaluation import CVConfig
from .sampler import SamplerConfig
from .synth import GenSpec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_override", "flatten"]

PRIOR_NAMES = ("alpha", "gamma", "phi", "r")
MODEL_KEYS = {"k_comm": int, "degree_term": bool, "init_iters": int, "scoring": str}
SAMPLER_KEYS = {
    "total_iters": int, "burn_in": int, "thin": int, "sigma_alpha_prop": float,
    "sigma_gamma_prop": float, "sigma_phi_prop": float, "sigma_r_prop": float,
    "adapt": bool, "adapt_window": int, "fixed": list,
}
CV_KEYS = {"folds": int, "bins": int, "neg_ratio": float, "scoring": str}
GENERATE_KEYS = {
    "n": int, "width": float, "height": float, "alpha": float, "gamma": float,
    "phi": float, "radius_mu": float, "radius_sigma": float, "k_comm": int,
    "label_probs": list, "degree_mode": str, "target_mean_degree": float,
    "max_iter": int, "tol": float,
}


class ConfigError(ValueError):
    """Bad configuration; the message names the offending key."""


def flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_override(text):
    """``key=value`` with a TOML value; bare words are taken as strings."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, value = (s.strip() for s in text.split("=", 1))
    try:
        parsed = tomli.loads(f"v = {value}")["v"]
    except tomli.TOMLDecodeError:
        parsed = value
    return key, parsed


def _coerce(key, value, kind):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is bool and isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    if kind is list and isinstance(value, list):
        return value
    raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}")


class RunConfig:
    """Merged configuration, kept as a flat ``{dotted key: value}`` dict."""

    def __init__(self, values=None):
        self.values = {}
        for k, v in (values or {}).items():
            self.set(k, v)

    def set(self, key, value):
        section, _, rest = key.partition(".")
        if section == "prior":
            name, _, field = rest.partition(".")
            if name == "theta" and not field:
                value = [float(_coerce(key, t, float)) for t in _coerce(key, value, list)]
            elif name in PRIOR_NAMES and field in ("mu", "sigma"):
                value = _coerce(key, value, float)
                if not math.isfinite(value):
                    raise ConfigError(f"{key}: must be finite")
            else:
                raise ConfigError(f"unknown config key {key!r}")
        else:
            table = {"model": MODEL_KEYS, "sampler": SAMPLER_KEYS, "cv": CV_KEYS,
                     "generate": GENERATE_KEYS}.get(section)
            if table is None or rest not in table:
                raise ConfigError(f"unknown config key {key!r}")
            value = _coerce(key, value, table[rest])
        self.values[key] = value

    def update(self, pairs):
        for k, v in pairs:
            self.set(k, v)
        return self

    def _section(self, section):
        p = section + "."
        return {k[len(p):]: v for k, v in self.values.items() if k.startswith(p)}

    def prior_overrides(self):
        """Keyword overrides for :meth:`PriorConfig.for_graph`."""
        out = {}
        for name in PRIOR_NAMES:
            mu = self.values.get(f"prior.{name}.mu")
            sigma = self.values.get(f"prior.{name}.sigma")
            if (mu is None) != (sigma is None):
                missing = "sigma" if sigma is None else "mu"
                raise ConfigError(f"missing config key 'prior.{name}.{missing}'")
            if mu is not None:
                if sigma <= 0:
                    raise ConfigError(f"prior.{name}.sigma: must be positive")
                out[f"mu_{name}"] = mu
                out[f"sigma_{name}"] = sigma
        if "prior.theta" in self.values:
            out["theta"] = self.values["prior.theta"]
        if "model.k_comm" in self.values:
            out["k_comm"] = self.values["model.k_comm"]
        return out

    def model_params(self):
        m = self._section("model")
        params = {"priors": self.prior_overrides()}
        for k in ("degree_term", "init_iters", "scoring"):
            if k in m:
                params[k] = m[k]
        if "k_comm" in m:
            params["k_comm"] = m["k_comm"]
        return params

    def sampler(self, seed):
        s = self._section("sampler")
        try:
            return SamplerConfig(**s, seed=seed)
        except ValueError as e:
            raise ConfigError(f"sampler: {e}") from e

    def cv(self, seed, jobs=1):
        c = self._section("cv")
        try:
            return CVConfig(**c, seed=seed, jobs=jobs)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"cv: {e}") from e

    def genspec(self, seed):
        try:
            return GenSpec(**self._section("generate"), seed=seed)
        except ValueError as e:
            raise ConfigError(f"generate: {e}") from e

    def to_dict(self):
        return dict(sorted(self.values.items()))


def load_config(path=None, overrides=()):
    """Read a TOML file (optional) and apply ``(key, value)`` overrides."""
    cfg = RunConfig()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomli.load(fh)
        except tomli.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
        for k, v in flatten(data).items():
            cfg.set(k, v)
    cfg.update(overrides)
    return cfg
