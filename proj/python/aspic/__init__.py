"""Python bindings for the aspic C++ core.

Configs and results cross the boundary as JSON; the helpers here accept dicts,
JSON strings or paths and hand back dicts.
"""

import json
import os

from . import _core
from ._core import (
    AspicError,
    BatchError,
    DomainError,
    NumericalError,
    RolloutError,
    StructuralError,
    derive_seed,
    find_alpha,
    kl_estimate,
    normalized_weights,
    smoothed_cost_value,
    weight_entropy,
)

__all__ = [
    "AspicError",
    "BatchError",
    "DomainError",
    "NumericalError",
    "RolloutError",
    "StructuralError",
    "config_hash",
    "derive_seed",
    "export",
    "find_alpha",
    "kl_estimate",
    "load_config",
    "normalized_weights",
    "run",
    "sample_costs",
    "smoothed_cost_value",
    "smoothed_gradient",
    "summary",
    "sweep",
    "weight_entropy",
]


def _config_text(config):
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, (str, os.PathLike)) and os.path.isfile(config):
        with open(config) as f:
            return f.read()
    return str(config)


def _json_text(value):
    return value if isinstance(value, str) else json.dumps(value)


def load_config(config):
    """Validated config with every default filled in."""
    return json.loads(_core.normalize_config(_config_text(config)))


def config_hash(config):
    return _core.config_hash(_config_text(config))


def run(config, jobs=1):
    return json.loads(_core.run(_config_text(config), jobs))


def sweep(config, axis, values, delta_mode="lognfrac", budget=None, epsilons=(), jobs=1):
    return json.loads(
        _core.sweep(_config_text(config), axis, list(values), delta_mode, budget, list(epsilons), jobs)
    )


def summary(result):
    return json.loads(_core.summary(_json_text(result)))


def export(result, out_dir=None, stem=None, formats=("csv", "json")):
    """Writes <stem>.csv and/or <stem>.summary.json; out_dir defaults to $ASPIC_OUTPUT_DIR or ./results."""
    if out_dir is None:
        out_dir = os.environ.get("ASPIC_OUTPUT_DIR") or "results"
    if stem is None:
        stem = result["config"]["name"] if isinstance(result, dict) else json.loads(result)["config"]["name"]
    return [str(p) for p in _core.export(_json_text(result), out_dir, stem, list(formats))]


def sample_costs(env_id, n, seed, overrides=None, gamma=1.0, params=None):
    """Stochastic costs of n rollouts of the linear policy (zero parameters unless given)."""
    return _core.sample_costs(env_id, _json_text(overrides or {}), n, seed, gamma, params)


def smoothed_gradient(env_id, n, seed, alpha, overrides=None, gamma=1.0, whiten=True, params=None):
    return _core.smoothed_gradient(env_id, _json_text(overrides or {}), n, seed, gamma, alpha, whiten, params)
