"""Mean-field SDE experiments: couplings, Bismut formulas, Harnack bounds and ergodicity."""

import json as _json

from ._core import (
    ConfigInvalid,
    MvlabError,
    code_version,
    decompose_noise,
    gaussian_kl,
    gaussian_w2_squared,
    gramian,
    gramian_inverse_norm_slope,
    kalman_rank_index,
    knn_relative_entropy,
    list_presets,
    matrix_exp,
    presets,
    psd_sqrt,
    simulate,
    wasserstein,
)
from . import _core

__version__ = code_version()


def _as_json(config):
    return config if isinstance(config, str) else _json.dumps(config)


def resolve_config(config):
    """Return the config (dict or JSON text) with every default filled in."""
    return _json.loads(_core.resolve_config(_as_json(config)))


def config_hash(config):
    return _core.config_hash(_as_json(config))


def run(config=None, **fields):
    """Run one experiment. Fields may come from a dict, JSON text or keywords."""
    merged = dict(_json.loads(_as_json(config)) if config is not None else {})
    merged.update(fields)
    return _core.run(_json.dumps(merged))


__all__ = [
    "ConfigInvalid",
    "MvlabError",
    "code_version",
    "config_hash",
    "decompose_noise",
    "gaussian_kl",
    "gaussian_w2_squared",
    "gramian",
    "gramian_inverse_norm_slope",
    "kalman_rank_index",
    "knn_relative_entropy",
    "list_presets",
    "matrix_exp",
    "presets",
    "psd_sqrt",
    "resolve_config",
    "run",
    "simulate",
    "wasserstein",
]
