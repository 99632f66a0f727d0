"""Decoy-effect experiments on language-model hiring decisions."""

import json

from ._core import (
    BackendError,
    ConfigError,
    DecodeError,
    DegenerateError,
    DomainError,
    ReplayError,
    StrictModeError,
    UsageError,
    audit,
    chi_square,
    classify_decoy,
    decode_logprobs,
    decoy_grid,
    list_jobs,
    paired_t,
    render_prompt,
    replay,
    rm_anova,
    version,
)
from . import _core

__version__ = version()


def _config_text(config):
    return config if isinstance(config, str) else json.dumps(config)


def dry_run(config):
    """Count arms, prompts and requests without calling a backend."""
    return _core._dry_run(_config_text(config))


def run_experiment(config, output=None, strict=False):
    """Run an experiment from a config dict or JSON text; returns the manifest."""
    return json.loads(_core._run(_config_text(config), output, strict))


__all__ = [
    "BackendError",
    "ConfigError",
    "DecodeError",
    "DegenerateError",
    "DomainError",
    "ReplayError",
    "StrictModeError",
    "UsageError",
    "audit",
    "chi_square",
    "classify_decoy",
    "decode_logprobs",
    "decoy_grid",
    "dry_run",
    "list_jobs",
    "paired_t",
    "render_prompt",
    "replay",
    "rm_anova",
    "run_experiment",
]
