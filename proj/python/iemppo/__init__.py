"""Python access to the iemppo training core."""

import json

from ._core import (  # noqa: F401
    METRICS_COLUMNS,
    ConfigError,
    EpisodeError,
    Mlp,
    NumericError,
    ParseError,
    Rng,
    ShapeError,
    SigmaSchedule,
    advantages,
    clip_objective,
    count_bonus,
    env_names,
    log_prob,
    make_env,
    make_stream,
)
from . import _core


class Trainer(_core.Trainer):
    def __init__(self, **config):
        super().__init__(json.dumps(config))


def resolve_config(**config):
    return json.loads(_core.resolve_config(json.dumps(config)))


def run(**config):
    """Train to completion; returns (metrics rows, final-100-episode mean)."""
    return _core.run(json.dumps(config))


def evaluate(checkpoint, episodes, seed=0):
    if isinstance(checkpoint, dict):
        checkpoint = json.dumps(checkpoint)
    return _core.evaluate(checkpoint, episodes, seed)
