"""Distance-based domain adaptation for imbalanced sentiment classification."""

import json

from . import _core
from ._core import (
    StageError,
    class_ratio_weights,
    emit_report,
    instance_weights,
    read_results,
    write_synthetic_domains,
)

__all__ = [
    "StageError",
    "class_ratio_weights",
    "config_hash",
    "default_config",
    "emit_report",
    "evaluate",
    "instance_weights",
    "read_results",
    "run_grid",
    "write_synthetic_domains",
]


def default_config():
    return json.loads(_core.default_config())


def config_hash(config):
    return _core.config_hash(json.dumps(config))


def evaluate(predictions, gold, context="In"):
    return json.loads(_core.evaluate(list(predictions), list(gold), context))


def run_grid(config, out_dir):
    return _core.run_grid(json.dumps(config), str(out_dir))
