"""Python bindings for the figsynth chart QA dataset generator.

Chart data, appearance specs and configs cross the boundary as plain dicts.
"""

import json
from pathlib import Path

from . import _figsynth
from ._figsynth import (
    AuthError,
    ConfigError,
    FigsynthError,
    GatewayExhausted,
    MissingApiKey,
    ParseFailure,
    RenderError,
    StoreMissing,
    appearance_space_size,
    chart_types,
    relaxed_match,
)

_packaged_assets = Path(__file__).parent / "assets"
if (_packaged_assets / "fonts").is_dir():
    _figsynth.set_asset_dir(str(_packaged_assets))

__all__ = [
    "AuthError",
    "ConfigError",
    "FigsynthError",
    "GatewayExhausted",
    "MissingApiKey",
    "ParseFailure",
    "RenderError",
    "StoreMissing",
    "appearance_space_size",
    "canonical_json",
    "chart_types",
    "eval_files",
    "export_training",
    "fixed_appearance",
    "generate",
    "parse_chart_data",
    "random_chart_data",
    "relaxed_match",
    "render",
    "sample_appearance",
    "stats",
    "template_qas",
    "topics",
    "validate",
    "verify_qa",
]


def _dumps(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def validate(data):
    """List of (path, rule, message) violations; empty when the data is valid."""
    return _figsynth.validate(_dumps(data))


def canonical_json(data):
    return _figsynth.canonical_json(_dumps(data))


def parse_chart_data(raw, chart_type, topic=""):
    return json.loads(_figsynth.parse_chart_data(raw, chart_type, topic))


def random_chart_data(chart_type, seed):
    return json.loads(_figsynth.random_chart_data(chart_type, seed))


def sample_appearance(chart_type, seed):
    return json.loads(_figsynth.sample_appearance(chart_type, seed))


def fixed_appearance(chart_type):
    return json.loads(_figsynth.fixed_appearance(chart_type))


def render(data, appearance):
    """PNG bytes and content hash of one figure."""
    return _figsynth.render(_dumps(data), _dumps(appearance))


def template_qas(data, seed, k=4):
    return [json.loads(q) for q in _figsynth.template_qas(_dumps(data), seed, k)]


def verify_qa(data, question, answer, tolerance=0.05):
    """(status, oracle_answer) where status is pass, numeric-mismatch, label-mismatch or unanswerable."""
    return _figsynth.verify_qa(_dumps(data), question, answer, tolerance)


def _config(config=None, **overrides):
    cfg = dict(config or {})
    cfg.update({k: (str(v) if isinstance(v, Path) else v) for k, v in overrides.items() if v is not None})
    return json.dumps(cfg)


def topics(config=None, **overrides):
    return json.loads(_figsynth.topics(_config(config, **overrides)))


def generate(config=None, **overrides):
    return json.loads(_figsynth.generate(_config(config, **overrides)))


def stats(dataset):
    return json.loads(_figsynth.stats(str(dataset)))


def eval_files(pred, gold, tolerance=0.05):
    return json.loads(_figsynth.eval_files(str(pred), str(gold), tolerance))


def export_training(dataset, out, token="chartqa", task="qa", splits=None, split_seed=0):
    """Write training JSONL; returns {path: example count}."""
    pairs = list((splits or {}).items())
    return _figsynth.export_training(str(dataset), str(out), token, task, pairs, split_seed)
