"""Python access to the puppetscan detection engine."""

from __future__ import annotations

import json
from typing import Any, Mapping, Optional

from . import _puppetscan as _core

__version__ = _core.__version__

binomial_tail_ln = _core.binomial_tail_ln
birthday_collision_prob = _core.birthday_collision_prob
format_log_probability = _core.format_log_probability
sha1_hex = _core.sha1_hex
secret_probability = _core.secret_probability
seed_for = _core.seed_for
shuffle_options = _core.shuffle_options
score_learning_curve = _core.score_learning_curve
render_text_png = _core.render_text_png


def _text(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value)


def load_preset(name: str) -> dict:
    """Return {"name", "study", "population"} for a built-in preset."""
    raw = _core.preset_json(name)
    return {"name": raw["name"], "study": json.loads(raw["study"]), "population": json.loads(raw["population"])}


def simulate(population: Mapping, study: Mapping) -> dict:
    """Generate a labeled event log. Returns {"log", "truth", "frequencies"}."""
    raw = _core.simulate_json(_text(population), _text(study))
    return {"log": raw["log"], "truth": json.loads(raw["truth"]), "frequencies": raw["frequencies"]}


def analyze(log: str, study: Mapping, config: Optional[Mapping] = None, frequencies: Optional[str] = None) -> dict:
    """Ingest an event log and run every detector. Returns the report as a dict."""
    return json.loads(_core.analyze_json(log, _text(study), _text(config) if config else "", frequencies))


def evaluate(report: Mapping, truth: Mapping) -> dict:
    return json.loads(_core.evaluate_json(_text(report), _text(truth)))


def features_csv(log: str, study: Mapping) -> str:
    return _core.features_csv(log, _text(study))


def binomial_tail(n: int, k: int, p: float) -> float:
    """P(X >= k) for X ~ Binomial(n, p); underflows to 0.0 where binomial_tail_ln does not."""
    import math

    return math.exp(binomial_tail_ln(n, k, p))


def instantiate_context(template: Mapping, seed: int) -> dict:
    return _core.instantiate_context(_text(template), seed)


def cueing_trials(seed: int, repetitions: int, novel_per_repetition: int = 0) -> dict:
    return json.loads(_core.cueing_trials_json(seed, repetitions, novel_per_repetition))


__all__ = [
    "analyze",
    "binomial_tail",
    "binomial_tail_ln",
    "birthday_collision_prob",
    "cueing_trials",
    "evaluate",
    "features_csv",
    "format_log_probability",
    "instantiate_context",
    "load_preset",
    "render_text_png",
    "score_learning_curve",
    "secret_probability",
    "seed_for",
    "sha1_hex",
    "shuffle_options",
    "simulate",
]
