"""Pipeline configuration: a single JSON document, flags override keys.

Paths inside the config file resolve relative to the config file's
directory, so a run is reproducible from any working directory. Paths given
on the command line resolve relative to the working directory as usual.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .evaluation import MODES
from .learners import LEARNER_KINDS
from .pages import MAX_RESULTS_PER_QUERY
from .scoring import DEFAULT_THRESHOLD, ScoreConfig

_KNOWN_SECTIONS = {
    "paths", "blocking", "score", "learner", "cost", "evaluation", "selection", "graph",
}
_REQUIRED_PATHS = ("epg", "pages", "channel_directory", "labels", "output_dir")


@dataclass
class PipelineConfig:
    epg_path: Path
    pages_path: Path
    channel_dir_path: Path
    labels_path: Path
    output_dir: Path
    model_path: Path | None = None
    k: int = MAX_RESULTS_PER_QUERY
    score_threshold: float = DEFAULT_THRESHOLD
    score_groups: tuple | None = None
    learner_kind: str = "logistic"
    learner_params: dict = field(default_factory=dict)
    seed: int = 0
    c_fp: float = 1.2
    c_fn: float = 1.0
    folds: int = 10
    mode: str = "most_suitable"
    alpha: float = 0.7
    coref_min_weight: float = 0.25
    cluster_tau: float = 0.5

    def score_config(self) -> ScoreConfig:
        if self.score_groups is None:
            return ScoreConfig(threshold=self.score_threshold)
        return ScoreConfig(groups=self.score_groups, threshold=self.score_threshold)

    def validate(self) -> None:
        try:
            self.score_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not 1 <= self.k <= MAX_RESULTS_PER_QUERY:
            raise ConfigError(f"blocking k must be in [1, {MAX_RESULTS_PER_QUERY}]")
        if self.learner_kind not in LEARNER_KINDS:
            raise ConfigError(f"learner kind must be one of {LEARNER_KINDS}")
        if self.c_fp <= 0 or self.c_fn <= 0:
            raise ConfigError("costs must be positive")
        if self.folds < 2:
            raise ConfigError("evaluation folds must be >= 2")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must be in [0, 1]")
        for name in ("coref_min_weight", "cluster_tau"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Read the JSON config, apply CLI overrides, and range-check everything."""
    config_path = Path(path)
    try:
        obj = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {config_path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _KNOWN_SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    paths = obj.get("paths", {})
    missing = [name for name in _REQUIRED_PATHS if name not in paths]
    if missing:
        raise ConfigError(f"config paths section missing: {missing}")
    base = config_path.parent

    score = obj.get("score", {})
    groups = score.get("groups")
    learner = obj.get("learner", {})
    cost = obj.get("cost", {})
    selection = obj.get("selection", {})
    graph = obj.get("graph", {})

    cfg = PipelineConfig(
        epg_path=_resolve(base, paths["epg"]),
        pages_path=_resolve(base, paths["pages"]),
        channel_dir_path=_resolve(base, paths["channel_directory"]),
        labels_path=_resolve(base, paths["labels"]),
        output_dir=_resolve(base, paths["output_dir"]),
        model_path=_resolve(base, paths["model"]) if "model" in paths else None,
        k=obj.get("blocking", {}).get("k", MAX_RESULTS_PER_QUERY),
        score_threshold=score.get("threshold", DEFAULT_THRESHOLD),
        score_groups=None if groups is None else tuple(tuple(g) for g in groups),
        learner_kind=learner.get("kind", "logistic"),
        learner_params=dict(learner.get("params", {})),
        seed=learner.get("seed", 0),
        c_fp=cost.get("false_positive", 1.2),
        c_fn=cost.get("false_negative", 1.0),
        folds=obj.get("evaluation", {}).get("folds", 10),
        mode=selection.get("mode", "most_suitable"),
        alpha=selection.get("alpha", 0.7),
        coref_min_weight=graph.get("coref_min_weight", 0.25),
        cluster_tau=graph.get("cluster_tau", 0.5),
    )
    for name, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, name, value)
    cfg.validate()
    return cfg
