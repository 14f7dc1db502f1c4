"""Similarity-based resolver: grouped feature maxima on a 10-point scale.

Features describing the same underlying attribute in slightly different
ways would bias a plain sum, so each group contributes only its maximum.
The group maxima are summed and rescaled to 10 points, and a pair resolves
positive when the score reaches the threshold (>= semantics).
"""

from __future__ import annotations

from dataclasses import dataclass

from .features import FEATURE_NAMES, FeatureVector

DEFAULT_GROUPS = (
    ("f1_name_sim", "f2_token_jaccard", "f3_name_exact"),
    ("f4_category_match",),
    (
        "f5_channel_in_page",
        "f6_channel_url_in_page",
        "f7_website_is_channel_site",
        "f8_site_mentions_channel",
    ),
    ("f9_site_mentions_title", "f10_propernoun_overlap"),
    ("f11_likes_norm", "f12_talking_norm"),
)

DEFAULT_THRESHOLD = 5.0

_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}


@dataclass(frozen=True)
class ScoreConfig:
    """An ordered partition of the features plus the decision threshold."""

    groups: tuple[tuple[str, ...], ...] = DEFAULT_GROUPS
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        seen = [name for group in self.groups for name in group]
        if sorted(seen) != sorted(FEATURE_NAMES):
            raise ValueError("groups must partition the 12 feature names")
        if not 0.0 <= self.threshold <= 10.0:
            raise ValueError(f"threshold {self.threshold} outside [0, 10]")

    @property
    def scale(self) -> float:
        return 10.0 / len(self.groups)


def _values(fv) -> list[float]:
    if isinstance(fv, FeatureVector):
        return fv.values()
    return [float(v) for v in fv]


def group_values(fv, cfg: ScoreConfig = ScoreConfig()) -> list[float]:
    """Per-group maximum of the member features."""
    values = _values(fv)
    return [max(values[_INDEX[name]] for name in group) for group in cfg.groups]


def score(fv, cfg: ScoreConfig = ScoreConfig()) -> float:
    """Sum of group maxima rescaled onto the 10-point scale."""
    return sum(group_values(fv, cfg)) * cfg.scale


def decide(score_value: float, cfg: ScoreConfig = ScoreConfig()) -> bool:
    return score_value >= cfg.threshold


def confidence(fv, cfg: ScoreConfig = ScoreConfig()) -> float:
    """Score mapped onto [0, 1] for use as an edge weight."""
    return score(fv, cfg) / 10.0
