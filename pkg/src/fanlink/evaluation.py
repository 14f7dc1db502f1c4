"""Stratified cross-validation, cost-based thresholding, and P/R/F reporting.

Confusion counts are pooled over folds (micro accounting) because the folds
here can be tiny. Two selection accountings are supported: the strict
per-show mode, where only picking the single best page counts, and the
relaxed pairwise mode, where any related page is acceptable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import learners, scoring
from .epg import ShowKey
from .errors import EmptyInput, TooFewExamples
from .learners import CostMatrix, Dataset
from .scoring import ScoreConfig

POSITIVE_LABELS = ("related", "best")
MODES = ("most_suitable", "anything_suitable")


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple[int, ...]
    seed: int


@dataclass(frozen=True)
class EvalCell:
    """One confusion-matrix cell of the report: a method under one mode."""

    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    chosen_threshold: float | None = None

    @classmethod
    def from_counts(cls, tp, fp, fn, tn, chosen_threshold=None) -> "EvalCell":
        precision, recall, f1 = prf(tp, fp, fn)
        return cls(tp, fp, fn, tn, precision, recall, f1, chosen_threshold)


@dataclass
class EvalReport:
    """Rows of (method, mode, cell), in insertion order."""

    entries: list = field(default_factory=list)

    def add(self, method: str, mode: str, cell: EvalCell) -> None:
        self.entries.append((method, mode, cell))

    def get(self, method: str, mode: str) -> EvalCell:
        for m, md, cell in self.entries:
            if m == method and md == mode:
                return cell
        raise KeyError((method, mode))

    def to_json_obj(self) -> list:
        rows = []
        for method, mode, cell in self.entries:
            rows.append(
                {
                    "method": method,
                    "mode": mode,
                    "tp": cell.tp,
                    "fp": cell.fp,
                    "fn": cell.fn,
                    "tn": cell.tn,
                    "precision": cell.precision,
                    "recall": cell.recall,
                    "f1": cell.f1,
                    "chosen_threshold": cell.chosen_threshold,
                }
            )
        return rows

    def format_table(self) -> str:
        header = ("method", "mode", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "threshold")
        rows = [header]
        for method, mode, cell in self.entries:
            threshold = "-" if cell.chosen_threshold is None else f"{cell.chosen_threshold:.4f}"
            rows.append(
                (
                    method,
                    mode,
                    str(cell.tp),
                    str(cell.fp),
                    str(cell.fn),
                    str(cell.tn),
                    f"{cell.precision:.4f}",
                    f"{cell.recall:.4f}",
                    f"{cell.f1:.4f}",
                    threshold,
                )
            )
        widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
        return "\n".join(lines) + "\n"


def stratified_kfold(labels: Sequence[int], k: int, seed: int) -> FoldPlan:
    """Shuffle within each class, then deal the rows round-robin to folds."""
    if k < 2:
        raise ValueError("k must be >= 2")
    labels = list(labels)
    for cls in (0, 1):
        if 2 * labels.count(cls) < k:
            raise TooFewExamples(f"class {cls} has fewer than k/2 = {k / 2:g} members")
    rng = random.Random(seed)
    assignments = [0] * len(labels)
    for cls in (0, 1):
        idx = [i for i, y in enumerate(labels) if y == cls]
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            assignments[i] = pos % k
    return FoldPlan(k=k, assignments=tuple(assignments), seed=seed)


def confusion(predictions: Sequence[bool], labels: Sequence[int]) -> tuple[int, int, int, int]:
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels differ in length")
    tp = fp = fn = tn = 0
    for pred, y in zip(predictions, labels):
        if pred and y == 1:
            tp += 1
        elif pred and y == 0:
            fp += 1
        elif not pred and y == 1:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F-measure; vacuous denominators count as perfect."""
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _candidate_cuts(confidences: Sequence[float]) -> list[float]:
    distinct = sorted(set(confidences))
    cuts = {0.0, 1.0}
    cuts.update((a + b) / 2.0 for a, b in zip(distinct, distinct[1:]))
    return sorted(cuts)


def threshold_cost(threshold: float, confidences, labels, cm: CostMatrix) -> float:
    fp = fn = 0
    for conf, y in zip(confidences, labels):
        if conf >= threshold and y == 0:
            fp += 1
        elif conf < threshold and y == 1:
            fn += 1
    return cm.c_fp * fp + cm.c_fn * fn


def select_threshold(confidences: Sequence[float], labels: Sequence[int], cm: CostMatrix) -> float:
    """Cheapest cut among midpoints of consecutive confidences plus 0 and 1.

    Cost ties go to the larger threshold: when in doubt, predict less.
    """
    if len(confidences) == 0:
        raise EmptyInput("no confidences to scan")
    if len(confidences) != len(labels):
        raise ValueError("confidences and labels differ in length")
    best_threshold = None
    best_cost = None
    for cut in _candidate_cuts(confidences):
        cost = threshold_cost(cut, confidences, labels, cm)
        if best_cost is None or cost <= best_cost:
            best_threshold, best_cost = cut, cost
    return best_threshold


@dataclass(frozen=True)
class ResolverSpec:
    """Which resolver to run and how: a learner kind or the score model."""

    kind: str
    hyperparams: Mapping = field(default_factory=dict)
    score_config: ScoreConfig = ScoreConfig()
    seed: int = 0

    @property
    def trains(self) -> bool:
        return self.kind != "score"


def _fit_confidences(spec: ResolverSpec, train: Dataset, cm: CostMatrix):
    """Returns (confidence_fn over rows, threshold) for one training split."""
    if not spec.trains:
        cfg = spec.score_config

        def conf(rows: np.ndarray) -> list[float]:
            return [scoring.confidence(row, cfg) for row in rows]

        return conf, cfg.threshold / 10.0

    model = learners.train(spec.kind, train, cm, dict(spec.hyperparams), seed=spec.seed)

    def conf(rows: np.ndarray) -> list[float]:
        return [learners.predict_proba(model, row) for row in rows]

    threshold = select_threshold(conf(train.features), list(train.labels), cm)
    return conf, threshold


def cross_validate(
    spec: ResolverSpec,
    data: Dataset,
    k: int,
    cm: CostMatrix,
    seed: int,
) -> EvalCell:
    """Train on k-1 folds, pick the threshold there, score the held-out fold.

    Confusion counts are pooled across folds; the reported threshold is the
    mean of the per-fold selections.
    """
    plan = stratified_kfold(list(data.labels), k, seed)
    assignments = np.asarray(plan.assignments)
    tp = fp = fn = tn = 0
    thresholds = []
    for fold in range(k):
        test_mask = assignments == fold
        train = Dataset(data.features[~test_mask], data.labels[~test_mask])
        conf, threshold = _fit_confidences(spec, train, cm)
        thresholds.append(threshold)
        preds = [c >= threshold for c in conf(data.features[test_mask])]
        dtp, dfp, dfn, dtn = confusion(preds, list(data.labels[test_mask]))
        tp, fp, fn, tn = tp + dtp, fp + dfp, fn + dfn, tn + dtn
    return EvalCell.from_counts(tp, fp, fn, tn, chosen_threshold=float(np.mean(thresholds)))


def evaluate_modes(
    resolved: Mapping[ShowKey, Sequence[str]],
    gold: Mapping[tuple[ShowKey, str], str],
    mode: str,
    chosen_threshold: float | None = None,
) -> EvalCell:
    """Score selections against gold labels under one selection mode.

    resolved maps each show to the pages selected for it under `mode`.
    anything_suitable counts pairs: a selected pair is correct when its gold
    label is related or best. most_suitable counts shows: only selecting the
    page labeled best is correct; selecting anything else is a false
    positive, abstaining despite an existing best is a false negative.
    Pairs and shows the gold map does not mention count as unrelated.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    tp = fp = fn = tn = 0
    if mode == "anything_suitable":
        units = set(gold)
        units.update((show, page) for show, pages in resolved.items() for page in pages)
        for show, page in units:
            selected = page in resolved.get(show, ())
            positive = gold.get((show, page)) in POSITIVE_LABELS
            if selected and positive:
                tp += 1
            elif selected:
                fp += 1
            elif positive:
                fn += 1
            else:
                tn += 1
    else:
        shows = {show for show, _ in gold}
        shows.update(show for show, pages in resolved.items() if pages)
        best_of = {show: page for (show, page), label in gold.items() if label == "best"}
        for show in shows:
            selection = list(resolved.get(show, ()))[:1]
            if selection:
                if best_of.get(show) == selection[0]:
                    tp += 1
                else:
                    fp += 1
            elif show in best_of:
                fn += 1
            else:
                tn += 1
    return EvalCell.from_counts(tp, fp, fn, tn, chosen_threshold=chosen_threshold)
