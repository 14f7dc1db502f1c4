"""End-to-end pipeline steps behind the CLI subcommands.

Every step is re-runnable: identical inputs, config, and seed produce
byte-identical artifacts. Files are written to a temp path and atomically
renamed so a crash never leaves a partial artifact behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from . import evaluation, graph, learners, scoring
from .config import PipelineConfig
from .epg import Show, ShowKey, aggregate, parse_xmltv
from .errors import ConfigError, MalformedInput, MissingChannel
from .evaluation import MODES, CostMatrix, EvalReport, ResolverSpec, select_threshold
from .features import (
    ChannelDirectory,
    EngagementMaxima,
    channel_directory_from_obj,
    engagement_maxima,
    extract_features,
)
from .learners import Dataset, Model
from .pages import CandidateEdge, FanPage, PageStore, block, build_index, load_pages

LABELS = ("unrelated", "related", "best")
LABEL_HEADER = ("show_channel", "show_norm_title", "show_duration", "page_id", "label")


@dataclass(frozen=True)
class LabeledPair:
    show_key: ShowKey
    page_id: str
    label: str


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_channel_directory(path: Path) -> ChannelDirectory:
    try:
        obj = json.loads(_read_bytes(path))
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"channel directory {path}: bad JSON: {exc}") from exc
    return channel_directory_from_obj(obj)


def load_labels(path: Path) -> list[LabeledPair]:
    """Read the labels TSV, enforcing at most one best page per show."""
    pairs = []
    best_seen: set[ShowKey] = set()
    text = _read_bytes(path).decode("utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if lineno == 1 and parts == list(LABEL_HEADER):
            continue
        if len(parts) != 5:
            raise MalformedInput(f"labels line {lineno}: expected 5 tab-separated fields")
        channel, norm_title, duration, page_id, label = parts
        if label not in LABELS:
            raise MalformedInput(f"labels line {lineno}: unknown label {label!r}")
        try:
            key = ShowKey(channel, norm_title, int(duration))
        except ValueError as exc:
            raise MalformedInput(f"labels line {lineno}: bad duration {duration!r}") from exc
        if label == "best":
            if key in best_seen:
                raise MalformedInput(f"labels line {lineno}: second best for {key.as_str()}")
            best_seen.add(key)
        pairs.append(LabeledPair(key, page_id, label))
    return pairs


def save_labels(path: Path, pairs: list[LabeledPair]) -> None:
    out = io.StringIO()
    out.write("\t".join(LABEL_HEADER) + "\n")
    for pair in pairs:
        key = pair.show_key
        out.write(
            f"{key.channel}\t{key.norm_title}\t{key.duration_min}\t{pair.page_id}\t{pair.label}\n"
        )
    write_text_atomic(path, out.getvalue())


@dataclass
class PipelineData:
    """Everything the downstream steps need, loaded and blocked once."""

    shows: list[Show]
    store: PageStore
    directory: ChannelDirectory
    edges: list[CandidateEdge]
    maxima: EngagementMaxima

    def show_by_key(self, key: ShowKey) -> Show:
        for show in self.shows:
            if show.key == key:
                return show
        raise MalformedInput(f"unknown show {key.as_str()}")

    def page(self, page_id: str) -> FanPage:
        page = self.store.get(page_id)
        if page is None:
            raise MalformedInput(f"unknown page {page_id!r}")
        return page


def load_pipeline_data(cfg: PipelineConfig) -> PipelineData:
    records = parse_xmltv(_read_bytes(cfg.epg_path))
    shows = aggregate(records)
    store = load_pages(_read_bytes(cfg.pages_path))
    directory = load_channel_directory(cfg.channel_dir_path)
    for show in shows:
        if not directory.has_channel(show.key.channel):
            raise MissingChannel(f"channel {show.key.channel!r} not in directory")
    edges = block(shows, build_index(store), cfg.k)
    seen: set[str] = set()
    candidates = []
    for edge in edges:
        if edge.page_id not in seen:
            seen.add(edge.page_id)
            candidates.append(store.get(edge.page_id))
    return PipelineData(shows, store, directory, edges, engagement_maxima(candidates))


def pair_feature_map(data: PipelineData, pairs) -> dict:
    """Feature vectors for (show_key, page_id) pairs, computed once each."""
    features = {}
    for key, page_id in pairs:
        if (key, page_id) not in features:
            show = data.show_by_key(key)
            page = data.page(page_id)
            features[(key, page_id)] = extract_features(show, page, data.directory, data.maxima)
    return features


def build_dataset(labeled: list[LabeledPair], features: dict) -> Dataset:
    pairs = [
        (features[(pair.show_key, pair.page_id)], 1 if pair.label in ("related", "best") else 0)
        for pair in labeled
    ]
    return Dataset.from_pairs(pairs)


@dataclass
class FittedResolver:
    kind: str
    threshold: float
    model: Model | None = None
    score_config: scoring.ScoreConfig | None = None

    def confidence(self, fv) -> float:
        if self.model is not None:
            return learners.predict_proba(self.model, fv)
        return scoring.confidence(fv, self.score_config)


def fit_resolver(cfg: PipelineConfig, kind: str, dataset: Dataset | None) -> FittedResolver:
    """Fit `kind` on the labeled data; the score model needs no data."""
    if kind == "score":
        score_cfg = cfg.score_config()
        return FittedResolver("score", score_cfg.threshold / 10.0, score_config=score_cfg)
    cm = CostMatrix(cfg.c_fp, cfg.c_fn)
    model = learners.train(kind, dataset, cm, cfg.learner_params, seed=cfg.seed)
    confidences = [learners.predict_proba(model, row) for row in dataset.features]
    model.threshold = select_threshold(confidences, list(dataset.labels), cm)
    return FittedResolver(kind, model.threshold, model=model)


def select_per_show(
    data: PipelineData,
    resolver: FittedResolver,
    features: dict,
    alpha: float,
    mode: str,
):
    """Confidences, decisions, and mode-filtered selections per show."""
    by_show: dict[ShowKey, list[CandidateEdge]] = {}
    for edge in data.edges:
        by_show.setdefault(edge.show_key, []).append(edge)
    confidences = {pair: resolver.confidence(fv) for pair, fv in features.items()}
    selections: dict[ShowKey, list[str]] = {}
    ranked_all: dict[ShowKey, list[tuple[str, float]]] = {}
    for show in data.shows:
        edges = by_show.get(show.key, [])
        candidates = [(data.page(e.page_id), confidences[(show.key, e.page_id)]) for e in edges]
        ranked = graph.suitability_rank(show.key, candidates, alpha, data.maxima)
        decisions = {
            e.page_id: confidences[(show.key, e.page_id)] >= resolver.threshold for e in edges
        }
        selections[show.key] = graph.select(show.key, ranked, decisions, mode)
        ranked_all[show.key] = ranked
    return confidences, selections, ranked_all


def _show_key_obj(key: ShowKey) -> dict:
    return {"channel": key.channel, "norm_title": key.norm_title, "duration_min": key.duration_min}


def run_ingest(cfg: PipelineConfig) -> dict:
    records = parse_xmltv(_read_bytes(cfg.epg_path))
    shows = aggregate(records)
    rows = [
        {
            **_show_key_obj(show.key),
            "display_title": show.display_title,
            "record_ids": show.record_ids,
            "description": show.description,
            "category": show.category,
        }
        for show in shows
    ]
    write_text_atomic(cfg.output_dir / "shows.json", _dumps(rows))
    return {"records": len(records), "shows": len(shows)}


def run_block(cfg: PipelineConfig) -> dict:
    data = load_pipeline_data(cfg)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["show_key", "page_id", "retrieval_rank", "retrieval_score"])
    for edge in data.edges:
        writer.writerow(
            [edge.show_key.as_str(), edge.page_id, edge.retrieval_rank, repr(edge.retrieval_score)]
        )
    write_text_atomic(cfg.output_dir / "candidates.csv", out.getvalue())
    per_show = Counter(edge.show_key for edge in data.edges)
    histogram = Counter(per_show.get(show.key, 0) for show in data.shows)
    return {
        "queries": len(data.shows),
        "edges": len(data.edges),
        "result_counts": {str(count): freq for count, freq in sorted(histogram.items())},
    }


def run_label(cfg: PipelineConfig, input_fp, output_fp) -> dict:
    """Prompt for labels on every unlabeled candidate pair.

    Answers: u(nrelated) / r(elated) / b(est) / s(kip) / q(uit). Labeling a
    second best for a show demotes the earlier best to related, with a
    warning. The file is rewritten atomically on exit, so quitting early
    never corrupts it.
    """
    data = load_pipeline_data(cfg)
    pairs = load_labels(cfg.labels_path) if cfg.labels_path.exists() else []
    by_pair = {(p.show_key, p.page_id): p for p in pairs}
    best_of = {p.show_key: p.page_id for p in pairs if p.label == "best"}
    pending = [e for e in data.edges if (e.show_key, e.page_id) not in by_pair]
    answered = 0
    for edge in pending:
        show = data.show_by_key(edge.show_key)
        page = data.page(edge.page_id)
        about = (page.about or "")[:120]
        output_fp.write(
            f"show: {show.display_title} [{show.key.channel}]\n"
            f"page: {page.name} <{page.link}>\n"
            f"about: {about}\n"
            "label [u/r/b/s/q]? "
        )
        output_fp.flush()
        line = input_fp.readline()
        if not line:
            break
        answer = line.strip().lower()
        if answer in ("q", "quit"):
            break
        if answer in ("s", "skip", ""):
            continue
        label = {"u": "unrelated", "r": "related", "b": "best"}.get(answer)
        if label is None:
            output_fp.write(f"unrecognized answer {answer!r}, skipping\n")
            continue
        if label == "best" and edge.show_key in best_of:
            previous = best_of[edge.show_key]
            output_fp.write(f"warning: demoting previous best {previous} to related\n")
            demoted = by_pair[(edge.show_key, previous)]
            pairs[pairs.index(demoted)] = LabeledPair(edge.show_key, previous, "related")
            by_pair[(edge.show_key, previous)] = pairs[pairs.index:=None] if False else None
        new_pair = LabeledPair(edge.show_key, edge.page_id, label)
        pairs.append(new_pair)
        by_pair[(edge.show_key, edge.page_id)] = new_pair
        if label == "best":
            best_of[edge.show_key] = edge.page_id
        answered += 1
    save_labels(cfg.labels_path, pairs)
    return {"pending": len(pending), "labeled": answered, "total": len(pairs)}


def run_train(cfg: PipelineConfig) -> dict:
    if cfg.learner_kind == "score":
        raise ConfigError("the score model needs no training; pick a learner kind")
    data = load_pipeline_data(cfg)
    labeled = load_labels(cfg.labels_path)
    features = pair_feature_map(data, [(p.show_key, p.page_id) for p in labeled])
    dataset = build_dataset(labeled, features)
    resolver = fit_resolver(cfg, cfg.learner_kind, dataset)
    model_path = cfg.model_path or cfg.output_dir / "model.json"
    write_text_atomic(model_path, _dumps(resolver.model.to_dict()))
    return {
        "kind": cfg.learner_kind,
        "pairs": len(dataset),
        "positives": int(dataset.labels.sum()),
        "threshold": resolver.threshold,
        "model_path": str(model_path),
    }


def run_evaluate(cfg: PipelineConfig) -> dict:
    """Figure out how every method does, per mode, on the labeled corpus.

    Each method is scored three ways: pooled 10-fold cross-validation on the
    labeled pairs (pairwise_cv), and the two selection modes after fitting
    on all labeled data.
    """
    data = load_pipeline_data(cfg)
    labeled = load_labels(cfg.labels_path)
    all_pairs = [(p.show_key, p.page_id) for p in labeled]
    all_pairs += [(e.show_key, e.page_id) for e in data.edges]
    features = pair_feature_map(data, all_pairs)
    dataset = build_dataset(labeled, features)
    gold = {(p.show_key, p.page_id): p.label for p in labeled}
    cm = CostMatrix(cfg.c_fp, cfg.c_fn)

    report = EvalReport()
    for kind in ("score",) + learners.LEARNER_KINDS:
        spec = ResolverSpec(
            kind=kind,
            hyperparams=cfg.learner_params if kind == cfg.learner_kind else {},
            score_config=cfg.score_config(),
            seed=cfg.seed,
        )
        report.add(kind, "pairwise_cv", evaluation.cross_validate(spec, dataset, cfg.folds, cm, cfg.seed))
        resolver = fit_resolver(cfg, kind, dataset)
        for mode in MODES:
            _, selections, _ = select_per_show(data, resolver, features, cfg.alpha, mode)
            cell = evaluation.evaluate_modes(selections, gold, mode, chosen_threshold=resolver.threshold)
            report.add(kind, mode, cell)

    write_text_atomic(cfg.output_dir / "eval_report.json", _dumps(report.to_json_obj()))
    table = report.format_table()
    write_text_atomic(cfg.output_dir / "eval_report.txt", table)
    return {"methods": 1 + len(learners.LEARNER_KINDS), "pairs": len(dataset), "table": table}


def run_resolve(cfg: PipelineConfig) -> dict:
    """Full pipeline: resolve, rank, select, and report coreference clusters."""
    data = load_pipeline_data(cfg)
    features = pair_feature_map(data, [(e.show_key, e.page_id) for e in data.edges])

    if cfg.learner_kind == "score":
        resolver = fit_resolver(cfg, "score", None)
    elif cfg.model_path is not None and cfg.model_path.exists():
        model = Model.from_dict(json.loads(_read_bytes(cfg.model_path)))
        resolver = FittedResolver(model.kind, model.threshold, model=model)
    elif cfg.labels_path.exists():
        labeled = load_labels(cfg.labels_path)
        label_features = pair_feature_map(data, [(p.show_key, p.page_id) for p in labeled])
        resolver = fit_resolver(cfg, cfg.learner_kind, build_dataset(labeled, label_features))
    else:
        raise ConfigError("resolve needs a trained model file or a labels file to train from")

    confidences, selections, ranked_all = select_per_show(
        data, resolver, features, cfg.alpha, cfg.mode
    )

    recommendations = []
    for show in data.shows:
        ranked = dict(ranked_all[show.key])
        recommendations.append(
            {
                "show_key": _show_key_obj(show.key),
                "selections": [
                    {
                        "page_id": page_id,
                        "rank_score": ranked[page_id],
                        "confidence": confidences[(show.key, page_id)],
                    }
                    for page_id in selections[show.key]
                ],
                "mode": cfg.mode,
            }
        )
    write_text_atomic(cfg.output_dir / "recommendations.json", _dumps(recommendations))

    positive = [
        (key, page_id, confidences[(key, page_id)])
        for key, page_id in ((e.show_key, e.page_id) for e in data.edges)
        if confidences[(key, page_id)] >= resolver.threshold
    ]
    g = graph.build_graph(positive)
    core = graph.coreference_edges(g, cfg.coref_min_weight)
    clusters = graph.cluster_pages(core, cfg.cluster_tau)

    out = io.StringIO()
    graph.write_edge_csv(g, out)
    write_text_atomic(cfg.output_dir / "resolved_edges.csv", out.getvalue())
    out = io.StringIO()
    graph.write_coreference_csv(core, out)
    write_text_atomic(cfg.output_dir / "coreference_edges.csv", out.getvalue())
    write_text_atomic(
        cfg.output_dir / "clusters.json",
        _dumps(
            {
                "min_weight": cfg.coref_min_weight,
                "tau": cfg.cluster_tau,
                "clusters": clusters,
            }
        ),
    )
    return {
        "shows": len(data.shows),
        "selections": sum(len(s) for s in selections.values()),
        "positive_edges": len(positive),
        "coreference_edges": len(core),
        "clusters": len(clusters),
    }
