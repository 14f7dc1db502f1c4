"""Bipartite show-page graph, derived page-page coreference, and selection.

Shows and pages form the two node classes; resolver confidences weight the
cross edges. Two pages hanging off the same show are transitively
coreferent, weighted by the product of the two inducing edges. Selection
obeys two rules: never return a page the resolver rejected, and in strict
mode return only the single most suitable survivor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .epg import ShowKey
from .errors import WeightOutOfRange
from .features import EngagementMaxima, engagement_maxima, engagement_norm
from .pages import FanPage


@dataclass(frozen=True)
class CoreferenceEdge:
    """Two pages tied to the same show, hence presumably the same topic."""

    page_a: str
    page_b: str
    weight: float
    via: ShowKey


@dataclass
class BipartiteGraph:
    a_nodes: set = field(default_factory=set)
    b_nodes: set = field(default_factory=set)
    edges: dict = field(default_factory=dict)  # (ShowKey, page_id) -> weight


def build_graph(weighted_edges: Iterable[tuple[ShowKey, str, float]]) -> BipartiteGraph:
    """Assemble the graph, keeping the maximum weight on duplicate pairs."""
    g = BipartiteGraph()
    for show_key, page_id, weight in weighted_edges:
        if not 0.0 <= weight <= 1.0:
            raise WeightOutOfRange(f"weight {weight} for ({show_key}, {page_id})")
        g.a_nodes.add(show_key)
        g.b_nodes.add(page_id)
        current = g.edges.get((show_key, page_id))
        if current is None or weight > current:
            g.edges[(show_key, page_id)] = weight
    return g


def coreference_edges(g: BipartiteGraph, min_weight: float = 0.0) -> list[CoreferenceEdge]:
    """Derive page-page edges through shared shows.

    Every unordered pair of a show's positive-weight neighbors becomes an
    edge weighted by the product of the two show-page weights; the maximum
    over shows is kept per pair, and pairs below min_weight are dropped.
    """
    if not 0.0 <= min_weight <= 1.0:
        raise ValueError("min_weight must be in [0, 1]")
    neighbors: dict[ShowKey, list[tuple[str, float]]] = {}
    for (show_key, page_id), weight in g.edges.items():
        if weight > 0.0:
            neighbors.setdefault(show_key, []).append((page_id, weight))
    best: dict[tuple[str, str], CoreferenceEdge] = {}
    for show_key in sorted(neighbors):
        pages = sorted(neighbors[show_key])
        for i, (pa, wa) in enumerate(pages):
            for pb, wb in pages[i + 1 :]:
                weight = wa * wb
                pair = (pa, pb)
                current = best.get(pair)
                if current is None or weight > current.weight:
                    best[pair] = CoreferenceEdge(pa, pb, weight, via=show_key)
    return [best[pair] for pair in sorted(best) if best[pair].weight >= min_weight]


def cluster_pages(core_edges: Iterable[CoreferenceEdge], tau: float) -> list[list[str]]:
    """Connected components over edges with weight >= tau; singletons dropped."""
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for edge in core_edges:
        if edge.weight < tau:
            continue
        for node in (edge.page_a, edge.page_b):
            parent.setdefault(node, node)
        ra, rb = find(edge.page_a), find(edge.page_b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[str, list[str]] = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node)
    clusters = [sorted(members) for members in groups.values() if len(members) > 1]
    return sorted(clusters, key=lambda c: c[0])


def suitability_rank(
    show_key: ShowKey,
    candidates: Sequence[tuple[FanPage, float]],
    alpha: float = 0.7,
    maxima: EngagementMaxima | None = None,
) -> list[tuple[str, float]]:
    """Blend match confidence with discussion intensity.

    rank_score = alpha * confidence + (1 - alpha) * mean of the two
    normalized engagement counts. alpha leans toward confidence because a
    wrong page is worse than a quiet one. Ties break on page_id, so the
    ordering is total regardless of input order.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if maxima is None:
        maxima = engagement_maxima(page for page, _ in candidates)
    scored = []
    for page, conf in candidates:
        if not 0.0 <= conf <= 1.0:
            raise WeightOutOfRange(f"confidence {conf} for ({show_key}, {page.page_id})")
        engagement = (
            engagement_norm(page.likes, maxima.likes)
            + engagement_norm(page.talking_about, maxima.talking_about)
        ) / 2.0
        scored.append((page.page_id, alpha * conf + (1.0 - alpha) * engagement))
    return sorted(scored, key=lambda item: (-item[1], item[0]))


def select(
    show_key: ShowKey,
    ranked: Sequence[tuple[str, float]],
    decisions: Mapping[str, bool],
    mode: str,
) -> list[str]:
    """Apply the ground rules to a ranked candidate list.

    Pages without a positive resolver decision are unconditionally excluded.
    most_suitable keeps only the top survivor; anything_suitable keeps all.
    """
    survivors = [page_id for page_id, _ in ranked if decisions.get(page_id, False)]
    if mode == "most_suitable":
        return survivors[:1]
    if mode == "anything_suitable":
        return survivors
    raise ValueError(f"unknown mode {mode!r}")


def write_edge_csv(g: BipartiteGraph, fp) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["show_key", "page_id", "weight"])
    for (show_key, page_id), weight in sorted(g.edges.items()):
        writer.writerow([show_key.as_str(), page_id, repr(weight)])


def write_coreference_csv(edges: Iterable[CoreferenceEdge], fp) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["page_a", "page_b", "weight", "via"])
    for edge in edges:
        writer.writerow([edge.page_a, edge.page_b, repr(edge.weight), edge.via.as_str()])
