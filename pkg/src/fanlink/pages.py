"""Fanpage storage and the blocking step.

Blocking emulates a capped social-network page search: every show title is
run as a query against an inverted index over page names, and only the top-k
hits per query survive as candidate pairs. This cuts the comparison space
from |shows| x |pages| down to at most k candidates per show.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Protocol

from .epg import Show, ShowKey, normalize_title
from .errors import DuplicatePageId, EmptyQuery, MalformedInput

MAX_RESULTS_PER_QUERY = 10

_REQUIRED_FIELDS = ("page_id", "name", "link", "category", "likes", "talking_about")
_OPTIONAL_FIELDS = ("website", "about", "site_text")


@dataclass(frozen=True)
class FanPage:
    """A social-network page devoted to some topic."""

    page_id: str
    name: str
    link: str
    category: str
    likes: int
    talking_about: int
    website: str | None = None
    about: str | None = None
    site_text: str | None = None


@dataclass(frozen=True)
class CandidateEdge:
    """A show-page pair produced by blocking, with its retrieval rank."""

    show_key: ShowKey
    page_id: str
    retrieval_rank: int
    retrieval_score: float

    def __post_init__(self):
        if not 1 <= self.retrieval_rank <= MAX_RESULTS_PER_QUERY:
            raise ValueError(f"retrieval_rank {self.retrieval_rank} out of range")
        if self.retrieval_score < 0:
            raise ValueError("retrieval_score must be >= 0")


class PageStore:
    """Pages keyed by page_id, preserving load order."""

    def __init__(self):
        self._pages: dict[str, FanPage] = {}

    def add(self, page: FanPage) -> None:
        if page.page_id in self._pages:
            raise DuplicatePageId(f"duplicate page_id {page.page_id!r}")
        self._pages[page.page_id] = page

    def get(self, page_id: str) -> FanPage | None:
        return self._pages.get(page_id)

    def __len__(self) -> int:
        return len(self._pages)

    def __iter__(self):
        return iter(self._pages.values())

    def __contains__(self, page_id: str) -> bool:
        return page_id in self._pages


def _page_from_obj(obj: dict, lineno: int) -> FanPage:
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            raise MalformedInput(f"line {lineno}: missing field {name!r}")
    for name in ("likes", "talking_about"):
        value = obj[name]
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise MalformedInput(f"line {lineno}: {name} must be a non-negative integer")
    for name in ("page_id", "name", "link", "category"):
        if not isinstance(obj[name], str):
            raise MalformedInput(f"line {lineno}: {name} must be a string")
    if not obj["name"].strip():
        raise MalformedInput(f"line {lineno}: name must be non-empty")
    if not obj["page_id"]:
        raise MalformedInput(f"line {lineno}: page_id must be non-empty")
    optional = {}
    for name in _OPTIONAL_FIELDS:
        value = obj.get(name)
        if value is not None and not isinstance(value, str):
            raise MalformedInput(f"line {lineno}: {name} must be a string")
        optional[name] = value
    return FanPage(
        page_id=obj["page_id"],
        name=obj["name"],
        link=obj["link"],
        category=obj["category"],
        likes=obj["likes"],
        talking_about=obj["talking_about"],
        **optional,
    )


def load_pages(source) -> PageStore:
    """Load a JSON-lines page fixture: one page object per non-blank line."""
    data = source.read() if hasattr(source, "read") else source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    store = PageStore()
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"line {lineno}: bad JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise MalformedInput(f"line {lineno}: expected a JSON object")
        store.add(_page_from_obj(obj, lineno))
    return store


class SearchProvider(Protocol):
    """Anything that can answer a capped page-name query."""

    def search(self, query: str, k: int = MAX_RESULTS_PER_QUERY) -> list[tuple[str, float]]:
        ...


class SearchIndex:
    """Inverted index over normalized page-name tokens.

    A page is scored by the sum of idf(token)^2 over tokens shared with the
    query, idf(t) = ln(1 + N/df(t)), so rare, distinctive title tokens
    dominate the ranking. Pages sharing no token are never returned.
    """

    def __init__(self, postings: dict[str, tuple[str, ...]], size: int):
        self._postings = postings
        self.size = size
        self._idf_sq = {
            token: math.log(1 + size / len(ids)) ** 2
            for token, ids in postings.items()
        }

    def search(self, query: str, k: int = MAX_RESULTS_PER_QUERY) -> list[tuple[str, float]]:
        if k < 1:
            raise ValueError("k must be >= 1")
        tokens = sorted(set(normalize_title(query).split()))
        if not tokens:
            raise EmptyQuery(f"query {query!r} is empty after normalization")
        scores: dict[str, float] = {}
        for token in tokens:
            weight = self._idf_sq.get(token)
            if weight is None:
                continue
            for page_id in self._postings[token]:
                scores[page_id] = scores.get(page_id, 0.0) + weight
        ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
        return ranked[:k]


def build_index(store: PageStore) -> SearchIndex:
    """Index every page under its normalized name tokens."""
    postings: dict[str, list[str]] = {}
    for page in store:
        for token in set(normalize_title(page.name).split()):
            postings.setdefault(token, []).append(page.page_id)
    frozen = {token: tuple(sorted(ids)) for token, ids in postings.items()}
    return SearchIndex(frozen, len(store))


def search(index: SearchProvider, query: str, k: int = MAX_RESULTS_PER_QUERY) -> list[tuple[str, float]]:
    return index.search(query, k)


def block(shows: Iterable[Show], index: SearchProvider, k: int = MAX_RESULTS_PER_QUERY) -> list[CandidateEdge]:
    """Run one capped query per show and collect the hits as candidate edges.

    The query is the show's display title; shows whose title normalizes to
    nothing yield no edges. A page may appear under several shows.
    """
    edges = []
    for show in shows:
        if not normalize_title(show.display_title):
            continue
        for rank, (page_id, score) in enumerate(index.search(show.display_title, k), start=1):
            edges.append(CandidateEdge(show.key, page_id, rank, score))
    return edges
