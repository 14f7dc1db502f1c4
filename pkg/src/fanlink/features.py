"""The 12 hook features connecting a show to a candidate fanpage.

A show and a fanpage share almost no directly comparable attributes, so the
pair is described by engineered hooks: string similarity between title and
page name, category compatibility, channel evidence on the page and on its
linked website, proper-noun overlap between the long descriptions, and
normalized engagement counts. Flags are exactly 0 or 1; everything else
lives on [0, 1].
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass, fields
from urllib.parse import urlparse

from .epg import Show, normalize_title
from .errors import MissingChannel
from .pages import FanPage

FEATURE_NAMES = (
    "f1_name_sim",
    "f2_token_jaccard",
    "f3_name_exact",
    "f4_category_match",
    "f5_channel_in_page",
    "f6_channel_url_in_page",
    "f7_website_is_channel_site",
    "f8_site_mentions_channel",
    "f9_site_mentions_title",
    "f10_propernoun_overlap",
    "f11_likes_norm",
    "f12_talking_norm",
)

_FLAG_NAMES = FEATURE_NAMES[2:9]


@dataclass(frozen=True)
class FeatureVector:
    f1_name_sim: float
    f2_token_jaccard: float
    f3_name_exact: float
    f4_category_match: float
    f5_channel_in_page: float
    f6_channel_url_in_page: float
    f7_website_is_channel_site: float
    f8_site_mentions_channel: float
    f9_site_mentions_title: float
    f10_propernoun_overlap: float
    f11_likes_norm: float
    f12_talking_norm: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{f.name}={value} outside [0, 1]")
            if f.name in _FLAG_NAMES and value not in (0.0, 1.0):
                raise ValueError(f"{f.name}={value} is not a 0/1 flag")

    def values(self) -> list[float]:
        """Feature values in fixed f1..f12 order."""
        return [getattr(self, name) for name in FEATURE_NAMES]

    @classmethod
    def from_values(cls, values) -> "FeatureVector":
        values = list(values)
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {len(values)}")
        return cls(*[float(v) for v in values])


@dataclass(frozen=True)
class EngagementMaxima:
    """Per-run maxima used to normalize the engagement counts."""

    likes: int
    talking_about: int


def engagement_maxima(pages) -> EngagementMaxima:
    likes = talking = 0
    for page in pages:
        likes = max(likes, page.likes)
        talking = max(talking, page.talking_about)
    return EngagementMaxima(likes=likes, talking_about=talking)


@dataclass(frozen=True)
class ChannelDirectory:
    """Offline channel knowledge: official domains and category compatibility.

    `channels` maps a channel name to its official web domains; `categories`
    maps a listings category to the fanpage categories considered compatible
    (vocabularies differ between the two sources). Category strings are
    matched casefolded.
    """

    channels: dict[str, frozenset[str]]
    categories: dict[str, frozenset[str]]

    def has_channel(self, channel: str) -> bool:
        return channel in self.channels

    def domains_for(self, channel: str) -> frozenset[str]:
        return self.channels.get(channel, frozenset())

    def categories_for(self, epg_category: str) -> frozenset[str]:
        return self.categories.get(epg_category.casefold(), frozenset())


def channel_directory_from_obj(obj: dict) -> ChannelDirectory:
    channels = {
        name: frozenset(d.lower() for d in domains)
        for name, domains in obj.get("channels", {}).items()
    }
    categories = {
        name.casefold(): frozenset(c.casefold() for c in cats)
        for name, cats in obj.get("categories", {}).items()
    }
    return ChannelDirectory(channels=channels, categories=categories)


def levenshtein(a: str, b: str) -> int:
    """Minimal number of single-character edits turning a into b."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def name_similarity(a: str, b: str) -> float:
    """Normalized edit similarity of two names, 1.0 for an exact match."""
    na, nb = normalize_title(a), normalize_title(b)
    longest = max(len(na), len(nb))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(na, nb) / longest


def token_jaccard(a: str, b: str) -> float:
    ta = set(normalize_title(a).split())
    tb = set(normalize_title(b).split())
    union = ta | tb
    if not union:
        return 1.0
    return len(ta & tb) / len(union)


_PUNCT = string.punctuation + "‘’“”…"
_SENTENCE_END = re.compile(r"[.!?…][\"')’”\]]*$")


def extract_proper_nouns(text: str) -> set[str]:
    """Isolate proper nouns as maximal runs of capitalized tokens.

    A run consisting solely of the first token of a sentence is dropped:
    sentence-initial capitalization alone is no evidence of a name. Runs do
    not cross sentence boundaries. Results are casefolded.
    """
    nouns: set[str] = set()
    run: list[str] = []
    run_starts_sentence = False
    sentence_start = True

    def flush():
        if run and not (len(run) == 1 and run_starts_sentence):
            nouns.add(" ".join(run).casefold())
        run.clear()

    for raw in text.split():
        word = raw.strip(_PUNCT)
        capitalized = bool(word) and word[0].isupper()
        if capitalized:
            if not run:
                run_starts_sentence = sentence_start
            run.append(word)
        else:
            flush()
        sentence_start = bool(_SENTENCE_END.search(raw))
        if sentence_start:
            flush()
    flush()
    return nouns


def contains_mention(haystack: str | None, needle: str) -> float:
    """1.0 iff the needle occurs (casefolded) in a present haystack."""
    if haystack is None:
        return 0.0
    return 1.0 if needle.casefold() in haystack.casefold() else 0.0


_HOST_RE = re.compile(r"[a-z0-9]([a-z0-9.-]*[a-z0-9])?$")


def domain_of(url: str) -> str:
    """Lowercased host with any leading 'www.' stripped; '' if unparseable."""
    candidate = (url or "").strip()
    if not candidate:
        return ""
    if "://" not in candidate:
        candidate = "//" + candidate
    try:
        host = urlparse(candidate).hostname or ""
    except ValueError:
        return ""
    if "." not in host or not _HOST_RE.fullmatch(host):
        return ""
    if host.startswith("www."):
        host = host[4:]
    return host


def engagement_norm(count: int, max_count: int) -> float:
    """Log-scale a count against the run maximum onto [0, 1]."""
    if max_count <= 0:
        return 0.0
    return math.log1p(count) / math.log1p(max_count)


def extract_features(
    show: Show,
    page: FanPage,
    directory: ChannelDirectory,
    maxima: EngagementMaxima,
) -> FeatureVector:
    """Compute the 12 hook features for one show-page pair.

    Missing optional page content (about/website/site_text) always yields a
    zero flag or ratio: absence of evidence counts against a match.
    """
    channel = show.key.channel
    if not directory.has_channel(channel):
        raise MissingChannel(f"channel {channel!r} not in directory")
    domains = directory.domains_for(channel)
    title = show.display_title

    about_cf = (page.about or "").casefold()
    link_cf = page.link.casefold()
    f6 = 1.0 if any(d in about_cf or d in link_cf for d in domains) else 0.0
    f7 = 1.0 if page.website and domain_of(page.website) in domains else 0.0

    pn_desc = extract_proper_nouns(show.description or "")
    if pn_desc:
        pn_about = extract_proper_nouns(page.about or "")
        f10 = len(pn_desc & pn_about) / len(pn_desc)
    else:
        f10 = 0.0

    return FeatureVector(
        f1_name_sim=name_similarity(title, page.name),
        f2_token_jaccard=token_jaccard(title, page.name),
        f3_name_exact=1.0 if normalize_title(title) == normalize_title(page.name) else 0.0,
        f4_category_match=1.0
        if page.category.casefold() in directory.categories_for(show.category)
        else 0.0,
        f5_channel_in_page=contains_mention(page.about, channel),
        f6_channel_url_in_page=f6,
        f7_website_is_channel_site=f7,
        f8_site_mentions_channel=contains_mention(page.site_text, channel),
        f9_site_mentions_title=contains_mention(page.site_text, title),
        f10_propernoun_overlap=f10,
        f11_likes_norm=engagement_norm(page.likes, maxima.likes),
        f12_talking_norm=engagement_norm(page.talking_about, maxima.talking_about),
    )
