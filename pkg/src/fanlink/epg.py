"""Parse XMLTV-style television listings and aggregate them into unique shows.

Shows are keyed by {channel, normalized title, duration}: broadcast schedules
repeat the same programme daily and weekly, so the raw records collapse into
a much smaller set of distinct shows before any fanpage matching happens.
"""

from __future__ import annotations

import datetime as dt
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field

from .errors import MalformedInput, MissingField

MINUTES_PER_DAY = 1440


@dataclass(frozen=True)
class EpgRecord:
    """One programme entry: a single broadcast slot on one day."""

    id: str
    day: dt.date
    title: str
    category: str
    start: int  # minutes from midnight
    stop: int   # minutes from midnight
    channel: str
    subtitle: str | None = None
    description: str | None = None


@dataclass(frozen=True, order=True)
class ShowKey:
    """Unique identifier of an aggregated show."""

    channel: str
    norm_title: str
    duration_min: int

    def as_str(self) -> str:
        return f"{self.channel}::{self.norm_title}::{self.duration_min}"


@dataclass
class Show:
    """A distinct show with the records that collapsed into it."""

    key: ShowKey
    display_title: str
    record_ids: list[str] = field(default_factory=list)
    description: str | None = None
    category: str = ""


def normalize_title(raw: str) -> str:
    """Casefold and collapse all whitespace runs to single spaces."""
    return " ".join(raw.casefold().split())


def duration(rec: EpgRecord) -> int:
    """Programme length in minutes; stop at or before start wraps past midnight."""
    if rec.stop > rec.start:
        return rec.stop - rec.start
    return rec.stop - rec.start + MINUTES_PER_DAY


def _parse_timestamp(value: str, pos: int, what: str) -> tuple[dt.date, int]:
    # Accepts YYYYMMDDHHMMSS with optional trailing timezone, which is ignored.
    digits = value.strip()
    split = len(digits)
    for i, ch in enumerate(digits):
        if not ch.isdigit():
            split = i
            break
    digits = digits[:split]
    if len(digits) < 12:
        raise MalformedInput(f"programme #{pos}: bad {what} timestamp {value!r}")
    try:
        day = dt.date(int(digits[0:4]), int(digits[4:6]), int(digits[6:8]))
        hour, minute = int(digits[8:10]), int(digits[10:12])
    except ValueError as exc:
        raise MalformedInput(f"programme #{pos}: bad {what} timestamp {value!r}") from exc
    if hour > 23 or minute > 59:
        raise MalformedInput(f"programme #{pos}: bad {what} timestamp {value!r}")
    return day, hour * 60 + minute


def _child_text(elem: ET.Element, tag: str) -> str | None:
    child = elem.find(tag)
    if child is None:
        return None
    return (child.text or "").strip()


def parse_xmltv(source) -> list[EpgRecord]:
    """Parse a `<tv>` listings document from bytes, text, or a file object.

    Only the documented subset is read: `<programme start stop channel>`
    with `<title>`, `<category>`, `<sub-title>` and `<desc>` children.
    Unknown elements and attributes are ignored.
    """
    data = source.read() if hasattr(source, "read") else source
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedInput(f"not well-formed XML: {exc}") from exc

    records = []
    for pos, elem in enumerate(root.iter("programme"), start=1):
        channel = (elem.get("channel") or "").strip()
        if not channel:
            raise MissingField(f"programme #{pos}: missing channel")
        for attr in ("start", "stop"):
            if not elem.get(attr):
                raise MissingField(f"programme #{pos}: missing {attr}")
        title = _child_text(elem, "title")
        if not title:
            raise MissingField(f"programme #{pos}: missing title")
        day, start = _parse_timestamp(elem.get("start"), pos, "start")
        _, stop = _parse_timestamp(elem.get("stop"), pos, "stop")
        records.append(
            EpgRecord(
                id=elem.get("id") or str(pos),
                day=day,
                title=title,
                category=_child_text(elem, "category") or "",
                start=start,
                stop=stop,
                channel=channel,
                subtitle=_child_text(elem, "sub-title"),
                description=_child_text(elem, "desc"),
            )
        )
    return records


def aggregate(records: list[EpgRecord]) -> list[Show]:
    """Collapse records into shows keyed by {channel, normalized title, duration}.

    Output order is first appearance. The representative description is the
    longest one seen; the category is the most frequent, ties broken
    lexicographically.
    """
    shows: dict[ShowKey, Show] = {}
    categories: dict[ShowKey, Counter] = {}
    for rec in records:
        key = ShowKey(rec.channel, normalize_title(rec.title), duration(rec))
        show = shows.get(key)
        if show is None:
            show = Show(key=key, display_title=rec.title)
            shows[key] = show
            categories[key] = Counter()
        show.record_ids.append(rec.id)
        categories[key][rec.category] += 1
        if rec.description is not None:
            if show.description is None or len(rec.description) > len(show.description):
                show.description = rec.description
    for key, show in shows.items():
        counts = categories[key]
        show.category = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return list(shows.values())
