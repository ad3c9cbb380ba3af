"""Corpus ingestion: inline link markup to mention spans, plus value linking.

Input records are line-delimited JSON with title, page_id, lang, and text;
hyperlinks appear inline as ``[[Target Title]]`` or ``[[Target Title|shown
text]]``. Link targets resolve to entity ids through per-language title maps.
Dates and plain numbers are then linked by per-language regex tables shipped
as data (best effort by design: the tables are replaceable without touching
code). Entity mentions always win overlap ties, so value linking can never
damage a resolved link.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import date
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .fileio import read_tsv
from .linearize import known_languages
from .records import DATE, ENTITY, QUANTITY, Document, Mention

_LINK_RE = re.compile(r"\[\[([^\[\]|]+)(?:\|([^\[\]|]*))?\]\]")


@dataclass
class IngestStats:
    records_in: int = 0
    docs_out: int = 0
    dropped_links: int = 0
    bad_records: int = 0
    unknown_lang: int = 0

    def merge(self, other: "IngestStats") -> "IngestStats":
        return IngestStats(
            records_in=self.records_in + other.records_in,
            docs_out=self.docs_out + other.docs_out,
            dropped_links=self.dropped_links + other.dropped_links,
            bad_records=self.bad_records + other.bad_records,
            unknown_lang=self.unknown_lang + other.unknown_lang,
        )

    def to_dict(self) -> dict:
        return {
            "records_in": self.records_in,
            "docs_out": self.docs_out,
            "dropped_links": self.dropped_links,
            "bad_records": self.bad_records,
            "unknown_lang": self.unknown_lang,
        }


def _norm_title(title: str) -> str:
    return " ".join(title.replace("_", " ").split())


@dataclass
class TitleMap:
    """title → entity id for one language's pages."""

    lang: str
    entries: dict[str, str]

    def resolve(self, title: str) -> str | None:
        t = _norm_title(title)
        eid = self.entries.get(t)
        if eid is None and t:
            eid = self.entries.get(t[0].upper() + t[1:])
        return eid

    @classmethod
    def load_tsv(cls, path: str | Path, lang: str) -> "TitleMap":
        entries: dict[str, str] = {}
        for title, eid in read_tsv(path, 2):
            t = _norm_title(title)
            if entries.get(t, eid) != eid:
                raise ValueError(
                    f"{path}: title {t!r} maps to both {entries[t]} and {eid}"
                )
            entries[t] = eid
        return cls(lang=lang, entries=entries)


def _check_record(rec) -> str | None:
    if not isinstance(rec, Mapping):
        return "record is not an object"
    for key in ("title", "page_id", "lang", "text"):
        if key not in rec:
            return f"missing field {key!r}"
    if not isinstance(rec["text"], str) or not isinstance(rec["title"], str):
        return "title and text must be strings"
    return None


def _strip_markup(raw: str, resolve) -> tuple[str, list[Mention], int]:
    """Replace link markup with its display text, recording resolved spans."""
    pieces: list[str] = []
    mentions: list[Mention] = []
    dropped = 0
    pos = 0
    cursor = 0
    for m in _LINK_RE.finditer(raw):
        pieces.append(raw[pos : m.start()])
        cursor += m.start() - pos
        pos = m.end()
        surface = m.group(2) if m.group(2) is not None else m.group(1)
        if not surface:
            dropped += 1
            continue
        pieces.append(surface)
        eid = resolve(_norm_title(m.group(1)))
        if eid is None:
            dropped += 1
        else:
            mentions.append(
                Mention(cursor, cursor + len(surface), surface, ENTITY, entity_id=eid)
            )
        cursor += len(surface)
    pieces.append(raw[pos:])
    return "".join(pieces), mentions, dropped


def _diag(diagnostics, index, rec, reason) -> None:
    if diagnostics is not None:
        entry = {"record": index, "reason": reason}
        if isinstance(rec, Mapping) and "title" in rec:
            entry["title"] = rec["title"]
        diagnostics.append(entry)


def parse_corpus(
    records: Iterable[dict],
    title_map: TitleMap | Mapping[str, TitleMap],
    stats: IngestStats | None = None,
    diagnostics: list | None = None,
) -> Iterator[Document]:
    """Turn raw corpus records into validated documents with entity mentions.

    ``title_map`` is either one map (applied to every record) or a dict keyed
    by language. Bad records are skipped, never fatal: counters and the
    optional diagnostics list say what happened. Safe as a parallel map over
    record shards; merge the per-shard stats afterwards.
    """
    if stats is None:
        stats = IngestStats()
    known = set(known_languages())
    seen: set[str] = set()
    for i, rec in enumerate(records):
        stats.records_in += 1
        problem = _check_record(rec)
        if problem is not None:
            stats.bad_records += 1
            _diag(diagnostics, i, rec, problem)
            continue
        lang = rec["lang"]
        if lang not in known:
            stats.unknown_lang += 1
            _diag(diagnostics, i, rec, f"unknown language {lang!r}")
            continue
        if isinstance(title_map, TitleMap):
            tmap = title_map
        else:
            tmap = title_map.get(lang)
            if tmap is None:
                stats.bad_records += 1
                _diag(diagnostics, i, rec, f"no title map for language {lang!r}")
                continue
        doc_id = f"{lang}:{rec['page_id']}"
        if doc_id in seen:
            stats.bad_records += 1
            _diag(diagnostics, i, rec, f"duplicate document {doc_id}")
            continue
        seen.add(doc_id)
        text, mentions, dropped = _strip_markup(rec["text"], tmap.resolve)
        stats.dropped_links += dropped
        doc = Document(
            doc_id=doc_id,
            page_id=str(rec["page_id"]),
            lang=lang,
            title=rec["title"],
            text=text,
            mentions=mentions,
        )
        doc.validate()
        stats.docs_out += 1
        yield doc


# --- date and quantity linking ----------------------------------------------

def _load_patterns() -> dict:
    path = resources.files("relkit.data").joinpath("date_patterns.json")
    with path.open(encoding="utf-8") as fh:
        return json.load(fh)


class ValueLinker:
    """Adds date and quantity mentions to documents, per-language regexes."""

    def __init__(self, table: dict | None = None):
        table = table if table is not None else _load_patterns()
        self._year = re.compile(table["year_pattern"])
        self._dates: dict[str, list[re.Pattern]] = {}
        self._quantity: dict[str, re.Pattern] = {}
        self._months: dict[str, dict[str, int]] = {}
        self._sep: dict[str, str] = {}
        for lang, cfg in table["languages"].items():
            months = {k.lower(): v for k, v in cfg.get("months", {}).items()}
            self._months[lang] = months
            compiled = []
            for pattern in cfg.get("patterns", []):
                if "{M}" in pattern:
                    if not months:
                        continue
                    names = sorted(months, key=len, reverse=True)
                    pattern = pattern.replace(
                        "{M}", "|".join(re.escape(n) for n in names)
                    )
                compiled.append(re.compile(pattern, re.IGNORECASE))
            self._dates[lang] = compiled
            sep = cfg.get("decimal_sep", ".")
            self._sep[lang] = sep
            self._quantity[lang] = re.compile(
                rf"(?<![\d.,])\d+(?:{re.escape(sep)}\d+)?(?![.,]?\d)"
            )

    def _iso(self, match: re.Match, months: dict[str, int]) -> str | None:
        groups = match.groupdict()
        year = int(groups["year"])
        if "month_name" in groups and groups["month_name"] is not None:
            month = months.get(groups["month_name"].lower())
            if month is None:
                return None
        else:
            month = int(groups["month"])
        day = int(groups["day"])
        try:
            date(year, month, day)
        except ValueError:
            return None
        return f"{year:04d}-{month:02d}-{day:02d}"

    def link(self, doc: Document) -> Document:
        if doc.lang not in self._dates:
            return doc
        spans = [(m.start, m.end) for m in doc.mentions]

        def free(s: int, e: int) -> bool:
            return all(e <= a or s >= b for a, b in spans)

        new: list[Mention] = []

        def claim(s: int, e: int, kind: str, value: str) -> None:
            spans.append((s, e))
            new.append(Mention(s, e, doc.text[s:e], kind, value=value))

        months = self._months[doc.lang]
        for pattern in self._dates[doc.lang]:
            for m in pattern.finditer(doc.text):
                s, e = m.span()
                if not free(s, e):
                    continue
                value = self._iso(m, months)
                if value is not None:
                    claim(s, e, DATE, value)
        for m in self._year.finditer(doc.text):
            s, e = m.span()
            if free(s, e):
                claim(s, e, DATE, m.group("year"))
        sep = self._sep[doc.lang]
        for m in self._quantity[doc.lang].finditer(doc.text):
            s, e = m.span()
            if free(s, e):
                claim(s, e, QUANTITY, m.group(0).replace(sep, "."))

        if not new:
            return doc
        out = Document(
            doc_id=doc.doc_id,
            page_id=doc.page_id,
            lang=doc.lang,
            title=doc.title,
            text=doc.text,
            mentions=sorted([*doc.mentions, *new], key=lambda m: (m.start, m.end)),
        )
        out.validate()
        return out


@lru_cache(maxsize=1)
def _default_linker() -> ValueLinker:
    return ValueLinker()


def link_values(doc: Document, linker: ValueLinker | None = None) -> Document:
    """Attach date and quantity mentions; idempotent, entity links untouched."""
    return (linker or _default_linker()).link(doc)


def ingest(
    records: Iterable[dict],
    title_map: TitleMap | Mapping[str, TitleMap],
    stats: IngestStats | None = None,
    diagnostics: list | None = None,
    linker: ValueLinker | None = None,
) -> Iterator[Document]:
    """parse_corpus followed by link_values, as one streaming pass."""
    for doc in parse_corpus(records, title_map, stats=stats, diagnostics=diagnostics):
        yield link_values(doc, linker)
