"""Core record types shared across the pipeline.

All character offsets are Unicode code point indices into the document text
(plain Python string indexing), never byte offsets.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

# Mention kinds.
ENTITY = "entity"
DATE = "date"
QUANTITY = "quantity"
MENTION_KINDS = (ENTITY, DATE, QUANTITY)

# Triplet statuses, in pipeline order.
CANDIDATE = "candidate"
NLI_REJECTED = "nli_rejected"
SILVER = "silver"
CRITIC_REJECTED = "critic_rejected"
GOLD_TRUE = "gold_true"
GOLD_FALSE = "gold_false"
STATUSES = (CANDIDATE, NLI_REJECTED, SILVER, CRITIC_REJECTED, GOLD_TRUE, GOLD_FALSE)

# Legal forward moves. Filters only push a triplet further down the pipeline;
# nothing is ever resurrected.
_TRANSITIONS = {
    CANDIDATE: {NLI_REJECTED, SILVER},
    SILVER: {CRITIC_REJECTED, GOLD_TRUE, GOLD_FALSE},
}


def json_line(record: dict) -> str:
    """Serialize one record for a line-delimited file, deterministically."""
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class Mention:
    """A linked span of document text.

    Entity mentions carry the knowledge-base id their link target resolved to;
    date and quantity mentions instead carry a normalized literal (ISO-8601
    date or decimal string) in ``value``.
    """

    start: int
    end: int
    surface: str
    kind: str = ENTITY
    entity_id: str | None = None
    value: str | None = None

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad mention span ({self.start}, {self.end})")
        if not self.surface:
            raise ValueError("empty mention surface")
        if self.kind not in MENTION_KINDS:
            raise ValueError(f"unknown mention kind {self.kind!r}")
        if self.kind == ENTITY and not self.entity_id:
            raise ValueError("entity mention without entity_id")
        if self.kind != ENTITY and self.value is None:
            raise ValueError(f"{self.kind} mention without normalized value")

    def to_dict(self) -> dict:
        d = {"start": self.start, "end": self.end, "surface": self.surface, "kind": self.kind}
        if self.entity_id is not None:
            d["entity_id"] = self.entity_id
        if self.value is not None:
            d["value"] = self.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Mention":
        return cls(
            start=d["start"],
            end=d["end"],
            surface=d["surface"],
            kind=d.get("kind", ENTITY),
            entity_id=d.get("entity_id"),
            value=d.get("value"),
        )


@dataclass
class Document:
    """One abstract with its linked mentions.

    ``page_id`` identifies the source page in the knowledge base; the same
    page_id may appear under several languages when the page has interlanguage
    counterparts (the split logic relies on that).
    """

    doc_id: str
    page_id: str
    lang: str
    title: str
    text: str
    mentions: list[Mention] = field(default_factory=list)

    def validate(self) -> None:
        """Check span bounds, slice agreement, ordering, and non-overlap."""
        prev_end = 0
        prev_start = -1
        for m in self.mentions:
            if m.end > len(self.text):
                raise ValueError(f"{self.doc_id}: mention span past end of text")
            if self.text[m.start : m.end] != m.surface:
                raise ValueError(
                    f"{self.doc_id}: surface {m.surface!r} does not match "
                    f"text[{m.start}:{m.end}]"
                )
            if m.start < prev_start:
                raise ValueError(f"{self.doc_id}: mentions not sorted by start")
            if m.start < prev_end:
                raise ValueError(f"{self.doc_id}: overlapping mentions")
            prev_start, prev_end = m.start, m.end

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "page_id": self.page_id,
            "lang": self.lang,
            "title": self.title,
            "text": self.text,
            "mentions": [m.to_dict() for m in self.mentions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        return cls(
            doc_id=d["doc_id"],
            page_id=d["page_id"],
            lang=d["lang"],
            title=d["title"],
            text=d["text"],
            mentions=[Mention.from_dict(m) for m in d.get("mentions", [])],
        )


@dataclass(frozen=True)
class Triplet:
    """A candidate fact grounded in one document.

    Subject and object are mention indices into the owning document. The
    status field walks forward through the pipeline (see STATUSES); scores are
    recorded by the filter that produced them and entity types are filled in
    at dataset-build time.
    """

    triplet_id: str
    doc_id: str
    subj_idx: int
    pid: str
    obj_idx: int
    status: str = CANDIDATE
    entail_score: float | None = None
    critic_score: float | None = None
    subj_type: str | None = None
    obj_type: str | None = None

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.subj_idx == self.obj_idx:
            raise ValueError("subject and object use the same mention")

    def advance(self, status: str, **updates) -> "Triplet":
        """Return a copy moved to ``status``, enforcing forward-only moves."""
        if status != self.status and status not in _TRANSITIONS.get(self.status, ()):
            raise ValueError(f"illegal status move {self.status} -> {status}")
        return replace(self, status=status, **updates)

    def to_dict(self) -> dict:
        d = {
            "triplet_id": self.triplet_id,
            "doc_id": self.doc_id,
            "subj_idx": self.subj_idx,
            "pid": self.pid,
            "obj_idx": self.obj_idx,
            "status": self.status,
        }
        for name in ("entail_score", "critic_score", "subj_type", "obj_type"):
            v = getattr(self, name)
            if v is not None:
                d[name] = v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Triplet":
        return cls(
            triplet_id=d["triplet_id"],
            doc_id=d["doc_id"],
            subj_idx=d["subj_idx"],
            pid=d["pid"],
            obj_idx=d["obj_idx"],
            status=d.get("status", CANDIDATE),
            entail_score=d.get("entail_score"),
            critic_score=d.get("critic_score"),
            subj_type=d.get("subj_type"),
            obj_type=d.get("obj_type"),
        )
