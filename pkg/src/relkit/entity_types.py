"""Entity-type map construction and upkeep.

The classifier that actually assigns labels is external; this module owns the
input template it consumes, the selection of a clean training subset from a
lexical graph (anything at distance ≤ 1 from the curated core set), and the
confirm-or-replace bookkeeping when fresh predictions land on top of an
existing map.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Callable, Iterable, Mapping

from .fileio import read_tsv, write_tsv
from .linearize import type_labels

UNKNOWN = "unknown"

_INPUT_RE = re.compile(r"^\[CLS\] (.*?) \[SEP\] (.*) \[SEP\]$", re.DOTALL)


@dataclass(frozen=True)
class Synset:
    synset_id: str
    lemma: str
    description: str
    neighbors: tuple[str, ...] = ()
    in_core: bool = False


def build_input(s: Synset) -> str:
    """Classifier input: `[CLS] <lemma> [SEP] <description> [SEP]`."""
    if not s.lemma.strip() or not s.description.strip():
        raise ValueError(f"synset {s.synset_id}: empty lemma or description")
    return f"[CLS] {s.lemma} [SEP] {s.description} [SEP]"


def parse_input(text: str) -> tuple[str, str]:
    """Recover (lemma, description) from a classifier input string.

    Ambiguous only if the lemma itself contains a ` [SEP] ` separator, which
    no real lemma does.
    """
    m = _INPUT_RE.match(text)
    if not m:
        raise ValueError(f"not a classifier input: {text[:60]!r}")
    return m.group(1), m.group(2)


def load_synset_graph(
    edges_path: str | Path,
    metadata_path: str | Path,
    core_path: str | Path,
) -> dict[str, Synset]:
    """Load the lexical graph from an edge list, node metadata, and core ids.

    Edges are made symmetric regardless of the direction they were written
    in; self-loops are dropped. Edges or core ids mentioning an unknown
    synset are an error rather than silently ignored.
    """
    meta = {row[0]: (row[1], row[2]) for row in read_tsv(metadata_path, 3)}

    core: set[str] = set()
    for line in Path(core_path).read_text(encoding="utf-8").splitlines():
        sid = line.strip()
        if not sid or sid.startswith("#"):
            continue
        if sid not in meta:
            raise ValueError(f"core list mentions unknown synset {sid}")
        core.add(sid)

    adj: dict[str, set[str]] = {sid: set() for sid in meta}
    for a, b in read_tsv(edges_path, 2):
        for sid in (a, b):
            if sid not in meta:
                raise ValueError(f"edge list mentions unknown synset {sid}")
        if a != b:
            adj[a].add(b)
            adj[b].add(a)

    return {
        sid: Synset(
            synset_id=sid,
            lemma=lemma,
            description=description,
            neighbors=tuple(sorted(adj[sid])),
            in_core=sid in core,
        )
        for sid, (lemma, description) in meta.items()
    }


def select_training_subset(synsets: Iterable[Synset]) -> list[Synset]:
    """Keep synsets that are in the core set or adjacent to one."""
    synsets = list(synsets)
    core_ids = {s.synset_id for s in synsets if s.in_core}
    return [
        s for s in synsets if s.in_core or any(n in core_ids for n in s.neighbors)
    ]


def split_train_val(
    subset: list[Synset], ratio: float = 0.8, seed: int = 0
) -> tuple[list[Synset], list[Synset]]:
    """Seeded shuffle, then cut at ratio. Disjoint; union is the input."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    shuffled = list(subset)
    Random(seed).shuffle(shuffled)
    cut = int(len(shuffled) * ratio)
    return shuffled[:cut], shuffled[cut:]


@dataclass(frozen=True)
class EntityTypeMap:
    """entity_id → label; every label must come from the fixed 13-value set."""

    entries: dict[str, str]

    def __post_init__(self):
        allowed = type_labels()
        for eid, label in self.entries.items():
            if label not in allowed:
                raise ValueError(f"entity {eid}: label {label!r} not in the tagset")

    def get(self, entity_id: str) -> str:
        return self.entries.get(entity_id, UNKNOWN)

    def save_tsv(self, path: str | Path) -> None:
        write_tsv(path, sorted(self.entries.items()))

    @classmethod
    def load_tsv(cls, path: str | Path) -> "EntityTypeMap":
        return cls({eid: label for eid, label in read_tsv(path, 2)})


@dataclass(frozen=True)
class TypingUpdate:
    final: EntityTypeMap
    confirmations: int
    changes: int
    added: int


def confirm_or_replace(
    prior: EntityTypeMap, predicted: EntityTypeMap
) -> TypingUpdate:
    """Let new predictions win everywhere, keeping score against the prior.

    Entities only in `predicted` are the newly labeled ones and are counted
    apart from confirmations/changes, which partition the prior map.
    """
    missing = prior.entries.keys() - predicted.entries.keys()
    if missing:
        raise ValueError(
            f"predictions missing for {len(missing)} prior entities, "
            f"e.g. {sorted(missing)[:3]}"
        )
    confirmations = sum(
        1 for k, v in prior.entries.items() if predicted.entries[k] == v
    )
    return TypingUpdate(
        final=EntityTypeMap(dict(predicted.entries)),
        confirmations=confirmations,
        changes=len(prior.entries) - confirmations,
        added=len(predicted.entries) - len(prior.entries),
    )


def apply_classifier(
    entities: Mapping[str, tuple[str, str]],
    classify: Callable[[str], str],
) -> EntityTypeMap:
    """Run an external classifier over entity_id → (lemma, description).

    The classifier must return a label from the 13-value set; anything else
    fails map validation immediately.
    """
    entries = {}
    for eid in sorted(entities):
        lemma, description = entities[eid]
        entries[eid] = classify(build_input(Synset(eid, lemma, description)))
    return EntityTypeMap(entries)
