"""Candidate triplets out of linked documents.

Four passes, in pipeline order: align mention pairs against the fact store,
collapse inverse relations onto a canonical direction, cut the relation
inventory to the K most frequent, and gate the survivors on entailment
probability. Candidates that clear the gate become silver.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .fileio import read_tsv
from .records import CANDIDATE, ENTITY, NLI_REJECTED, SILVER, Document, Triplet
from .scorers import PairScorer, ScoreItem, ScorerError


@dataclass(frozen=True)
class RelationEntry:
    pid: str
    name_en: str
    rank: int


@dataclass(frozen=True)
class RelationVocab:
    """Relation inventory: canonical pids with English names and frequency
    ranks, plus the inverse-direction aliases that collapse onto them."""

    entries: tuple[RelationEntry, ...]
    inverse_map: Mapping[str, str]

    def __post_init__(self):
        pids = [e.pid for e in self.entries]
        if len(set(pids)) != len(pids):
            raise ValueError("duplicate pid in relation vocabulary")
        if sorted(e.rank for e in self.entries) != list(range(1, len(self.entries) + 1)):
            raise ValueError("ranks must be a permutation of 1..n")
        for alias, canon in self.inverse_map.items():
            if self.inverse_map.get(canon, canon) != canon:
                raise ValueError(
                    f"inverse map not idempotent: {alias} -> {canon} -> "
                    f"{self.inverse_map[canon]}"
                )

    def names(self) -> dict[str, str]:
        return {e.pid: e.name_en for e in self.entries}

    def canonical(self, pid: str) -> str:
        return self.inverse_map.get(pid, pid)

    def restrict(self, pids: Iterable[str]) -> "RelationVocab":
        """Sub-vocabulary over the given pids, re-ranked 1..m in the original
        rank order. Aliases whose canonical pid was dropped go with it."""
        keep = set(pids)
        survivors = sorted((e for e in self.entries if e.pid in keep), key=lambda e: e.rank)
        return RelationVocab(
            entries=tuple(
                RelationEntry(e.pid, e.name_en, i) for i, e in enumerate(survivors, 1)
            ),
            inverse_map={a: c for a, c in self.inverse_map.items() if c in keep},
        )

    def save(self, path) -> None:
        payload = {
            "relations": [
                {"pid": e.pid, "name": e.name_en, "rank": e.rank} for e in self.entries
            ],
            "inverse": dict(sorted(self.inverse_map.items())),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RelationVocab":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            entries=tuple(
                RelationEntry(r["pid"], r["name"], int(r["rank"]))
                for r in payload["relations"]
            ),
            inverse_map=dict(payload["inverse"]),
        )


def orient_inverse_pairs(
    pairs: Iterable[tuple[str, str]], counts: Mapping[str, int]
) -> dict[str, str]:
    """Choose the canonical direction for each inverse pair.

    The pid seen more often in the raw candidate stream wins; ties go to the
    smaller pid string. Returns the alias -> canonical map."""
    inverse: dict[str, str] = {}
    for a, b in pairs:
        canon, alias = sorted((a, b), key=lambda p: (-counts.get(p, 0), p))
        inverse[alias] = canon
    return inverse


@dataclass(frozen=True)
class TripleStore:
    """Reference facts: (subject entity id, pid, object entity id or literal)."""

    facts: frozenset[tuple[str, str, str]]

    @classmethod
    def from_facts(cls, facts: Iterable[Sequence[str]]) -> "TripleStore":
        return cls(frozenset((s, p, o) for s, p, o in facts))

    @classmethod
    def load_tsv(cls, path) -> "TripleStore":
        return cls.from_facts(read_tsv(path, 3))

    @cached_property
    def _by_subject(self) -> dict[str, tuple[tuple[str, str], ...]]:
        grouped: dict[str, list[tuple[str, str]]] = {}
        for s, p, o in sorted(self.facts):
            grouped.setdefault(s, []).append((p, o))
        return {s: tuple(po) for s, po in grouped.items()}

    def facts_for(self, subj: str) -> tuple[tuple[str, str], ...]:
        """(pid, object) pairs with this subject, sorted for determinism."""
        return self._by_subject.get(subj, ())


def align(doc: Document, store: TripleStore) -> list[Triplet]:
    """Every ordered mention pair backed by a store fact becomes a candidate.

    Subjects must be entity mentions; objects match on entity id, or on the
    normalized literal for date and quantity mentions."""
    out: list[Triplet] = []
    for i, subj in enumerate(doc.mentions):
        if subj.kind != ENTITY:
            continue
        facts = store.facts_for(subj.entity_id)
        if not facts:
            continue
        for j, obj in enumerate(doc.mentions):
            if j == i:
                continue
            obj_key = obj.entity_id if obj.kind == ENTITY else obj.value
            for pid, value in facts:
                if value == obj_key:
                    out.append(
                        Triplet(f"{doc.doc_id}:{i}-{pid}-{j}", doc.doc_id, i, pid, j)
                    )
    return out


def collapse_inverse(t: Triplet, vocab: RelationVocab) -> Triplet:
    """Rewrite onto the canonical relation, swapping subject and object when
    the alias runs the other way. Pids outside the vocabulary pass through
    unchanged; the frequency cut disposes of them."""
    canon = vocab.canonical(t.pid)
    if canon == t.pid:
        return t
    return replace(t, pid=canon, subj_idx=t.obj_idx, obj_idx=t.subj_idx)


@dataclass(frozen=True)
class TopKResult:
    """Outcome of the frequency cut: surviving pids (most frequent first in
    global mode, sorted union in per-language mode) and the kept triplets in
    input order."""

    pids: tuple[str, ...]
    kept: list[Triplet]
    by_language: dict[str, tuple[str, ...]] | None = None


def _rank_pids(counts: Counter, k: int) -> tuple[str, ...]:
    return tuple(sorted(counts, key=lambda p: (-counts[p], p))[:k])


def select_top_k(
    candidates: Iterable[Triplet],
    k: int,
    langs: Mapping[str, str] | None = None,
) -> TopKResult:
    """Keep triplets whose relation is among the k most frequent.

    Ties break toward the ascending pid string. With ``langs`` (doc_id to
    language code) the cut runs per language instead of globally."""
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    cands = list(candidates)
    if langs is None:
        pids = _rank_pids(Counter(t.pid for t in cands), k)
        chosen = set(pids)
        return TopKResult(pids=pids, kept=[t for t in cands if t.pid in chosen])
    per_lang: dict[str, Counter] = {}
    for t in cands:
        per_lang.setdefault(langs.get(t.doc_id, "und"), Counter())[t.pid] += 1
    by_language = {lang: _rank_pids(c, k) for lang, c in sorted(per_lang.items())}
    chosen_by_lang = {lang: set(sel) for lang, sel in by_language.items()}
    kept = [t for t in cands if t.pid in chosen_by_lang[langs.get(t.doc_id, "und")]]
    pids = tuple(sorted({p for sel in by_language.values() for p in sel}))
    return TopKResult(pids=pids, kept=kept, by_language=by_language)


def nli_hypothesis(doc: Document, t: Triplet, names: Mapping[str, str]) -> str:
    """Subject, relation name, and object surface forms joined by <sep>."""
    subj = doc.mentions[t.subj_idx].surface
    obj = doc.mentions[t.obj_idx].surface
    return f"{subj} <sep> {names.get(t.pid, t.pid)} <sep> {obj}"


def nli_filter(
    t: Triplet,
    doc: Document,
    scorer: PairScorer,
    names: Mapping[str, str],
    threshold: float = 0.1,
) -> Triplet:
    """Score one candidate against its document text; strictly below the
    threshold it is rejected, otherwise it becomes silver. The entailment
    score is recorded either way."""
    if t.status != CANDIDATE:
        raise ValueError(f"{t.triplet_id}: nli_filter expects a candidate, got {t.status}")
    item = ScoreItem(doc.text, nli_hypothesis(doc, t, names), key=(t.doc_id, t.triplet_id))
    score = scorer.score([item])[0]
    status = NLI_REJECTED if score < threshold else SILVER
    return t.advance(status, entail_score=score)


def nli_filter_stream(
    pairs: Iterable[tuple[Triplet, Document]],
    scorer: PairScorer,
    names: Mapping[str, str],
    threshold: float = 0.1,
    batch_size: int = 32,
    errors: list[dict] | None = None,
) -> Iterator[Triplet]:
    """Batched entailment pass over a candidate stream.

    Anything not in candidate status passes through untouched. A scorer
    failure leaves the whole batch candidate and appends one error record
    per affected triplet, so the pipeline can continue and retry later.
    """
    batch: list[tuple[Triplet, Document]] = []

    def flush() -> Iterator[Triplet]:
        if not batch:
            return
        items = [
            ScoreItem(d.text, nli_hypothesis(d, t, names), key=(t.doc_id, t.triplet_id))
            for t, d in batch
        ]
        try:
            scores = scorer.score(items)
        except ScorerError as exc:
            for t, _ in batch:
                if errors is not None:
                    errors.append({"triplet_id": t.triplet_id, "error": str(exc)})
                yield t
        else:
            for (t, _), score in zip(batch, scores):
                status = NLI_REJECTED if score < threshold else SILVER
                yield t.advance(status, entail_score=score)
        batch.clear()

    for t, doc in pairs:
        if t.status != CANDIDATE:
            yield t
            continue
        batch.append((t, doc))
        if len(batch) >= batch_size:
            yield from flush()
    yield from flush()
