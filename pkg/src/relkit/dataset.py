"""Final dataset assembly.

Splits are hash-assigned per page so reruns need no stored state, with an
interlanguage table giving translated pages one shared identity and therefore
one shared split. Human-validated triplets become per-split per-language
files with entity types attached, plus the count and distribution tables
that describe the result.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from hashlib import blake2b
from itertools import accumulate
from pathlib import Path
from typing import Collection, Iterable, Mapping

from .entity_types import EntityTypeMap
from .evaluate import EvalTriplet
from .extract import RelationVocab
from .fileio import read_tsv, write_jsonl
from .records import DATE, GOLD_TRUE, QUANTITY, Document, Mention, Triplet

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class PageKeyTable:
    """Cross-lingual page identity.

    Pages linked as translations of each other map to one shared key; a page
    absent from the table is its own key, namespaced by language."""

    links: Mapping[tuple[str, str], str]

    def key_of(self, lang: str, page_id: str) -> str:
        return self.links.get((lang, page_id), f"{lang}:{page_id}")

    @classmethod
    def load_tsv(cls, path: str | Path) -> "PageKeyTable":
        links: dict[tuple[str, str], str] = {}
        for lang, page_id, key in read_tsv(path, 3):
            prev = links.setdefault((lang, page_id), key)
            if prev != key:
                raise ValueError(f"{lang}/{page_id}: conflicting keys {prev!r} and {key!r}")
        return cls(links)


@dataclass(frozen=True)
class SplitAssignment:
    by_page: Mapping[str, str]

    def split_of(self, page_key: str) -> str | None:
        return self.by_page.get(page_key)


def _unit_interval(seed: int, key: str) -> float:
    digest = blake2b(f"{seed}:{key}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


def assign_splits(
    page_keys: Iterable[str],
    ratios: tuple[float, ...] = (0.8, 0.1, 0.1),
    seed: int = 0,
    names: tuple[str, ...] = SPLITS,
) -> SplitAssignment:
    """Deterministically bucket page keys by a seeded hash.

    Each key hashes to a point in [0, 1); cumulative ratio boundaries decide
    the bucket. The same (key, seed) pair always lands in the same split, so
    assignments never need storing."""
    if len(ratios) != len(names) or not names:
        raise ValueError(f"{len(ratios)} ratios for {len(names)} split names")
    if any(r < 0 for r in ratios):
        raise ValueError(f"negative ratio in {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios sum to {sum(ratios)}, expected 1")
    bounds = list(accumulate(ratios))
    by_page: dict[str, str] = {}
    for key in sorted(set(page_keys)):
        u = _unit_interval(seed, key)
        by_page[key] = next(
            (name for name, hi in zip(names, bounds) if u < hi), names[-1]
        )
    return SplitAssignment(by_page)


def mention_type(m: Mention, type_map: EntityTypeMap) -> str:
    """Entity mentions look up the type map; literals carry their kind."""
    if m.kind == DATE:
        return "date"
    if m.kind == QUANTITY:
        return "number"
    return type_map.get(m.entity_id)


@dataclass(frozen=True)
class GoldDataset:
    """Validated triplets grouped into (split, language) buckets of document
    records, with (pid, lang, split) occurrence counts alongside."""

    records: dict[tuple[str, str], list[dict]]
    counts: dict[tuple[str, str, str], int]


def build_gold(
    triplets: Iterable[Triplet],
    docs: Mapping[str, Document],
    vocab: RelationVocab,
    type_map: EntityTypeMap,
    keys: PageKeyTable,
    assignment: SplitAssignment,
) -> GoldDataset:
    """Assemble the human-validated dataset.

    Keeps triplets judged true whose relation is in the (already restricted)
    vocabulary, attaches both entity types, and groups documents by split and
    language. A triplet whose page has no split assignment is an invariant
    breach and fails the build."""
    pids = set(vocab.names())
    by_doc: dict[str, list[Triplet]] = {}
    for t in triplets:
        if t.status == GOLD_TRUE and t.pid in pids:
            by_doc.setdefault(t.doc_id, []).append(t)

    records: dict[tuple[str, str], list[dict]] = {}
    counts: Counter = Counter()
    for doc_id in sorted(by_doc):
        doc = docs.get(doc_id)
        if doc is None:
            raise ValueError(f"no document for validated triplets of {doc_id}")
        split = assignment.split_of(keys.key_of(doc.lang, doc.page_id))
        if split is None:
            raise ValueError(
                f"page {keys.key_of(doc.lang, doc.page_id)} ({doc_id}) has no split"
            )
        rows = []
        for t in sorted(by_doc[doc_id], key=lambda t: t.triplet_id):
            subj, obj = doc.mentions[t.subj_idx], doc.mentions[t.obj_idx]
            rows.append(
                EvalTriplet(
                    subj_surface=subj.surface,
                    obj_surface=obj.surface,
                    relation=t.pid,
                    subj_span=(subj.start, subj.end),
                    obj_span=(obj.start, obj.end),
                    subj_type=mention_type(subj, type_map),
                    obj_type=mention_type(obj, type_map),
                ).to_dict()
            )
            counts[(t.pid, doc.lang, split)] += 1
        records.setdefault((split, doc.lang), []).append(
            {
                "doc_id": doc.doc_id,
                "page_id": doc.page_id,
                "lang": doc.lang,
                "title": doc.title,
                "text": doc.text,
                "triplets": rows,
            }
        )
    return GoldDataset(records=records, counts=dict(counts))


def write_dataset(dataset: GoldDataset, out_dir: str | Path) -> list[Path]:
    """One `<split>.<lang>.jsonl` file per bucket; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for split, lang in sorted(dataset.records):
        path = out / f"{split}.{lang}.jsonl"
        write_jsonl(path, dataset.records[(split, lang)])
        paths.append(path)
    return paths


def counts_table(
    dataset: GoldDataset,
    names: Mapping[str, str],
    splits: tuple[str, ...] = SPLITS,
) -> list[dict]:
    """Per-relation instance counts by split, most frequent relation first."""
    per_rel: dict[str, Counter] = {}
    for (pid, _lang, split), n in dataset.counts.items():
        per_rel.setdefault(pid, Counter())[split] += n
    rows = []
    for pid in sorted(per_rel, key=lambda p: (-sum(per_rel[p].values()), p)):
        c = per_rel[pid]
        rows.append(
            {
                "relation": names.get(pid, pid),
                **{s: c.get(s, 0) for s in splits},
                "total": sum(c.values()),
            }
        )
    return rows


@dataclass(frozen=True)
class DistributionReport:
    """Relation distribution per language: (count, percent of the language's
    triplets), plus the percentage covered by a configured relation subset."""

    by_language: dict[str, dict[str, tuple[int, float]]]
    rollup_pct: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "by_language": {
                lang: {
                    pid: {"count": n, "pct": pct} for pid, (n, pct) in sorted(rels.items())
                }
                for lang, rels in sorted(self.by_language.items())
            },
            "rollup_pct": dict(sorted(self.rollup_pct.items())),
        }


def distribution_report(
    counts: Mapping[tuple[str, str, str], int],
    rollup: Collection[str] = (),
) -> DistributionReport:
    """Distribution over (pid, lang, split) counts, aggregated across splits.

    ``rollup`` names the pids whose combined share is reported separately
    (the geography-flavored subset, in the shipped configuration)."""
    rollup_set = set(rollup)
    per_lang: dict[str, Counter] = {}
    for (pid, lang, _split), n in counts.items():
        per_lang.setdefault(lang, Counter())[pid] += n
    by_language: dict[str, dict[str, tuple[int, float]]] = {}
    rollup_pct: dict[str, float] = {}
    for lang, rels in sorted(per_lang.items()):
        total = sum(rels.values())
        by_language[lang] = {
            pid: (n, 100.0 * n / total) for pid, n in sorted(rels.items())
        }
        rollup_pct[lang] = sum(
            pct for pid, (_, pct) in by_language[lang].items() if pid in rollup_set
        )
    return DistributionReport(by_language=by_language, rollup_pct=rollup_pct)


def write_reports(
    dataset: GoldDataset,
    names: Mapping[str, str],
    rollup: Collection[str],
    out_dir: str | Path,
) -> list[Path]:
    """Write counts.json and distribution.json next to the dataset files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    counts_path = out / "counts.json"
    counts_path.write_text(
        json.dumps(counts_table(dataset, names), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    report = distribution_report(dataset.counts, rollup=rollup)
    dist_path = out / "distribution.json"
    dist_path.write_text(
        json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )
    return [counts_path, dist_path]
