"""Human validation: sampling, HIT batching, judgment aggregation, agreement.

Judgments live in an append-only line-delimited log; everything downstream
(majority vote, Krippendorff's alpha, filtered percentages) is a pure fold
over that log, so a crashed service can always be rebuilt from the file.
"""
from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Callable, Iterable, Mapping, Sequence

from .fileio import read_jsonl
from .records import GOLD_FALSE, GOLD_TRUE, SILVER, Document, Triplet, json_line

log = logging.getLogger(__name__)

PENDING = "pending"


@dataclass(frozen=True)
class Judgment:
    triplet_id: str
    annotator_id: str
    verdict: bool
    submitted_at: float

    def to_dict(self) -> dict:
        return {
            "triplet_id": self.triplet_id,
            "annotator_id": self.annotator_id,
            "verdict": self.verdict,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Judgment":
        return cls(d["triplet_id"], d["annotator_id"], bool(d["verdict"]), float(d["submitted_at"]))


@dataclass(frozen=True)
class HitItem:
    triplet_id: str
    text: str
    subj_start: int
    subj_end: int
    obj_start: int
    obj_end: int
    pid: str

    def to_dict(self) -> dict:
        return {
            "triplet_id": self.triplet_id,
            "text": self.text,
            "subject": {"start": self.subj_start, "end": self.subj_end},
            "object": {"start": self.obj_start, "end": self.obj_end},
            "relation": self.pid,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HitItem":
        return cls(
            triplet_id=d["triplet_id"],
            text=d["text"],
            subj_start=d["subject"]["start"],
            subj_end=d["subject"]["end"],
            obj_start=d["object"]["start"],
            obj_end=d["object"]["end"],
            pid=d["relation"],
        )


@dataclass(frozen=True)
class Hit:
    hit_id: str
    lang: str
    items: tuple[HitItem, ...]

    def to_dict(self) -> dict:
        return {
            "hit_id": self.hit_id,
            "lang": self.lang,
            "items": [it.to_dict() for it in self.items],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hit":
        return cls(
            hit_id=d["hit_id"],
            lang=d["lang"],
            items=tuple(HitItem.from_dict(it) for it in d["items"]),
        )


@dataclass(frozen=True)
class AgreementReport:
    lang: str
    alpha: float | None
    n_annotators: int
    filtered_pct: float | None
    alpha_degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "lang": self.lang,
            "alpha": self.alpha,
            "n_annotators": self.n_annotators,
            "filtered_pct": self.filtered_pct,
            "alpha_degenerate": self.alpha_degenerate,
        }


class JudgmentLog:
    """Append-only JSONL store for judgments."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, j: Judgment) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json_line(j.to_dict()) + "\n")

    def read(self) -> list[Judgment]:
        if not self.path.exists():
            return []
        return [Judgment.from_dict(d) for d in read_jsonl(self.path)]


# --- sampling ---------------------------------------------------------------

@dataclass(frozen=True)
class SamplingConfig:
    langs: tuple[str, ...]
    random_sample_size: int = 0
    seed: int = 0


def sample_for_annotation(
    silver: Sequence[Triplet],
    docs: Mapping[str, Document],
    config: SamplingConfig,
    page_key: Callable[[Document], str] | None = None,
) -> list[Triplet]:
    """Pick silver triplets for human validation.

    Two pools are unioned: every triplet from pages present in all target
    languages, and an inverse-relation-frequency weighted draw (without
    replacement) from whatever remains. Weighting by 1/count(pid) pushes the
    sample toward rare relations. Deterministic for a given seed.
    """
    key_of = page_key or (lambda d: d.page_id)
    langs = set(config.langs)
    pool = [t for t in silver if t.status == SILVER and docs[t.doc_id].lang in langs]
    if not pool:
        return []

    langs_of_page: dict[str, set[str]] = defaultdict(set)
    for t in pool:
        doc = docs[t.doc_id]
        langs_of_page[key_of(doc)].add(doc.lang)
    common_pages = {k for k, ls in langs_of_page.items() if ls >= langs}

    order = lambda t: (t.doc_id, t.triplet_id)
    picked = sorted(
        (t for t in pool if key_of(docs[t.doc_id]) in common_pages), key=order
    )
    rest = sorted(
        (t for t in pool if key_of(docs[t.doc_id]) not in common_pages), key=order
    )
    n_draw = min(config.random_sample_size, len(rest))
    if n_draw:
        counts = Counter(t.pid for t in rest)
        weights = [1.0 / counts[t.pid] for t in rest]
        rng = Random(config.seed)
        candidates = list(rest)
        for _ in range(n_draw):
            total = sum(weights)
            shot = rng.random() * total
            acc = 0.0
            idx = len(candidates) - 1
            for i, w in enumerate(weights):
                acc += w
                if shot < acc:
                    idx = i
                    break
            picked.append(candidates.pop(idx))
            weights.pop(idx)
    return picked


def assign_hits(
    sampled: Sequence[Triplet],
    docs: Mapping[str, Document],
    per_hit: int = 10,
    allow_partial: bool = False,
) -> list[Hit]:
    """Partition sampled triplets into same-language HITs of per_hit items.

    A short final batch is only emitted when allow_partial is set; otherwise
    those triplets stay unassigned (callers can re-run with the flag once
    sampling is final).
    """
    if per_hit < 1:
        raise ValueError("per_hit must be at least 1")
    by_lang: dict[str, list[Triplet]] = defaultdict(list)
    for t in sorted(sampled, key=lambda t: (t.doc_id, t.triplet_id)):
        by_lang[docs[t.doc_id].lang].append(t)

    hits: list[Hit] = []
    for lang in sorted(by_lang):
        triplets = by_lang[lang]
        serial = 0
        for i in range(0, len(triplets), per_hit):
            chunk = triplets[i : i + per_hit]
            if len(chunk) < per_hit and not allow_partial:
                break
            items = []
            for t in chunk:
                doc = docs[t.doc_id]
                subj = doc.mentions[t.subj_idx]
                obj = doc.mentions[t.obj_idx]
                items.append(
                    HitItem(
                        triplet_id=t.triplet_id,
                        text=doc.text,
                        subj_start=subj.start,
                        subj_end=subj.end,
                        obj_start=obj.start,
                        obj_end=obj.end,
                        pid=t.pid,
                    )
                )
            hits.append(Hit(f"{lang}-{serial:04d}", lang, tuple(items)))
            serial += 1
    return hits


# --- aggregation ------------------------------------------------------------

def aggregate(
    judgments: Iterable[Judgment],
    required: int = 3,
    quorum: int = 2,
) -> dict[str, str]:
    """Majority vote per triplet: status in {gold_true, gold_false, pending}.

    Only the first `required` distinct annotators count, in submission order,
    so stray duplicates from expired leases cannot flip a verdict. Fewer than
    `required` distinct annotators leaves the triplet pending.
    """
    by_triplet: dict[str, list[Judgment]] = defaultdict(list)
    for j in judgments:
        by_triplet[j.triplet_id].append(j)

    out: dict[str, str] = {}
    for tid, js in by_triplet.items():
        js.sort(key=lambda j: (j.submitted_at, j.annotator_id))
        votes: dict[str, bool] = {}
        for j in js:
            if j.annotator_id not in votes:
                votes[j.annotator_id] = j.verdict
            if len(votes) == required:
                break
        if len(votes) < required:
            out[tid] = PENDING
        elif sum(votes.values()) >= quorum:
            out[tid] = GOLD_TRUE
        else:
            out[tid] = GOLD_FALSE
    return out


def apply_aggregation(
    triplets: Iterable[Triplet], verdicts: Mapping[str, str]
) -> list[Triplet]:
    """Move silver triplets to their aggregated gold status; pending stays put."""
    out = []
    for t in triplets:
        status = verdicts.get(t.triplet_id)
        if t.status == SILVER and status in (GOLD_TRUE, GOLD_FALSE):
            t = t.advance(status)
        out.append(t)
    return out


def filtered_stats(lang_status: Iterable[tuple[str, str]]) -> dict[str, float]:
    """Share of human-rejected triplets per language, in percent.

    Languages with no aggregated triplets are simply absent from the result.
    """
    true_count: Counter[str] = Counter()
    false_count: Counter[str] = Counter()
    for lang, status in lang_status:
        if status == GOLD_TRUE:
            true_count[lang] += 1
        elif status == GOLD_FALSE:
            false_count[lang] += 1
    out = {}
    for lang in set(true_count) | set(false_count):
        total = true_count[lang] + false_count[lang]
        out[lang] = 100.0 * false_count[lang] / total
    return out


# --- agreement --------------------------------------------------------------

@dataclass(frozen=True)
class AlphaResult:
    value: float
    degenerate: bool
    n_values: int


def _pairable_units(matrix) -> list[list]:
    """Normalize a judgment matrix into per-item value lists with ≥2 entries.

    Accepts either {item: {annotator: value}} or a list of rows (one row per
    item, one slot per annotator, None marking a missing judgment).
    """
    if isinstance(matrix, Mapping):
        rows = [list(row.values()) for row in matrix.values()]
    else:
        rows = [[v for v in row] for row in matrix]
    units = [[v for v in row if v is not None] for row in rows]
    return [u for u in units if len(u) >= 2]


def alpha_details(matrix) -> AlphaResult:
    """Krippendorff's alpha for nominal data over the coincidence matrix.

    Each pairable unit with m values contributes 1/(m-1) per ordered value
    pair to the coincidence counts; alpha = 1 - D_o/D_e with the usual
    finite-sample expected-disagreement denominator n(n-1). A matrix with no
    disagreement possible (every value identical) has D_e = 0 and comes back
    as 1.0 with the degenerate flag set.
    """
    units = _pairable_units(matrix)
    if not units:
        raise ValueError("no unit has two or more judgments; alpha undefined")

    coincidence: Counter[tuple] = Counter()
    for u in units:
        w = 1.0 / (len(u) - 1)
        for i, vi in enumerate(u):
            for j, vj in enumerate(u):
                if i != j:
                    coincidence[(vi, vj)] += w

    marginals: Counter = Counter()
    for (vi, _vj), c in coincidence.items():
        marginals[vi] += c
    n = sum(marginals.values())

    d_o = sum(c for (vi, vj), c in coincidence.items() if vi != vj) / n
    s_e = sum(
        marginals[a] * marginals[b]
        for a in marginals
        for b in marginals
        if a != b
    )
    d_e = s_e / (n * (n - 1))
    if d_e == 0:
        return AlphaResult(1.0, degenerate=True, n_values=round(n))
    return AlphaResult(1.0 - d_o / d_e, degenerate=False, n_values=round(n))


def krippendorff_alpha(matrix) -> float:
    result = alpha_details(matrix)
    if result.degenerate:
        log.warning("alpha degenerate: all %d judgments identical", result.n_values)
    return result.value


def build_report(
    lang: str,
    judgments: Sequence[Judgment],
    verdicts: Mapping[str, str],
) -> AgreementReport:
    """Agreement and filtering statistics for one language's judgments."""
    matrix: dict[str, dict[str, bool]] = defaultdict(dict)
    annotators = set()
    for j in sorted(judgments, key=lambda j: (j.submitted_at, j.annotator_id)):
        annotators.add(j.annotator_id)
        matrix[j.triplet_id].setdefault(j.annotator_id, j.verdict)

    try:
        alpha = alpha_details(matrix)
        value, degenerate = alpha.value, alpha.degenerate
    except ValueError:
        value, degenerate = None, False

    stats = filtered_stats((lang, verdicts.get(tid, PENDING)) for tid in matrix)
    return AgreementReport(
        lang=lang,
        alpha=value,
        n_annotators=len(annotators),
        filtered_pct=stats.get(lang),
        alpha_degenerate=degenerate,
    )
