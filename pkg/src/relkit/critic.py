"""Critic training pairs, silver filtering, and the binary metric suite.

The critic is an external binary classifier over (premise, hypothesis) pairs;
this module owns pair construction from human-validated triplets, the
filtering pass over silver data, and the precision/recall/F1/accuracy
arithmetic used to report its quality.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .records import CRITIC_REJECTED, GOLD_FALSE, GOLD_TRUE, SILVER, Document, Triplet
from .scorers import PairScorer, ScoreItem, ScorerError


@dataclass(frozen=True)
class CriticPair:
    premise: str
    hypothesis: str
    label: bool
    lang: str

    def to_dict(self) -> dict:
        return {
            "premise": self.premise,
            "hypothesis": self.hypothesis,
            "label": self.label,
            "lang": self.lang,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CriticPair":
        return cls(d["premise"], d["hypothesis"], bool(d["label"]), d["lang"])


def verbalize(doc: Document, t: Triplet, names: Mapping[str, str]) -> str:
    """Subject, English relation name, object, single-spaced."""
    subj = doc.mentions[t.subj_idx].surface
    obj = doc.mentions[t.obj_idx].surface
    return f"{subj} {names.get(t.pid, t.pid)} {obj}"


def make_pairs(
    gold: Iterable[Triplet],
    docs: Mapping[str, Document],
    names: Mapping[str, str],
) -> tuple[list[CriticPair], list[dict]]:
    """One training pair per human-validated triplet; label mirrors the verdict.

    Triplets whose document is missing become error records instead of pairs.
    """
    pairs: list[CriticPair] = []
    errors: list[dict] = []
    for t in gold:
        if t.status not in (GOLD_TRUE, GOLD_FALSE):
            raise ValueError(f"{t.triplet_id}: no aggregated human label (status {t.status})")
        doc = docs.get(t.doc_id)
        if doc is None:
            errors.append({"triplet_id": t.triplet_id, "error": f"missing document {t.doc_id}"})
            continue
        pairs.append(
            CriticPair(
                premise=doc.text,
                hypothesis=verbalize(doc, t, names),
                label=t.status == GOLD_TRUE,
                lang=doc.lang,
            )
        )
    return pairs, errors


def critic_filter(
    t: Triplet,
    doc: Document,
    scorer: PairScorer,
    names: Mapping[str, str],
    threshold: float = 0.5,
) -> Triplet:
    """Score one silver triplet; below threshold it becomes critic_rejected."""
    if t.status != SILVER:
        raise ValueError(f"{t.triplet_id}: critic_filter expects silver, got {t.status}")
    item = ScoreItem(doc.text, verbalize(doc, t, names), key=(t.doc_id, t.triplet_id))
    score = scorer.score([item])[0]
    status = CRITIC_REJECTED if score < threshold else SILVER
    return t.advance(status, critic_score=score)


def filter_stream(
    pairs: Iterable[tuple[Triplet, Document]],
    scorer: PairScorer,
    names: Mapping[str, str],
    threshold: float = 0.5,
    batch_size: int = 32,
    errors: list[dict] | None = None,
) -> Iterator[Triplet]:
    """Batched critic pass over a triplet stream.

    Only silver triplets are scored; anything already rejected or validated
    passes through untouched. A scorer failure leaves the whole batch
    unchanged and appends one error record per affected triplet.
    """
    batch: list[tuple[Triplet, Document]] = []

    def flush() -> Iterator[Triplet]:
        if not batch:
            return
        items = [
            ScoreItem(d.text, verbalize(d, t, names), key=(t.doc_id, t.triplet_id))
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
                status = CRITIC_REJECTED if score < threshold else SILVER
                yield t.advance(status, critic_score=score)
        batch.clear()

    for t, doc in pairs:
        if t.status != SILVER:
            yield t
            continue
        batch.append((t, doc))
        if len(batch) >= batch_size:
            yield from flush()
    yield from flush()


@dataclass(frozen=True)
class CriticMetrics:
    """Binary classification quality, as unrounded percentages.

    Rounding to one decimal is a formatting concern (see ``rounded``), kept
    out of the stored values so the F1 identity stays exact.
    """

    recall: float
    precision: float
    f1: float
    accuracy: float

    def rounded(self) -> dict[str, float]:
        return {
            "recall": round(self.recall, 1),
            "precision": round(self.precision, 1),
            "f1": round(self.f1, 1),
            "accuracy": round(self.accuracy, 1),
        }


def critic_metrics(preds: Sequence[bool], golds: Sequence[bool]) -> CriticMetrics:
    """P/R/F1 on the positive class plus overall accuracy, in percent."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(golds)} golds")
    if not golds:
        raise ValueError("empty input")
    tp = fp = fn = tn = 0
    for p, g in zip(preds, golds):
        if p and g:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = 100.0 * (tp + tn) / len(golds)
    return CriticMetrics(recall=recall, precision=precision, f1=f1, accuracy=accuracy)
