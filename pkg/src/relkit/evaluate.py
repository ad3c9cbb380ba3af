"""Scoring for extraction and classification output.

Matching is per document, one gold consumed per prediction at most, after
collapsing duplicates on each side. Under strict matching an extraction must
reproduce both entity spans, both entity types, and the relation; boundaries
matching drops the type requirement. Data without character spans (some
benchmark exports) can be scored on whitespace-normalized surface forms
instead via surface_only.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

NO_RELATION = "no_relation"

BUCKETS = (
    "entity_type",
    "span_underlap",
    "span_overlap",
    "subject",
    "object",
    "relation",
    "other",
)

MODES = ("strict", "boundaries")


@dataclass(frozen=True)
class EvalTriplet:
    subj_surface: str
    obj_surface: str
    relation: str
    subj_span: tuple[int, int] | None = None
    obj_span: tuple[int, int] | None = None
    subj_type: str | None = None
    obj_type: str | None = None

    def to_dict(self) -> dict:
        def side(surface, span, label):
            d: dict = {"surface": surface}
            if span is not None:
                d["start"], d["end"] = span
            if label is not None:
                d["type"] = label
            return d

        return {
            "subject": side(self.subj_surface, self.subj_span, self.subj_type),
            "object": side(self.obj_surface, self.obj_span, self.obj_type),
            "relation": self.relation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalTriplet":
        def span(side):
            if "start" in side and "end" in side:
                return (side["start"], side["end"])
            return None

        subj, obj = d["subject"], d["object"]
        return cls(
            subj_surface=subj["surface"],
            obj_surface=obj["surface"],
            relation=d["relation"],
            subj_span=span(subj),
            obj_span=span(obj),
            subj_type=subj.get("type"),
            obj_type=obj.get("type"),
        )


@dataclass(frozen=True)
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def percentages(self) -> dict:
        return {
            "precision": round(100.0 * self.precision, 1),
            "recall": round(100.0 * self.recall, 1),
            "f1": round(100.0 * self.f1, 1),
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


@dataclass(frozen=True)
class ScoreReport:
    mode: str
    overall: PRF
    macro_f1: float
    by_language: dict[str, PRF]
    by_relation: dict[str, PRF]

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "overall": self.overall.percentages()}
        out["overall"]["macro_f1"] = round(100.0 * self.macro_f1, 1)
        out["by_language"] = {
            lang: prf.percentages() for lang, prf in sorted(self.by_language.items())
        }
        out["by_relation"] = {
            rel: prf.percentages() for rel, prf in sorted(self.by_relation.items())
        }
        return out


def _norm(surface: str) -> str:
    return " ".join(surface.split())


def _entity_keys(t: EvalTriplet, surface_only: bool, doc: str):
    if surface_only:
        return _norm(t.subj_surface), _norm(t.obj_surface)
    if t.subj_span is None or t.obj_span is None:
        raise ValueError(
            f"doc {doc}: triplet lacks spans; use surface_only to score by surface"
        )
    return t.subj_span, t.obj_span


def _key(t: EvalTriplet, mode: str, surface_only: bool, doc: str):
    subj, obj = _entity_keys(t, surface_only, doc)
    if mode == "strict":
        return (subj, t.subj_type, obj, t.obj_type, t.relation)
    return (subj, obj, t.relation)


def _match_doc(pred_keys, gold_keys):
    """Greedy one-to-one consumption in gold order; keys are pre-deduped."""
    remaining = list(pred_keys)
    matched = []
    unmatched_golds = []
    for g in gold_keys:
        if g in remaining:
            remaining.remove(g)
            matched.append(g)
        else:
            unmatched_golds.append(g)
    return matched, remaining, unmatched_golds


def score_re(
    preds: Mapping[str, Sequence[EvalTriplet]],
    golds: Mapping[str, Sequence[EvalTriplet]],
    mode: str = "strict",
    surface_only: bool = False,
    langs: Mapping[str, str] | None = None,
) -> ScoreReport:
    """Micro and macro precision/recall/F1 over per-document matching."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")

    overall = PRF()
    by_language: dict[str, PRF] = defaultdict(PRF)
    by_relation: dict[str, PRF] = defaultdict(PRF)

    for doc in sorted(set(preds) | set(golds)):
        p = list(dict.fromkeys(_key(t, mode, surface_only, doc) for t in preds.get(doc, [])))
        g = list(dict.fromkeys(_key(t, mode, surface_only, doc) for t in golds.get(doc, [])))
        matched, false_pos, false_neg = _match_doc(p, g)

        doc_prf = PRF(len(matched), len(false_pos), len(false_neg))
        overall += doc_prf
        if langs is not None:
            by_language[langs.get(doc, "und")] += doc_prf
        for key in matched:
            by_relation[key[-1]] += PRF(tp=1)
        for key in false_pos:
            by_relation[key[-1]] += PRF(fp=1)
        for key in false_neg:
            by_relation[key[-1]] += PRF(fn=1)

    macro = (
        sum(prf.f1 for prf in by_relation.values()) / len(by_relation)
        if by_relation
        else 0.0
    )
    return ScoreReport(
        mode=mode,
        overall=overall,
        macro_f1=macro,
        by_language=dict(by_language),
        by_relation=dict(by_relation),
    )


@dataclass(frozen=True)
class RcScore:
    micro_f1: float
    accuracy: float
    tp: int
    fp: int
    fn: int

    def to_dict(self) -> dict:
        return {
            "micro_f1": round(self.micro_f1, 1),
            "accuracy": round(self.accuracy, 1),
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def score_rc(
    preds: Sequence[str],
    golds: Sequence[str],
    no_relation: str = NO_RELATION,
) -> RcScore:
    """Classification score: micro-F1 ignoring the null class, plus accuracy.

    A prediction of the null class is never a false positive; a null gold
    never a false negative. Values are percents.
    """
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions against {len(golds)} golds")
    if not golds:
        raise ValueError("nothing to score")

    tp = fp = fn = correct = 0
    for p, g in zip(preds, golds):
        if p == g:
            correct += 1
            if g != no_relation:
                tp += 1
        else:
            if p != no_relation:
                fp += 1
            if g != no_relation:
                fn += 1

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return RcScore(
        micro_f1=100.0 * f1,
        accuracy=100.0 * correct / len(golds),
        tp=tp,
        fp=fp,
        fn=fn,
    )


def _strictly_inside(inner: tuple[int, int], outer: tuple[int, int]) -> bool:
    return (
        inner[0] >= outer[0]
        and inner[1] <= outer[1]
        and (inner[0] > outer[0] or inner[1] < outer[1])
    )


def bucket_errors(
    preds: Mapping[str, Sequence[EvalTriplet]],
    golds: Mapping[str, Sequence[EvalTriplet]],
) -> dict[str, int]:
    """Classify strict-mode false positives into diagnosis buckets.

    Each unmatched prediction lands in the first bucket, in BUCKETS order,
    for which some gold triplet of the same document is a witness:
    boundaries-matchable (only types wrong), predicted span strictly inside a
    gold span, the reverse, a fully different subject or object, the same
    entity pair under another relation, and finally a catch-all.
    """
    counts = {b: 0 for b in BUCKETS}

    for doc in sorted(set(preds) | set(golds)):
        doc_preds = list(
            {_key(t, "strict", False, doc): t for t in preds.get(doc, [])}.values()
        )
        doc_golds = golds.get(doc, [])
        gold_keys = list(
            dict.fromkeys(_key(t, "strict", False, doc) for t in doc_golds)
        )
        _matched, false_pos, _ = _match_doc(
            [_key(t, "strict", False, doc) for t in doc_preds], gold_keys
        )
        leftover = set(false_pos)
        for t in doc_preds:
            key = _key(t, "strict", False, doc)
            if key not in leftover:
                continue
            leftover.discard(key)
            counts[_bucket_one(t, doc_golds)] += 1
    return counts


def _bucket_one(p: EvalTriplet, golds: Sequence[EvalTriplet]) -> str:
    ps, po = p.subj_span, p.obj_span
    for g in golds:
        gs, go = g.subj_span, g.obj_span
        if (ps, po, p.relation) == (gs, go, g.relation):
            return "entity_type"
    for g in golds:
        if g.relation != p.relation:
            continue
        gs, go = g.subj_span, g.obj_span
        if po == go and _strictly_inside(ps, gs):
            return "span_underlap"
        if ps == gs and _strictly_inside(po, go):
            return "span_underlap"
    for g in golds:
        if g.relation != p.relation:
            continue
        gs, go = g.subj_span, g.obj_span
        if po == go and _strictly_inside(gs, ps):
            return "span_overlap"
        if ps == gs and _strictly_inside(go, po):
            return "span_overlap"
    for g in golds:
        if g.relation == p.relation and g.obj_span == po and g.subj_span != ps:
            return "subject"
    for g in golds:
        if g.relation == p.relation and g.subj_span == ps and g.obj_span != po:
            return "object"
    for g in golds:
        if g.subj_span == ps and g.obj_span == po and g.relation != p.relation:
            return "relation"
    return "other"
