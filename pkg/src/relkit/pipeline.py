"""End-to-end run: raw corpus in, datasets and a stage manifest out.

Stages run in a fixed order (ingest, align, collapse, frequency cut,
entailment gate, critic gate, typing, optional annotation export, splits,
aggregation, build). Each stage appends one record to the manifest as soon as
it finishes, so a crashed run leaves a readable account of how far it got.
Stages whose inputs are not configured record themselves as skipped instead
of failing the run.
"""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable

from .annotation import (
    PENDING,
    JudgmentLog,
    SamplingConfig,
    aggregate,
    apply_aggregation,
    assign_hits,
    filtered_stats,
    sample_for_annotation,
)
from .config import PipelineConfig
from .corpus import IngestStats, TitleMap, ingest
from .critic import filter_stream as critic_filter_stream
from .dataset import (
    SPLITS,
    PageKeyTable,
    assign_splits,
    build_gold,
    write_dataset,
    write_reports,
)
from .entity_types import EntityTypeMap
from .extract import (
    RelationVocab,
    TripleStore,
    align,
    collapse_inverse,
    nli_filter_stream,
    select_top_k,
)
from .fileio import read_jsonl, write_jsonl, write_tsv
from .records import (
    CRITIC_REJECTED,
    ENTITY,
    GOLD_FALSE,
    GOLD_TRUE,
    NLI_REJECTED,
    SILVER,
    json_line,
)
from .scorers import make_scorer


class PipelineError(RuntimeError):
    """A stage failed; the manifest records which one and why."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


class _Manifest:
    def __init__(self, path: Path):
        self.path = path
        self.records: list[dict] = []
        path.write_text("", encoding="utf-8")

    def write(self, record: dict) -> None:
        self.records.append(record)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json_line(record) + "\n")


def run_pipeline(config: PipelineConfig, workers: int = 1) -> list[dict]:
    """Execute every configured stage; returns the manifest records.

    ``workers`` parallelizes the per-document alignment map; results come
    back in document order, so the outputs do not depend on it. Raises
    PipelineError on the first stage failure, after recording it."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = _Manifest(out / "manifest.jsonl")
    manifest.write({"stage": "config", "status": "ok", "config": config.to_dict()})

    state: dict = {}

    def stage(name: str, fn: Callable[[], dict | None]) -> None:
        try:
            counts = fn()
        except Exception as exc:
            manifest.write({"stage": name, "status": "failed", "error": str(exc)})
            raise PipelineError(name, exc) from exc
        if counts is None:
            manifest.write({"stage": name, "status": "skipped"})
        else:
            manifest.write({"stage": name, "status": "ok", "counts": counts})

    def _write_triplets() -> None:
        write_jsonl(out / "triplets.jsonl", (t.to_dict() for t in state["triplets"]))

    def load_inputs() -> dict:
        state["maps"] = {
            lang: TitleMap.load_tsv(p, lang)
            for lang, p in sorted(config.title_maps.items())
        }
        state["store"] = TripleStore.load_tsv(config.triple_store)
        state["vocab"] = RelationVocab.load(config.vocab)
        state["keys"] = (
            PageKeyTable.load_tsv(config.interlanguage)
            if config.interlanguage
            else PageKeyTable({})
        )
        state["type_map"] = (
            EntityTypeMap.load_tsv(config.entity_types)
            if config.entity_types
            else EntityTypeMap({})
        )
        return {
            "facts": len(state["store"].facts),
            "relations": len(state["vocab"].entries),
            "titles": {lang: len(m.entries) for lang, m in state["maps"].items()},
        }

    def do_ingest() -> dict:
        stats = IngestStats()
        docs = list(ingest(read_jsonl(config.corpus), state["maps"], stats=stats))
        state["docs"] = docs
        state["docs_by_id"] = {d.doc_id: d for d in docs}
        write_jsonl(out / "documents.jsonl", (d.to_dict() for d in docs))
        return stats.to_dict()

    def do_align() -> dict:
        store = state["store"]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_doc = list(pool.map(lambda d: align(d, store), state["docs"]))
        else:
            per_doc = [align(d, store) for d in state["docs"]]
        cands = [t for batch in per_doc for t in batch]
        state["candidates"] = cands
        return {
            "candidates": len(cands),
            "docs_with_candidates": len({t.doc_id for t in cands}),
        }

    def do_collapse() -> dict:
        collapsed = [collapse_inverse(t, state["vocab"]) for t in state["candidates"]]
        changed = sum(
            1 for a, b in zip(state["candidates"], collapsed) if a.pid != b.pid
        )
        state["candidates"] = collapsed
        return {"candidates": len(collapsed), "inverse_collapsed": changed}

    def do_top_k() -> dict:
        langs = (
            {d.doc_id: d.lang for d in state["docs"]}
            if config.per_language_top_k
            else None
        )
        result = select_top_k(state["candidates"], config.top_k, langs=langs)
        state["candidates"] = result.kept
        state["triplets"] = result.kept
        restricted = state["vocab"].restrict(result.pids)
        restricted.save(out / "vocab.restricted.json")
        write_jsonl(out / "candidates.jsonl", (t.to_dict() for t in result.kept))
        return {"kept": len(result.kept), "relations_kept": len(result.pids)}

    def do_nli() -> dict | None:
        if config.nli_scorer is None:
            return None
        scorer = make_scorer(config.nli_scorer)
        errors: list[dict] = []
        docs = state["docs_by_id"]
        pairs = ((t, docs[t.doc_id]) for t in state["triplets"])
        outs = list(
            nli_filter_stream(
                pairs,
                scorer,
                state["vocab"].names(),
                threshold=config.nli_threshold,
                errors=errors,
            )
        )
        state["triplets"] = outs
        write_jsonl(out / "nli_errors.jsonl", errors)
        _write_triplets()
        c = Counter(t.status for t in outs)
        return {
            "in": len(outs),
            "silver": c[SILVER],
            "rejected": c[NLI_REJECTED],
            "errors": len(errors),
        }

    def do_critic() -> dict | None:
        if config.critic_scorer is None:
            return None
        scorer = make_scorer(config.critic_scorer)
        errors: list[dict] = []
        docs = state["docs_by_id"]
        pairs = ((t, docs[t.doc_id]) for t in state["triplets"])
        outs = list(
            critic_filter_stream(
                pairs,
                scorer,
                state["vocab"].names(),
                threshold=config.critic_threshold,
                errors=errors,
            )
        )
        state["triplets"] = outs
        write_jsonl(out / "critic_errors.jsonl", errors)
        _write_triplets()
        c = Counter(t.status for t in outs)
        return {
            "in": len(outs),
            "silver": c[SILVER],
            "rejected": c[CRITIC_REJECTED],
            "errors": len(errors),
        }

    def do_typing() -> dict:
        entries = state["type_map"].entries
        ids = {
            m.entity_id
            for d in state["docs"]
            for m in d.mentions
            if m.kind == ENTITY
        }
        typed = sum(1 for e in ids if e in entries)
        return {"entities": len(ids), "typed": typed, "unknown": len(ids) - typed}

    def do_annotate_export() -> dict | None:
        if not config.export_annotation:
            return None
        plan = config.annotation
        silver = [t for t in state["triplets"] if t.status == SILVER]
        scope = select_top_k(silver, config.gold_top_k).kept if silver else []
        langs = plan.langs or tuple(sorted({d.lang for d in state["docs"]}))
        sample = sample_for_annotation(
            scope,
            state["docs_by_id"],
            SamplingConfig(
                langs=langs,
                random_sample_size=plan.random_sample_size,
                seed=plan.sample_seed,
            ),
            page_key=lambda d: state["keys"].key_of(d.lang, d.page_id),
        )
        hits = assign_hits(
            sample,
            state["docs_by_id"],
            per_hit=plan.per_hit,
            allow_partial=plan.allow_partial,
        )
        ann = out / "annotation"
        ann.mkdir(exist_ok=True)
        write_jsonl(ann / "sampled.jsonl", (t.to_dict() for t in sample))
        write_jsonl(ann / "hits.jsonl", (h.to_dict() for h in hits))
        return {"silver_in_scope": len(scope), "sampled": len(sample), "hits": len(hits)}

    def do_split() -> dict:
        keys = state["keys"]
        page_keys = sorted({keys.key_of(d.lang, d.page_id) for d in state["docs"]})
        assignment = assign_splits(
            page_keys, ratios=config.split_ratios, seed=config.split_seed
        )
        state["assignment"] = assignment
        write_tsv(out / "splits.tsv", sorted(assignment.by_page.items()))
        c = Counter(assignment.by_page.values())
        return {
            "pages": len(assignment.by_page),
            **{name: c.get(name, 0) for name in SPLITS},
        }

    def do_aggregate() -> dict | None:
        if config.judgments is None:
            return None
        plan = config.annotation
        judgments = JudgmentLog(config.judgments).read()
        verdicts = aggregate(judgments, required=plan.required, quorum=plan.quorum)
        state["triplets"] = apply_aggregation(state["triplets"], verdicts)
        _write_triplets()
        docs = state["docs_by_id"]
        by_id = {t.triplet_id: t for t in state["triplets"]}
        stats = filtered_stats(
            (docs[by_id[tid].doc_id].lang, v)
            for tid, v in verdicts.items()
            if tid in by_id
        )
        c = Counter(verdicts.values())
        return {
            "judgments": len(judgments),
            "judged_triplets": len(verdicts),
            "gold_true": c[GOLD_TRUE],
            "gold_false": c[GOLD_FALSE],
            "pending": c[PENDING],
            "filtered_pct": {lang: stats[lang] for lang in sorted(stats)},
        }

    def do_build() -> dict | None:
        if config.judgments is None:
            return None
        basis = [
            t
            for t in state["triplets"]
            if t.status in (SILVER, GOLD_TRUE, GOLD_FALSE)
        ]
        gold_vocab = state["vocab"].restrict(
            select_top_k(basis, config.gold_top_k).pids if basis else ()
        )
        dataset = build_gold(
            state["triplets"],
            state["docs_by_id"],
            gold_vocab,
            state["type_map"],
            state["keys"],
            state["assignment"],
        )
        paths = write_dataset(dataset, out / "dataset")
        write_reports(
            dataset, gold_vocab.names(), config.location_rollup, out / "dataset"
        )
        return {
            "files": len(paths),
            "documents": sum(len(v) for v in dataset.records.values()),
            "triplets": sum(dataset.counts.values()),
            "relations": len({pid for pid, _, _ in dataset.counts}),
        }

    stage("load_inputs", load_inputs)
    stage("ingest", do_ingest)
    stage("align", do_align)
    stage("collapse", do_collapse)
    stage("top_k", do_top_k)
    stage("nli_filter", do_nli)
    stage("critic_filter", do_critic)
    stage("typing", do_typing)
    stage("annotate_export", do_annotate_export)
    stage("split", do_split)
    stage("aggregate", do_aggregate)
    stage("build", do_build)
    return manifest.records
