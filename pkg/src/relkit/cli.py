"""Command line front end.

One subcommand per pipeline stage for piecemeal runs, plus `run` for the
whole chain driven by a config file. Every command reads and writes the same
JSONL/TSV artifacts the orchestrator uses, so the two styles mix freely.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import replace
from pathlib import Path

import click

from .annotation import (
    GOLD_FALSE,
    GOLD_TRUE,
    PENDING,
    Hit,
    JudgmentLog,
    SamplingConfig,
    aggregate,
    apply_aggregation,
    assign_hits,
    filtered_stats,
    sample_for_annotation,
)
from .annotation_service import AnnotationService, make_app
from .config import PipelineConfig
from .corpus import IngestStats, TitleMap
from .corpus import ingest as ingest_corpus
from .critic import filter_stream as critic_stream
from .dataset import (
    PageKeyTable,
    SplitAssignment,
    assign_splits,
    build_gold,
    mention_type,
    write_dataset,
    write_reports,
)
from .entity_types import EntityTypeMap
from .evaluate import EvalTriplet, score_re
from .extract import (
    RelationVocab,
    TripleStore,
    align,
    collapse_inverse,
    nli_filter_stream,
    select_top_k,
)
from .fileio import read_jsonl, read_tsv, write_jsonl, write_tsv
from .linearize import EncodeError, decode, encode_rc, encode_re, training_samples
from .pipeline import PipelineError, run_pipeline
from .records import SILVER, Document, Triplet
from .scorers import make_scorer

_path_in = click.Path(exists=True, dir_okay=False)
_path_out = click.Path(dir_okay=False, writable=True)


def _docs(path: str) -> dict[str, Document]:
    return {d.doc_id: d for d in (Document.from_dict(r) for r in read_jsonl(path))}


def _triplets(path: str) -> list[Triplet]:
    return [Triplet.from_dict(r) for r in read_jsonl(path)]


def _keys(path: str | None) -> PageKeyTable:
    return PageKeyTable.load_tsv(path) if path else PageKeyTable({})


def _emit(obj: dict) -> None:
    click.echo(json.dumps(obj, ensure_ascii=False, sort_keys=True))


@click.group()
def main() -> None:
    """Build and evaluate multilingual relation extraction datasets."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=_path_in)
@click.option("--workers", default=1, show_default=True)
def run_cmd(config_path: str, workers: int) -> None:
    """Run every configured stage; the manifest lands in the output dir."""
    config = PipelineConfig.load(config_path)
    try:
        manifest = run_pipeline(config, workers=workers)
    except PipelineError as err:
        raise click.ClickException(str(err))
    for rec in manifest[1:]:
        line = f"{rec['stage']}: {rec['status']}"
        if "counts" in rec:
            line += " " + json.dumps(rec["counts"], sort_keys=True)
        click.echo(line)


@main.command("ingest")
@click.option("--corpus", required=True, type=_path_in)
@click.option("--title-map", "title_maps", multiple=True, required=True,
              metavar="LANG=TSV")
@click.option("--out", required=True, type=_path_out)
@click.option("--diagnostics", type=_path_out)
def ingest_cmd(corpus, title_maps, out, diagnostics) -> None:
    """Parse raw abstracts into documents with linked mentions."""
    maps = {}
    for spec in title_maps:
        lang, sep, path = spec.partition("=")
        if not sep:
            raise click.BadParameter(f"expected LANG=TSV, got {spec!r}")
        maps[lang] = TitleMap.load_tsv(path, lang)
    stats = IngestStats()
    diag: list | None = [] if diagnostics else None
    docs = list(ingest_corpus(read_jsonl(corpus), maps, stats=stats, diagnostics=diag))
    write_jsonl(out, (d.to_dict() for d in docs))
    if diagnostics:
        write_jsonl(diagnostics, diag)
    _emit(stats.to_dict())


@main.command("extract")
@click.option("--documents", required=True, type=_path_in)
@click.option("--facts", required=True, type=_path_in)
@click.option("--vocab", "vocab_path", required=True, type=_path_in)
@click.option("--out", required=True, type=_path_out)
@click.option("--top-k", default=0, show_default=True,
              help="keep only the k most frequent relations (0 keeps all)")
@click.option("--per-language", is_flag=True,
              help="count relation frequency per language instead of globally")
@click.option("--vocab-out", type=_path_out,
              help="where to save the restricted vocabulary")
def extract_cmd(documents, facts, vocab_path, out, top_k, per_language, vocab_out):
    """Align facts against documents into candidate triplets."""
    docs = _docs(documents)
    store = TripleStore.load_tsv(facts)
    vocab = RelationVocab.load(vocab_path)
    cands = [t for doc in docs.values() for t in align(doc, store)]
    cands = [collapse_inverse(t, vocab) for t in cands]
    counts = {"candidates": len(cands)}
    if top_k:
        langs = {d.doc_id: d.lang for d in docs.values()} if per_language else None
        result = select_top_k(cands, top_k, langs=langs)
        cands = result.kept
        counts["kept"] = len(cands)
        counts["relations"] = len(result.pids)
        if vocab_out:
            vocab.restrict(result.pids).save(vocab_out)
    write_jsonl(out, (t.to_dict() for t in cands))
    _emit(counts)


def _filter_command(name: str, stream, default_threshold: float):
    @main.command(name)
    @click.option("--documents", required=True, type=_path_in)
    @click.option("--triplets", "triplets_path", required=True, type=_path_in)
    @click.option("--vocab", "vocab_path", required=True, type=_path_in)
    @click.option("--scorer", required=True, metavar="SPEC",
                  help="http(s) endpoint or mock:<rules.jsonl>")
    @click.option("--threshold", default=default_threshold, show_default=True)
    @click.option("--batch-size", default=32, show_default=True)
    @click.option("--out", required=True, type=_path_out)
    @click.option("--errors-out", type=_path_out)
    def cmd(documents, triplets_path, vocab_path, scorer, threshold, batch_size,
            out, errors_out):
        docs = _docs(documents)
        names = RelationVocab.load(vocab_path).names()
        errors: list[dict] = []
        pairs = ((t, docs[t.doc_id]) for t in _triplets(triplets_path))
        outs = list(
            stream(pairs, make_scorer(scorer, batch_size=batch_size), names,
                   threshold=threshold, batch_size=batch_size, errors=errors)
        )
        write_jsonl(out, (t.to_dict() for t in outs))
        if errors_out:
            write_jsonl(errors_out, errors)
        statuses = Counter(t.status for t in outs)
        _emit({"in": len(outs), "errors": len(errors), **statuses})

    return cmd


_filter_command(
    "filter-nli", nli_filter_stream, 0.1
).help = "Drop candidates whose entailment score falls below the threshold."
_filter_command(
    "filter-critic", critic_stream, 0.5
).help = "Drop silver triplets the critic scores below the threshold."


@main.command("type-entities")
@click.option("--documents", required=True, type=_path_in)
@click.option("--triplets", "triplets_path", required=True, type=_path_in)
@click.option("--types", "types_path", required=True, type=_path_in)
@click.option("--out", required=True, type=_path_out)
def type_entities_cmd(documents, triplets_path, types_path, out) -> None:
    """Attach subject and object entity types to triplets."""
    docs = _docs(documents)
    type_map = EntityTypeMap.load_tsv(types_path)
    rows = []
    unknown = 0
    for t in _triplets(triplets_path):
        doc = docs[t.doc_id]
        subj = mention_type(doc.mentions[t.subj_idx], type_map)
        obj = mention_type(doc.mentions[t.obj_idx], type_map)
        unknown += (subj == "unknown") + (obj == "unknown")
        rows.append(replace(t, subj_type=subj, obj_type=obj))
    write_jsonl(out, (t.to_dict() for t in rows))
    _emit({"triplets": len(rows), "unknown_types": unknown})


@main.command("annotate-export")
@click.option("--documents", required=True, type=_path_in)
@click.option("--triplets", "triplets_path", required=True, type=_path_in)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--lang", "langs", multiple=True,
              help="target languages (default: all in the documents)")
@click.option("--sample-size", default=0, show_default=True,
              help="extra rare-relation-weighted draws beyond common pages")
@click.option("--seed", default=0, show_default=True)
@click.option("--per-hit", default=10, show_default=True)
@click.option("--allow-partial", is_flag=True)
@click.option("--interlanguage", type=_path_in)
@click.option("--top-k", default=0, show_default=True,
              help="sample only from the k most frequent silver relations "
                   "(0 keeps all)")
def annotate_export_cmd(documents, triplets_path, out_dir, langs, sample_size,
                        seed, per_hit, allow_partial, interlanguage,
                        top_k) -> None:
    """Sample silver triplets and batch them into annotation HITs."""
    docs = _docs(documents)
    keys = _keys(interlanguage)
    target = tuple(langs) or tuple(sorted({d.lang for d in docs.values()}))
    triplets = _triplets(triplets_path)
    if top_k:
        silver = [t for t in triplets if t.status == SILVER]
        triplets = select_top_k(silver, top_k).kept if silver else []
    sample = sample_for_annotation(
        triplets,
        docs,
        SamplingConfig(langs=target, random_sample_size=sample_size, seed=seed),
        page_key=lambda d: keys.key_of(d.lang, d.page_id),
    )
    hits = assign_hits(sample, docs, per_hit=per_hit, allow_partial=allow_partial)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "sampled.jsonl", (t.to_dict() for t in sample))
    write_jsonl(out / "hits.jsonl", (h.to_dict() for h in hits))
    _emit({"sampled": len(sample), "hits": len(hits)})


@main.command("aggregate")
@click.option("--judgments", required=True, type=_path_in)
@click.option("--triplets", "triplets_path", required=True, type=_path_in)
@click.option("--out", required=True, type=_path_out)
@click.option("--required", default=3, show_default=True)
@click.option("--quorum", default=2, show_default=True)
@click.option("--documents", type=_path_in,
              help="enables the per-language rejection-rate summary")
def aggregate_cmd(judgments, triplets_path, out, required, quorum, documents):
    """Fold judgments into verdicts and move triplets to gold status."""
    js = JudgmentLog(judgments).read()
    verdicts = aggregate(js, required=required, quorum=quorum)
    rows = apply_aggregation(_triplets(triplets_path), verdicts)
    write_jsonl(out, (t.to_dict() for t in rows))
    c = Counter(verdicts.values())
    result = {
        "judgments": len(js),
        "judged_triplets": len(verdicts),
        "gold_true": c[GOLD_TRUE],
        "gold_false": c[GOLD_FALSE],
        "pending": c[PENDING],
    }
    if documents:
        docs = _docs(documents)
        by_id = {t.triplet_id: t for t in rows}
        stats = filtered_stats(
            (docs[by_id[tid].doc_id].lang, v)
            for tid, v in verdicts.items()
            if tid in by_id
        )
        result["filtered_pct"] = dict(sorted(stats.items()))
    _emit(result)


@main.command("split")
@click.option("--documents", required=True, type=_path_in)
@click.option("--out", required=True, type=_path_out)
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--interlanguage", type=_path_in)
def split_cmd(documents, out, ratios, seed, interlanguage) -> None:
    """Hash every page into train/validation/test."""
    keys = _keys(interlanguage)
    pages = sorted(
        {keys.key_of(d.lang, d.page_id) for d in _docs(documents).values()}
    )
    parts = tuple(float(x) for x in ratios.split(","))
    assignment = assign_splits(pages, ratios=parts, seed=seed)
    write_tsv(out, sorted(assignment.by_page.items()))
    _emit(dict(sorted(Counter(assignment.by_page.values()).items())))


@main.command("build")
@click.option("--documents", required=True, type=_path_in)
@click.option("--triplets", "triplets_path", required=True, type=_path_in)
@click.option("--splits", "splits_path", required=True, type=_path_in)
@click.option("--vocab", "vocab_path", required=True, type=_path_in)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--types", "types_path", type=_path_in)
@click.option("--interlanguage", type=_path_in)
@click.option("--gold-top-k", default=0, show_default=True,
              help="restrict to the k most frequent surviving relations")
@click.option("--rollup", default="", metavar="PID,PID,...",
              help="relations summed into the distribution report's rollup")
def build_cmd(documents, triplets_path, splits_path, vocab_path, out_dir,
              types_path, interlanguage, gold_top_k, rollup) -> None:
    """Write the validated dataset files plus count and distribution tables."""
    docs = _docs(documents)
    triplets = _triplets(triplets_path)
    vocab = RelationVocab.load(vocab_path)
    if gold_top_k:
        basis = [
            t for t in triplets if t.status in (SILVER, GOLD_TRUE, GOLD_FALSE)
        ]
        vocab = vocab.restrict(
            select_top_k(basis, gold_top_k).pids if basis else ()
        )
    type_map = (
        EntityTypeMap.load_tsv(types_path) if types_path else EntityTypeMap({})
    )
    assignment = SplitAssignment(dict(read_tsv(splits_path, 2)))
    dataset = build_gold(
        triplets, docs, vocab, type_map, _keys(interlanguage), assignment
    )
    paths = write_dataset(dataset, out_dir)
    rollup_pids = tuple(p for p in rollup.split(",") if p)
    write_reports(dataset, vocab.names(), rollup_pids, out_dir)
    _emit({"files": len(paths), "triplets": sum(dataset.counts.values())})


@main.command("linearize")
@click.option("--documents", type=_path_in)
@click.option("--triplets", "triplets_path", type=_path_in)
@click.option("--vocab", "vocab_path", type=_path_in)
@click.option("--mode", type=click.Choice(["re", "rc"]), default="re",
              show_default=True)
@click.option("--rc-fraction", type=float,
              help="emit a seeded RE/RC mix instead of a single mode")
@click.option("--rc-seed", default=0, show_default=True)
@click.option("--untyped", is_flag=True, help="emit <subj>/<obj> placeholders")
@click.option("--decode", "decode_path", type=_path_in, metavar="TARGETS",
              help="parse linearized targets back into triplets instead")
@click.option("--out", required=True, type=_path_out)
def linearize_cmd(documents, triplets_path, vocab_path, mode, rc_fraction,
                  rc_seed, untyped, decode_path, out) -> None:
    """Turn triplets into seq2seq samples, or parse targets back."""
    if decode_path:
        rows = []
        for rec in read_jsonl(decode_path):
            notes: list[str] = []
            parsed = decode(rec["target"], typed=not untyped, diagnostics=notes)
            rows.append({**rec, "triplets": [list(t) for t in parsed],
                         "notes": notes})
        write_jsonl(out, rows)
        _emit({"decoded": len(rows)})
        return
    if not (documents and triplets_path and vocab_path):
        raise click.UsageError(
            "--documents, --triplets and --vocab are required unless --decode"
        )
    docs = _docs(documents)
    names = RelationVocab.load(vocab_path).names()
    by_doc: dict[str, list[Triplet]] = {}
    for t in _triplets(triplets_path):
        by_doc.setdefault(t.doc_id, []).append(t)
    rows = []
    try:
        if rc_fraction is not None:
            recs = [(docs[d], group) for d, group in by_doc.items()]
            samples = training_samples(
                recs, names, fraction=rc_fraction, seed=rc_seed,
                typed=not untyped,
            )
            rows = [
                {"doc_id": doc.doc_id, **s.to_dict()}
                for (doc, _), s in zip(recs, samples)
            ]
        else:
            for doc_id, group in by_doc.items():
                doc = docs[doc_id]
                if mode == "re":
                    s = encode_re(doc, group, names, typed=not untyped)
                    rows.append({"doc_id": doc_id, **s.to_dict()})
                else:
                    for t in group:
                        s = encode_rc(doc, t, names, typed=not untyped)
                        rows.append({"doc_id": doc_id,
                                     "triplet_id": t.triplet_id,
                                     **s.to_dict()})
    except EncodeError as err:
        raise click.ClickException(str(err))
    write_jsonl(out, rows)
    _emit({"samples": len(rows)})


def _load_gold(paths) -> tuple[dict, dict]:
    golds: dict[str, list[EvalTriplet]] = {}
    langs: dict[str, str] = {}
    for path in paths:
        for rec in read_jsonl(path):
            doc_id = rec["doc_id"]
            golds[doc_id] = [EvalTriplet.from_dict(t) for t in rec["triplets"]]
            langs[doc_id] = rec.get("lang", "und")
    return golds, langs


@main.command("score")
@click.option("--gold", "gold_paths", multiple=True, required=True,
              type=_path_in, help="dataset files (repeatable)")
@click.option("--pred", "pred_path", required=True, type=_path_in)
@click.option("--mode", type=click.Choice(["strict", "boundaries"]),
              default="strict", show_default=True)
@click.option("--raw", is_flag=True,
              help="predictions are linearized targets; decode them and "
                   "match on surfaces only")
@click.option("--vocab", "vocab_path", type=_path_in,
              help="map decoded relation names back to relation ids")
@click.option("--per-relation", is_flag=True)
@click.option("--per-language", is_flag=True)
def score_cmd(gold_paths, pred_path, mode, raw, vocab_path, per_relation,
              per_language):
    """Score predictions against gold dataset files."""
    golds, langs = _load_gold(gold_paths)
    to_pid: dict[str, str] = {}
    if vocab_path:
        to_pid = {
            name: pid for pid, name in RelationVocab.load(vocab_path).names().items()
        }
    preds: dict[str, list[EvalTriplet]] = {}
    for rec in read_jsonl(pred_path):
        doc_id = rec["doc_id"]
        if raw:
            preds[doc_id] = [
                EvalTriplet(subj_surface=s, obj_surface=o,
                            relation=to_pid.get(rel, rel),
                            subj_type=st, obj_type=ot)
                for s, st, o, ot, rel in decode(rec["target"])
            ]
        else:
            preds[doc_id] = [EvalTriplet.from_dict(t) for t in rec["triplets"]]
    report = score_re(
        preds, golds, mode=mode, surface_only=raw,
        langs=langs if per_language else None,
    )
    result = report.to_dict()
    if not per_relation:
        result.pop("by_relation")
    if not per_language:
        result.pop("by_language")
    _emit(result)


def build_service(
    hits_path: str,
    log_path: str,
    vocab_path: str | None = None,
    qualified: tuple[str, ...] = (),
    required: int = 3,
    quorum: int = 2,
    lease_seconds: float = 3600.0,
) -> AnnotationService:
    hits = [Hit.from_dict(r) for r in read_jsonl(hits_path)]
    names = RelationVocab.load(vocab_path).names() if vocab_path else None
    return AnnotationService(
        hits,
        JudgmentLog(log_path),
        names=names,
        qualified=qualified,
        required=required,
        quorum=quorum,
        lease_seconds=lease_seconds,
    )


@main.command("serve-annotation")
@click.option("--hits", "hits_path", required=True, type=_path_in)
@click.option("--log", "log_path", required=True, type=_path_out)
@click.option("--vocab", "vocab_path", type=_path_in,
              help="relation names for the task descriptions")
@click.option("--qualify", "qualified", multiple=True,
              help="annotator id allowed to work (repeatable)")
@click.option("--required", default=3, show_default=True)
@click.option("--quorum", default=2, show_default=True)
@click.option("--lease-seconds", default=3600.0, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True)
def serve_annotation_cmd(hits_path, log_path, vocab_path, qualified, required,
                         quorum, lease_seconds, host, port) -> None:
    """Serve HITs over HTTP and append judgments to the log."""
    import uvicorn

    service = build_service(
        hits_path, log_path, vocab_path, tuple(qualified), required, quorum,
        lease_seconds,
    )
    uvicorn.run(make_app(service), host=host, port=port)


if __name__ == "__main__":
    main()
