"""Serialize triplets into seq2seq target strings and parse them back.

Byte-level grammar (docs/formats.md has the railroad diagram):

    re_target = "tp_XX" [group ...]
    group     = "<triplet> " SUBJ unit [unit ...]
    unit      = " " STYP " " OBJ " " OTYP " " REL
    rc_target = "tp_XX<relation> " SUBJ unit

"tp_XX" abuts the first marker with no space. STYP and OTYP are entity type
tokens in typed mode and the bare "<subj>"/"<obj>" markers otherwise; the
subject's type token repeats before every object of its group, which is what
lets the greedy decoder segment units without lookahead. Inputs are the
document text prefixed with the source language token (RC inputs additionally
wrap the subject in "# ... #" and the object in "@ ... @").

Decoding is total: any string yields a (possibly empty) triplet list, with
fragments of a cut-off final triplet reported as-is rather than dropped
silently, so parse counts are monotone under prefix truncation.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from hashlib import blake2b
from importlib import resources
from random import Random
from typing import Iterable, Iterator

from .records import Document, Triplet

RE = "RE"
RC = "RC"

_SENTINEL = "​"
_MARKER_RE = re.compile(r"<[a-z][a-z_]*>")
_ESCAPE_RE = re.compile(r"<(?=​|[a-z][a-z_]*>)")
_GROUP_MARKERS = ("<triplet>", "<relation>")
_SPECIAL_TOKENS = frozenset({"<s>", "</s>", "<pad>"})
_PREFIX = "tp_XX"

_cache: dict[str, dict] = {}


class EncodeError(ValueError):
    """A triplet cannot be serialized against its document."""


def _load_table(name: str) -> dict:
    if name not in _cache:
        path = resources.files("relkit.data").joinpath(name)
        with path.open(encoding="utf-8") as fh:
            _cache[name] = json.load(fh)
    return _cache[name]


def type_tokens() -> dict[str, str]:
    """Label -> token table for the thirteen entity types."""
    return _load_table("type_tokens.json")


def type_labels() -> tuple[str, ...]:
    return tuple(type_tokens())


def language_token(lang: str) -> str:
    """Sequence-start token for a language code, mBART-50 style.

    Codes outside the shipped table fall back to the `xx_XX` convention used
    for languages the base model never saw.
    """
    return _load_table("language_tokens.json").get(lang, f"{lang}_XX")


def known_languages() -> tuple[str, ...]:
    """The language codes the pipeline is configured for."""
    return tuple(sorted(_load_table("language_tokens.json")))


@dataclass(frozen=True)
class LinearizedSample:
    input: str
    target: str
    mode: str
    lang: str

    def to_dict(self) -> dict:
        return {"input": self.input, "target": self.target, "mode": self.mode, "lang": self.lang}


def _clean(surface: str, what: str) -> str:
    """Whitespace-normalize and escape a surface for embedding in a target.

    Escaping inserts a zero-width space after any '<' that would otherwise
    start a marker-shaped token (or that already precedes a sentinel, so the
    transform stays invertible). The decoder strips one sentinel per '<'.
    """
    s = " ".join(surface.split())
    if not s:
        raise EncodeError(f"empty {what} surface")
    return _ESCAPE_RE.sub("<" + _SENTINEL, s)


def _unescape(s: str) -> str:
    return s.replace("<" + _SENTINEL, "<")


def _type_token(label: str | None, table: dict[str, str]) -> str:
    if label is None:
        return table["unknown"]
    try:
        return table[label]
    except KeyError:
        raise EncodeError(f"no token for entity type {label!r}") from None


def _mention_pair(doc: Document, t: Triplet):
    try:
        return doc.mentions[t.subj_idx], doc.mentions[t.obj_idx]
    except IndexError:
        raise EncodeError(
            f"{t.triplet_id}: mention index out of range for {doc.doc_id}"
        ) from None


def _unit(subj_tok: str, obj_surface: str, obj_tok: str, rel_name: str) -> str:
    return f" {subj_tok} {_clean(obj_surface, 'object')} {obj_tok} {rel_name}"


def encode_re(
    doc: Document,
    triplets: Iterable[Triplet],
    names: dict[str, str],
    typed: bool = True,
    table: dict[str, str] | None = None,
) -> LinearizedSample:
    """Linearize a document's triplets, grouped by subject mention.

    Groups follow subject first-mention order and objects follow mention
    offset within a group. ``names`` maps relation ids to their English
    names; a missing id falls back to the raw id so desk runs with partial
    vocabularies stay usable.
    """
    table = table or type_tokens()

    def key(t: Triplet):
        subj, obj = _mention_pair(doc, t)
        return subj.start, t.subj_idx, obj.start, t.obj_idx

    parts = [_PREFIX]
    current_subject = None
    for t in sorted(triplets, key=key):
        subj, obj = _mention_pair(doc, t)
        subj_tok = _type_token(t.subj_type, table) if typed else "<subj>"
        obj_tok = _type_token(t.obj_type, table) if typed else "<obj>"
        if t.subj_idx != current_subject:
            opener = "<triplet> " if current_subject is None else " <triplet> "
            parts.append(opener + _clean(subj.surface, "subject"))
            current_subject = t.subj_idx
        rel = _clean(names.get(t.pid, t.pid), "relation")
        parts.append(_unit(subj_tok, obj.surface, obj_tok, rel))
    return LinearizedSample(
        input=f"{language_token(doc.lang)} {doc.text}",
        target="".join(parts),
        mode=RE,
        lang=doc.lang,
    )


def mark_rc_input(text: str, subj_start: int, subj_end: int, obj_start: int, obj_end: int) -> str:
    """Wrap the subject span in '# ... #' and the object span in '@ ... @'."""
    inserts = [
        (subj_start, 0, "# "),
        (subj_end, 1, " #"),
        (obj_start, 0, "@ "),
        (obj_end, 1, " @"),
    ]
    # Highest position first; at a shared boundary the start marker goes in
    # first so the earlier span's end marker lands to its left.
    for pos, _, marker in sorted(inserts, key=lambda x: (-x[0], x[1])):
        text = text[:pos] + marker + text[pos:]
    return text


def unmark_rc(text: str) -> str:
    """Inverse of mark_rc_input for texts with no bare '#'/'@' of their own."""
    text = re.sub(r"# (.*?) #", r"\1", text, count=1, flags=re.S)
    text = re.sub(r"@ (.*?) @", r"\1", text, count=1, flags=re.S)
    return text


def encode_rc(
    doc: Document,
    t: Triplet,
    names: dict[str, str],
    typed: bool = True,
    table: dict[str, str] | None = None,
) -> LinearizedSample:
    """Linearize one triplet as a relation classification sample."""
    table = table or type_tokens()
    subj, obj = _mention_pair(doc, t)
    if subj.start < obj.end and obj.start < subj.end:
        raise EncodeError(f"{t.triplet_id}: overlapping subject/object spans")
    subj_tok = _type_token(t.subj_type, table) if typed else "<subj>"
    obj_tok = _type_token(t.obj_type, table) if typed else "<obj>"
    rel = _clean(names.get(t.pid, t.pid), "relation")
    target = (
        f"{_PREFIX}<relation> {_clean(subj.surface, 'subject')}"
        + _unit(subj_tok, obj.surface, obj_tok, rel)
    )
    marked = mark_rc_input(doc.text, subj.start, subj.end, obj.start, obj.end)
    return LinearizedSample(
        input=f"{language_token(doc.lang)} {marked}",
        target=target,
        mode=RC,
        lang=doc.lang,
    )


def decode(
    target: str,
    typed: bool = True,
    table: dict[str, str] | None = None,
    diagnostics: list[str] | None = None,
) -> list[tuple]:
    """Parse a target string back into (subj, styp, obj, otyp, rel) tuples.

    Greedy left-to-right over whitespace tokens; never raises. Marker-shaped
    tokens drive a three-field state machine, everything else accumulates
    into the current field. Unknown type tokens map to the ``unknown`` label
    (``None`` in untyped mode). Pass a list as ``diagnostics`` to collect
    notes about ignored or incomplete material.
    """
    notes = diagnostics if diagnostics is not None else []
    table = table or type_tokens()
    label_of = {tok: lab for lab, tok in table.items()}

    def label(token: str | None) -> str | None:
        if not typed:
            return None
        if token is None:
            return "unknown"
        return label_of.get(token, "unknown")

    text = target[len(_PREFIX):] if target.startswith(_PREFIX) else target

    out: list[tuple] = []
    state = None
    subj_words: list[str] = []
    obj_words: list[str] = []
    rel_words: list[str] = []
    styp = otyp = None

    def emit() -> bool:
        s = _unescape(" ".join(subj_words))
        o = _unescape(" ".join(obj_words))
        r = _unescape(" ".join(rel_words))
        if s and o and r:
            out.append((s, label(styp), o, label(otyp), r))
            return True
        return False

    for token in text.split():
        if token in _SPECIAL_TOKENS:
            continue
        if token in _GROUP_MARKERS:
            emit()
            subj_words, obj_words, rel_words = [], [], []
            styp = otyp = None
            state = "subj"
        elif _MARKER_RE.fullmatch(token):
            if state in ("subj", "rel"):
                # Subject finished, or a fresh unit for the same subject.
                emit()
                obj_words, rel_words = [], []
                otyp = None
                styp = token
                state = "obj"
            elif state == "obj":
                otyp = token
                rel_words = []
                state = "rel"
            else:
                notes.append(f"marker {token} before any group; ignored")
        elif state == "subj":
            subj_words.append(token)
        elif state == "obj":
            obj_words.append(token)
        elif state == "rel":
            rel_words.append(token)
        else:
            notes.append(f"stray token {token!r} ignored")

    if state is not None and not emit() and (subj_words or obj_words or rel_words):
        notes.append("trailing incomplete fragment dropped")
    return out


def _unit_interval(seed, *parts: str) -> float:
    payload = "\x1f".join([str(seed), *parts]).encode("utf-8")
    return int.from_bytes(blake2b(payload, digest_size=8).digest(), "big") / 2**64


def sample_rc_fraction(
    records: Iterable[tuple[Document, list[Triplet]]],
    fraction: float = 0.05,
    seed: int = 0,
) -> Iterator[tuple[Document, list[Triplet], str, int | None]]:
    """Tag each record RE or RC by a per-record seeded Bernoulli draw.

    RC records additionally carry the index of one uniformly drawn triplet.
    Records with no triplets stay RE no matter the fraction. Selection
    depends only on (seed, doc_id), so streams can be re-run or sharded
    without changing the draw.
    """
    if not 0 <= fraction <= 1:
        raise ValueError(f"fraction {fraction} outside [0, 1]")
    for doc, triplets in records:
        if triplets and fraction > 0 and _unit_interval(seed, "rc", doc.doc_id) < fraction:
            rng = Random(_unit_interval(seed, "pick", doc.doc_id))
            yield doc, triplets, RC, rng.randrange(len(triplets))
        else:
            yield doc, triplets, RE, None


def training_samples(
    records: Iterable[tuple[Document, list[Triplet]]],
    names: dict[str, str],
    fraction: float = 0.05,
    seed: int = 0,
    typed: bool = True,
) -> Iterator[LinearizedSample]:
    """Full corpus-to-training-file transform, RC sampling included."""
    for doc, triplets, mode, pick in sample_rc_fraction(records, fraction, seed):
        if mode == RC:
            yield encode_rc(doc, triplets[pick], names, typed)
        else:
            yield encode_re(doc, triplets, names, typed)
