#!/usr/bin/env python3
"""Generate a small synthetic input set for a full pipeline run.

Twelve invented towns described in three languages, a triple store that
mostly agrees with the text, and mock scorer rule files with a few planted
failures, so every stage of the pipeline has something to do. The output
directory is ready for `relkit run --config <dir>/config.json`.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from relkit.extract import RelationEntry, RelationVocab
from relkit.fileio import write_jsonl, write_tsv
from relkit.scorers import dump_mock_rules

LANGS = ("en", "es", "de")
N_TOWNS = 12
N_SHARED = 5

TOWN = {"en": "Newtown {i}", "es": "Villanueva {i}", "de": "Neustadt {i}"}
REGION = {
    "en": ("North Province", "South Province"),
    "es": ("Provincia Norte", "Provincia Sur"),
    "de": ("Nordprovinz", "Südprovinz"),
}
COUNTRY = {"en": "Valdoria", "es": "Valdoria", "de": "Valdorien"}

TEMPLATES = {
    "en": (
        "[[{town}]] is a small town in [[{region}]], part of [[{country}]]. "
        "It was founded on {day} May 1901. "
        "About {pop} people live in [[{town}]]."
    ),
    "es": (
        "[[{town}]] es una pequeña ciudad de [[{region}]], parte de "
        "[[{country}]]. Fue fundada el {day} de mayo de 1901. "
        "En [[{town}]] viven {pop} personas."
    ),
    "de": (
        "[[{town}]] ist eine Kleinstadt in [[{region}]] und Teil von "
        "[[{country}]]. Sie wurde am {day}. Mai 1901 gegründet. "
        "In [[{town}]] leben {pop} Menschen."
    ),
}


def day_of(i: int) -> int:
    return (i * 7) % 28 + 1


def pop_of(i: int) -> int:
    return 1200 + 37 * i


def region_of(i: int) -> int:
    return i % 2


def demo_vocab() -> RelationVocab:
    return RelationVocab(
        entries=(
            RelationEntry("P17", "country", 1),
            RelationEntry("P131", "located in the administrative territorial entity", 2),
            RelationEntry("P571", "inception", 3),
            RelationEntry("P1082", "population", 4),
        ),
        inverse_map={"P150": "P131"},
    )


def build(root: Path) -> Path:
    root.mkdir(parents=True, exist_ok=True)

    corpus = []
    nli_rules: dict[tuple[str, str], float] = {}
    critic_rules: dict[tuple[str, str], float] = {}
    for i in range(N_TOWNS):
        for lang in LANGS:
            fields = {
                "town": TOWN[lang].format(i=i),
                "region": REGION[lang][region_of(i)],
                "country": COUNTRY[lang],
                "day": day_of(i),
                "pop": pop_of(i),
            }
            markup = TEMPLATES[lang].format(**fields)
            corpus.append(
                {
                    "title": fields["town"],
                    "page_id": f"town{i}",
                    "lang": lang,
                    "text": markup,
                }
            )
            premise = markup.replace("[[", "").replace("]]", "")
            if i % 5 == 0:
                hyp = f"{fields['town']} <sep> population <sep> {fields['pop']}"
                nli_rules[(premise, hyp)] = 0.03
            if i == 3:
                hyp = f"{fields['town']} country {fields['country']}"
                critic_rules[(premise, hyp)] = 0.12
    write_jsonl(root / "corpus.jsonl", corpus)

    for lang in LANGS:
        rows = [(TOWN[lang].format(i=i), f"T{i}") for i in range(N_TOWNS)]
        rows += [(REGION[lang][r], f"R{r}") for r in (0, 1)]
        rows.append((COUNTRY[lang], "C0"))
        write_tsv(root / f"titles.{lang}.tsv", rows)

    facts = []
    for i in range(N_TOWNS):
        facts.append((f"T{i}", "P17", "C0"))
        facts.append((f"T{i}", "P1082", str(pop_of(i))))
        if i % 3 != 2:
            facts.append((f"T{i}", "P571", f"1901-05-{day_of(i):02d}"))
        # the region fact alternates direction to exercise inverse collapsing
        if i % 2 == 0:
            facts.append((f"T{i}", "P131", f"R{region_of(i)}"))
        else:
            facts.append((f"R{region_of(i)}", "P150", f"T{i}"))
    write_tsv(root / "facts.tsv", sorted(set(facts)))

    demo_vocab().save(root / "vocab.json")
    write_tsv(
        root / "interlanguage.tsv",
        [(lang, f"town{i}", f"town-{i}") for i in range(N_SHARED) for lang in LANGS],
    )
    write_tsv(
        root / "entity_types.tsv",
        [(f"T{i}", "location") for i in range(N_TOWNS - 2)]
        + [("R0", "location"), ("R1", "location"), ("C0", "location")],
    )
    dump_mock_rules(root / "nli_rules.jsonl", nli_rules, default=0.85, keyed_by="pair")
    dump_mock_rules(root / "critic_rules.jsonl", critic_rules, default=0.75, keyed_by="pair")

    config = {
        "corpus": "corpus.jsonl",
        "title_maps": {lang: f"titles.{lang}.tsv" for lang in LANGS},
        "triple_store": "facts.tsv",
        "vocab": "vocab.json",
        "out_dir": "out",
        "interlanguage": "interlanguage.tsv",
        "entity_types": "entity_types.tsv",
        "nli_scorer": "mock:nli_rules.jsonl",
        "critic_scorer": "mock:critic_rules.jsonl",
        "top_k": 3,
        "gold_top_k": 2,
        "export_annotation": True,
        "annotation": {
            "langs": ["en", "es"],
            "random_sample_size": 12,
            "sample_seed": 9,
            "per_hit": 5,
            "allow_partial": True,
            "required": 3,
            "quorum": 2,
        },
        "location_rollup": ["P17", "P131"],
        "split_ratios": [0.8, 0.1, 0.1],
        "split_seed": 13,
    }
    path = root / "config.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", nargs="?", default="demo", type=Path)
    args = parser.parse_args()
    config = build(args.out_dir)
    print(f"wrote demo inputs under {args.out_dir}/ (config: {config})")


if __name__ == "__main__":
    main()
