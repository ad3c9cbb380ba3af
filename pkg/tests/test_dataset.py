"""Page-disjoint splits, gold assembly, and distribution statistics."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relkit.dataset import (
    SPLITS,
    GoldDataset,
    PageKeyTable,
    SplitAssignment,
    assign_splits,
    build_gold,
    counts_table,
    distribution_report,
    mention_type,
    write_dataset,
)
from relkit.entity_types import EntityTypeMap
from relkit.evaluate import EvalTriplet
from relkit.extract import RelationEntry, RelationVocab
from relkit.fileio import read_jsonl
from relkit.records import (
    DATE,
    ENTITY,
    GOLD_FALSE,
    GOLD_TRUE,
    QUANTITY,
    SILVER,
    Document,
    Mention,
    Triplet,
)


class TestAssignSplits:
    def test_ratios_must_sum_to_one(self):
        with pytest.raises(ValueError):
            assign_splits(["p1"], ratios=(0.5, 0.3, 0.1))

    def test_negative_ratio_rejected(self):
        with pytest.raises(ValueError):
            assign_splits(["p1"], ratios=(1.2, -0.1, -0.1))

    def test_names_must_match_ratios(self):
        with pytest.raises(ValueError):
            assign_splits(["p1"], ratios=(0.8, 0.2), names=SPLITS)

    def test_degenerate_ratio_takes_all(self):
        out = assign_splits([f"p{i}" for i in range(50)], ratios=(1.0, 0.0, 0.0))
        assert set(out.by_page.values()) == {"train"}

    def test_shifted_ratio_moves_all(self):
        out = assign_splits([f"p{i}" for i in range(50)], ratios=(0.0, 1.0, 0.0))
        assert set(out.by_page.values()) == {"validation"}

    def test_deterministic(self):
        keys = [f"page{i}" for i in range(300)]
        a = assign_splits(keys, seed=7)
        b = assign_splits(list(reversed(keys)), seed=7)
        assert a.by_page == b.by_page

    def test_seed_changes_assignment(self):
        keys = [f"page{i}" for i in range(200)]
        a = assign_splits(keys, seed=0).by_page
        b = assign_splits(keys, seed=1).by_page
        assert a != b

    def test_three_sigma_on_thousand_pages(self):
        # Binomial std devs: sqrt(1000*.8*.2) ~ 12.6 and sqrt(1000*.1*.9) ~ 9.5,
        # so 3-sigma windows are 800 +/- 38 and 100 +/- 29.
        out = assign_splits([f"page{i}" for i in range(1000)], seed=0)
        tallies = {name: 0 for name in SPLITS}
        for split in out.by_page.values():
            tallies[split] += 1
        assert abs(tallies["train"] - 800) <= 3 * math.sqrt(1000 * 0.8 * 0.2)
        assert abs(tallies["validation"] - 100) <= 3 * math.sqrt(1000 * 0.1 * 0.9)
        assert abs(tallies["test"] - 100) <= 3 * math.sqrt(1000 * 0.1 * 0.9)

    @given(st.sets(st.text(min_size=1, max_size=8), max_size=40), st.integers(0, 5))
    @settings(max_examples=50)
    def test_every_page_lands_in_one_split(self, keys, seed):
        out = assign_splits(keys, seed=seed)
        assert set(out.by_page) == keys
        assert set(out.by_page.values()) <= set(SPLITS)

    def test_split_of(self):
        out = assign_splits(["p1"])
        assert out.split_of("p1") in SPLITS
        assert out.split_of("p404") is None


class TestPageKeyTable:
    def test_linked_pages_share_key(self):
        table = PageKeyTable({("en", "p1"): "Q7", ("es", "p9"): "Q7"})
        assert table.key_of("en", "p1") == table.key_of("es", "p9") == "Q7"

    def test_unlinked_page_is_its_own_key(self):
        table = PageKeyTable({})
        assert table.key_of("de", "p3") == "de:p3"

    def test_load_tsv(self, tmp_path):
        path = tmp_path / "links.tsv"
        path.write_text("# lang page key\nen\tp1\tQ7\nes\tp9\tQ7\n")
        table = PageKeyTable.load_tsv(path)
        assert table.key_of("es", "p9") == "Q7"

    def test_conflicting_duplicate_rejected(self, tmp_path):
        path = tmp_path / "links.tsv"
        path.write_text("en\tp1\tQ7\nen\tp1\tQ8\n")
        with pytest.raises(ValueError):
            PageKeyTable.load_tsv(path)

    def test_identical_duplicate_tolerated(self, tmp_path):
        path = tmp_path / "links.tsv"
        path.write_text("en\tp1\tQ7\nen\tp1\tQ7\n")
        assert PageKeyTable.load_tsv(path).key_of("en", "p1") == "Q7"

    def test_linked_pages_land_in_one_split(self):
        table = PageKeyTable({("en", "p1"): "Q7", ("es", "p9"): "Q7"})
        splits = assign_splits([table.key_of("en", "p1"), table.key_of("es", "p9")])
        assert splits.split_of("Q7") in SPLITS
        assert len(splits.by_page) == 1


def _doc(doc_id, lang, page_id, spec):
    mentions, pos, words = [], 0, []
    for i, (kind, ref) in enumerate(spec):
        w = f"w{i}"
        words.append(w)
        if kind == ENTITY:
            mentions.append(Mention(pos, pos + len(w), w, kind, entity_id=ref))
        else:
            mentions.append(Mention(pos, pos + len(w), w, kind, value=ref))
        pos += len(w) + 1
    return Document(doc_id, page_id, lang, "T", " ".join(words), mentions)


def _fixture():
    docs = {
        "en:p1": _doc(
            "en:p1",
            "en",
            "p1",
            [(ENTITY, "Q1"), (ENTITY, "Q2"), (DATE, "1999-01-01"), (QUANTITY, "42")],
        ),
        "es:p9": _doc("es:p9", "es", "p9", [(ENTITY, "Q1"), (ENTITY, "Q2")]),
        "en:p2": _doc("en:p2", "en", "p2", [(ENTITY, "Q3"), (ENTITY, "Q2")]),
    }
    triplets = [
        Triplet("en:p1:a", "en:p1", 0, "P276", 1, status=GOLD_TRUE),
        Triplet("en:p1:b", "en:p1", 0, "P569", 2, status=GOLD_TRUE),
        Triplet("en:p1:c", "en:p1", 1, "P17", 3, status=GOLD_TRUE),
        Triplet("en:p1:d", "en:p1", 1, "P999", 0, status=GOLD_TRUE),
        Triplet("en:p1:e", "en:p1", 0, "P17", 1, status=GOLD_FALSE),
        Triplet("en:p1:f", "en:p1", 0, "P276", 3, status=SILVER),
        Triplet("es:p9:a", "es:p9", 0, "P276", 1, status=GOLD_TRUE),
        Triplet("es:p9:b", "es:p9", 1, "P276", 0, status=GOLD_TRUE),
        Triplet("en:p2:a", "en:p2", 0, "P17", 1, status=GOLD_TRUE),
    ]
    vocab = RelationVocab(
        entries=(
            RelationEntry("P276", "location", 1),
            RelationEntry("P17", "country", 2),
            RelationEntry("P569", "date of birth", 3),
        ),
        inverse_map={},
    )
    type_map = EntityTypeMap({"Q1": "person", "Q2": "location"})
    keys = PageKeyTable({("en", "p1"): "Q7", ("es", "p9"): "Q7"})
    assignment = SplitAssignment({"Q7": "train", "en:p2": "test"})
    return docs, triplets, vocab, type_map, keys, assignment


class TestBuildGold:
    def build(self):
        docs, triplets, vocab, type_map, keys, assignment = _fixture()
        return build_gold(triplets, docs, vocab, type_map, keys, assignment)

    def test_bucket_layout(self):
        ds = self.build()
        assert set(ds.records) == {("train", "en"), ("train", "es"), ("test", "en")}
        assert [len(v) for v in ds.records.values()] == [1, 1, 1]

    def test_only_validated_true_and_known_relations(self):
        ds = self.build()
        train_en = ds.records[("train", "en")][0]
        assert [t["relation"] for t in train_en["triplets"]] == ["P276", "P569", "P17"]

    def test_entity_types_attached(self):
        ds = self.build()
        by_rel = {t["relation"]: t for t in ds.records[("train", "en")][0]["triplets"]}
        assert by_rel["P276"]["subject"]["type"] == "person"
        assert by_rel["P276"]["object"]["type"] == "location"
        assert by_rel["P569"]["object"]["type"] == "date"
        assert by_rel["P17"]["object"]["type"] == "number"
        assert ds.records[("test", "en")][0]["triplets"][0]["subject"]["type"] == "unknown"

    def test_spans_point_into_text(self):
        ds = self.build()
        rec = ds.records[("train", "en")][0]
        for t in rec["triplets"]:
            s = t["subject"]
            assert rec["text"][s["start"] : s["end"]] == s["surface"]

    def test_counts(self):
        ds = self.build()
        assert ds.counts == {
            ("P276", "en", "train"): 1,
            ("P569", "en", "train"): 1,
            ("P17", "en", "train"): 1,
            ("P276", "es", "train"): 2,
            ("P17", "en", "test"): 1,
        }

    def test_missing_split_is_fatal(self):
        docs, triplets, vocab, type_map, keys, _ = _fixture()
        partial = SplitAssignment({"Q7": "train"})
        with pytest.raises(ValueError, match="en:p2"):
            build_gold(triplets, docs, vocab, type_map, keys, partial)

    def test_missing_document_is_fatal(self):
        docs, triplets, vocab, type_map, keys, assignment = _fixture()
        orphan = Triplet("en:p404:a", "en:p404", 0, "P17", 1, status=GOLD_TRUE)
        with pytest.raises(ValueError, match="en:p404"):
            build_gold(triplets + [orphan], docs, vocab, type_map, keys, assignment)

    def test_deterministic(self):
        docs, triplets, vocab, type_map, keys, assignment = _fixture()
        a = build_gold(triplets, docs, vocab, type_map, keys, assignment)
        b = build_gold(list(reversed(triplets)), docs, vocab, type_map, keys, assignment)
        assert a == b

    def test_written_files_round_trip(self, tmp_path):
        ds = self.build()
        paths = write_dataset(ds, tmp_path)
        assert sorted(p.name for p in paths) == [
            "test.en.jsonl",
            "train.en.jsonl",
            "train.es.jsonl",
        ]
        rec = next(read_jsonl(tmp_path / "train.en.jsonl"))
        assert rec["doc_id"] == "en:p1"
        parsed = EvalTriplet.from_dict(rec["triplets"][0])
        assert parsed.relation == "P276"
        assert parsed.subj_span == (0, 2)


class TestMentionType:
    def test_kind_overrides(self):
        tm = EntityTypeMap({"Q1": "person"})
        assert mention_type(Mention(0, 1, "x", DATE, value="1999-01-01"), tm) == "date"
        assert mention_type(Mention(0, 1, "x", QUANTITY, value="4"), tm) == "number"
        assert mention_type(Mention(0, 1, "x", ENTITY, entity_id="Q1"), tm) == "person"
        assert mention_type(Mention(0, 1, "x", ENTITY, entity_id="Q9"), tm) == "unknown"


class TestCountsTable:
    def test_fixture_hand_count(self):
        docs, triplets, vocab, type_map, keys, assignment = _fixture()
        ds = build_gold(triplets, docs, vocab, type_map, keys, assignment)
        rows = counts_table(ds, vocab.names())
        # location: 1 en + 2 es in train; country: 1 train + 1 test.
        assert rows[0] == {
            "relation": "location",
            "train": 3,
            "validation": 0,
            "test": 0,
            "total": 3,
        }
        assert [r["relation"] for r in rows] == ["location", "country", "date of birth"]
        assert rows[1]["train"] == 1 and rows[1]["test"] == 1

    def test_empty_dataset(self):
        assert counts_table(GoldDataset(records={}, counts={}), {}) == []


class TestDistributionReport:
    def test_single_relation_is_hundred(self):
        report = distribution_report({("P17", "en", "train"): 4})
        assert report.by_language == {"en": {"P17": (4, 100.0)}}

    def test_three_to_one(self):
        report = distribution_report(
            {("P17", "en", "train"): 3, ("P276", "en", "test"): 1}
        )
        assert report.by_language["en"]["P17"] == (3, 75.0)
        assert report.by_language["en"]["P276"] == (1, 25.0)

    def test_empty_report(self):
        report = distribution_report({})
        assert report.by_language == {}
        assert report.rollup_pct == {}

    def test_rollup_matches_manual_sum(self):
        docs, triplets, vocab, type_map, keys, assignment = _fixture()
        ds = build_gold(triplets, docs, vocab, type_map, keys, assignment)
        report = distribution_report(ds.counts, rollup=("P276", "P17"))
        # en: P276 1/4, P17 2/4, P569 1/4 -> location-ish pids cover 75%.
        assert report.rollup_pct["en"] == pytest.approx(75.0)
        assert report.rollup_pct["es"] == pytest.approx(100.0)

    def test_rollup_absent_pids_zero(self):
        report = distribution_report({("P17", "en", "train"): 2}, rollup=("P276",))
        assert report.rollup_pct == {"en": 0.0}

    @given(
        st.dictionaries(
            st.tuples(
                st.sampled_from(["P1", "P2", "P3", "P4"]),
                st.sampled_from(["en", "es", "de"]),
                st.sampled_from(SPLITS),
            ),
            st.integers(1, 50),
            min_size=1,
            max_size=20,
        )
    )
    @settings(max_examples=60)
    def test_percentages_sum_to_hundred(self, counts):
        report = distribution_report(counts)
        for lang, rels in report.by_language.items():
            total = sum(pct for _, pct in rels.values())
            assert total == pytest.approx(100.0, abs=1e-6)
            raw = sum(n for n, _ in rels.values())
            assert raw == sum(
                n for (_, lg, _), n in counts.items() if lg == lang
            )

    def test_to_dict_shape(self):
        report = distribution_report({("P17", "en", "train"): 2}, rollup=("P17",))
        d = report.to_dict()
        assert d["by_language"]["en"]["P17"] == {"count": 2, "pct": 100.0}
        assert d["rollup_pct"]["en"] == 100.0
