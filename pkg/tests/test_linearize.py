"""Grammar tests for the seq2seq linearizer.

The two expected target strings below are the contract for the whole grammar
and were written down before the encoder; everything else must fall out of
them plus the round-trip law.
"""
import random

import pytest
from hypothesis import given, settings, strategies as st

from relkit import linearize as lin
from relkit.records import Document, Mention, Triplet

RE_TARGET = (
    "tp_XX<triplet> Can Verboom <loc> Premià de Dalt <loc> "
    "located in the administrative territorial entity <loc> "
    "bé cultural d'interès local <loc> heritage designation"
)

RC_TARGET = "tp_XX<relation> Mumbai Mirror <media> 30 mei 2005 <date> inception"


def _mention(text, surface, kind="entity", entity_id=None, value=None):
    start = text.index(surface)
    return Mention(start, start + len(surface), surface, kind, entity_id, value)


@pytest.fixture
def masia_doc():
    text = (
        "Can Verboom és una masia de Premià de Dalt (Maresme) protegida "
        "com a bé cultural d'interès local."
    )
    doc = Document(
        doc_id="ca:Q11910560",
        page_id="Q11910560",
        lang="ca",
        title="Can Verboom",
        text=text,
        mentions=[
            _mention(text, "Can Verboom", entity_id="Q11910560"),
            _mention(text, "Premià de Dalt", entity_id="Q1407049"),
            _mention(text, "bé cultural d'interès local", entity_id="Q2270178"),
        ],
    )
    doc.validate()
    triplets = [
        Triplet("t1", doc.doc_id, 0, "P131", 1, subj_type="location", obj_type="location"),
        Triplet("t2", doc.doc_id, 0, "P1435", 2, subj_type="location", obj_type="location"),
    ]
    names = {
        "P131": "located in the administrative territorial entity",
        "P1435": "heritage designation",
    }
    return doc, triplets, names


@pytest.fixture
def tabloid_doc():
    text = (
        "Mumbai Mirror is een Engelstalige tabloid, die voor het eerst "
        "verscheen op 30 mei 2005, als zusterkrant van The Times of India."
    )
    doc = Document(
        doc_id="nl:Q6935517",
        page_id="Q6935517",
        lang="nl",
        title="Mumbai Mirror",
        text=text,
        mentions=[
            _mention(text, "Mumbai Mirror", entity_id="Q6935517"),
            _mention(text, "30 mei 2005", kind="date", value="2005-05-30"),
            _mention(text, "The Times of India", entity_id="Q210178"),
        ],
    )
    doc.validate()
    triplet = Triplet("t1", doc.doc_id, 0, "P571", 1, subj_type="media", obj_type="date")
    return doc, triplet, {"P571": "inception"}


class TestEncodeRe:
    def test_expected_target_bytes(self, masia_doc):
        doc, triplets, names = masia_doc
        sample = lin.encode_re(doc, triplets, names)
        assert sample.target == RE_TARGET
        assert sample.mode == lin.RE
        assert sample.lang == "ca"

    def test_input_is_language_token_plus_text(self, masia_doc):
        doc, triplets, names = masia_doc
        sample = lin.encode_re(doc, triplets, names)
        assert sample.input == "ca_XX " + doc.text

    def test_empty_triplet_list(self, masia_doc):
        doc, _, names = masia_doc
        assert lin.encode_re(doc, [], names).target == "tp_XX"

    def test_two_subject_groups(self):
        text = "Alpha beta Gamma delta Epsilon."
        doc = Document(
            "x:1", "1", "en", "Alpha", text,
            [
                _mention(text, "Alpha", entity_id="Q1"),
                _mention(text, "Gamma", entity_id="Q2"),
                _mention(text, "Epsilon", entity_id="Q3"),
            ],
        )
        triplets = [
            # Listed out of order on purpose; the encoder sorts by subject
            # first-mention offset, then object offset.
            Triplet("b", doc.doc_id, 1, "P17", 2, subj_type="person", obj_type="location"),
            Triplet("a", doc.doc_id, 0, "P17", 1, subj_type="location", obj_type="person"),
        ]
        target = lin.encode_re(doc, triplets, {"P17": "country"}).target
        assert target == (
            "tp_XX<triplet> Alpha <loc> Gamma <per> country"
            " <triplet> Gamma <per> Epsilon <loc> country"
        )

    def test_shared_subject_objects_ordered_by_offset(self, masia_doc):
        doc, triplets, names = masia_doc
        flipped = list(reversed(triplets))
        assert lin.encode_re(doc, flipped, names).target == RE_TARGET

    def test_missing_type_falls_back_to_unknown_token(self, masia_doc):
        doc, triplets, names = masia_doc
        bare = [Triplet("t1", doc.doc_id, 0, "P131", 1)]
        target = lin.encode_re(doc, bare, names).target
        assert "<unk>" in target and "<loc>" not in target

    def test_untyped_mode_uses_subj_obj_markers(self, masia_doc):
        doc, triplets, names = masia_doc
        target = lin.encode_re(doc, triplets, names, typed=False).target
        assert target == (
            "tp_XX<triplet> Can Verboom <subj> Premià de Dalt <obj> "
            "located in the administrative territorial entity <subj> "
            "bé cultural d'interès local <obj> heritage designation"
        )

    def test_mention_index_out_of_range_is_encode_error(self, masia_doc):
        doc, _, names = masia_doc
        broken = [Triplet("t", doc.doc_id, 0, "P131", 9)]
        with pytest.raises(lin.EncodeError):
            lin.encode_re(doc, broken, names)


class TestEncodeRc:
    def test_expected_target_bytes(self, tabloid_doc):
        doc, triplet, names = tabloid_doc
        sample = lin.encode_rc(doc, triplet, names)
        assert sample.target == RC_TARGET
        assert sample.mode == lin.RC

    def test_input_marking(self, tabloid_doc):
        doc, triplet, names = tabloid_doc
        sample = lin.encode_rc(doc, triplet, names)
        assert sample.input.startswith(
            "nl_XX # Mumbai Mirror # is een Engelstalige tabloid,"
        )
        assert "op @ 30 mei 2005 @," in sample.input

    def test_marking_preserves_other_characters(self, tabloid_doc):
        doc, triplet, names = tabloid_doc
        marked = lin.encode_rc(doc, triplet, names).input
        body = marked[len("nl_XX ") :]
        assert lin.unmark_rc(body) == doc.text

    def test_subject_at_position_zero(self, tabloid_doc):
        doc, triplet, names = tabloid_doc
        assert lin.encode_rc(doc, triplet, names).input.startswith("nl_XX # Mumbai")

    def test_exactly_one_marked_pair_each(self, tabloid_doc):
        doc, triplet, names = tabloid_doc
        marked = lin.encode_rc(doc, triplet, names).input
        assert marked.count("#") == 2 and marked.count("@") == 2


class TestDecode:
    def test_re_target_decodes_to_both_triplets(self):
        assert lin.decode(RE_TARGET) == [
            ("Can Verboom", "location", "Premià de Dalt", "location",
             "located in the administrative territorial entity"),
            ("Can Verboom", "location", "bé cultural d'interès local", "location",
             "heritage designation"),
        ]

    def test_rc_target_decodes_to_single_triplet(self):
        assert lin.decode(RC_TARGET) == [
            ("Mumbai Mirror", "media", "30 mei 2005", "date", "inception")
        ]

    def test_unknown_type_token_maps_to_unknown(self):
        out = lin.decode("tp_XX<triplet> A <banana> B <loc> country")
        assert out == [("A", "unknown", "B", "location", "country")]

    def test_untyped_decode_returns_none_types(self):
        out = lin.decode("tp_XX<triplet> A <subj> B <obj> country", typed=False)
        assert out == [("A", None, "B", None, "country")]

    def test_empty_and_garbage_inputs(self):
        for junk in ["", "tp_XX", "   ", "no markers at all", "<loc> <loc> <loc>",
                     "<triplet>", "tp_XX<triplet> only a subject"]:
            assert lin.decode(junk) == []

    def test_truncation_parse_count_is_monotone(self):
        counts = [len(lin.decode(RE_TARGET[:i])) for i in range(len(RE_TARGET) + 1)]
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert counts[-1] == 2

    def test_truncation_mid_relation_reports_fragment(self):
        cut = RE_TARGET[: RE_TARGET.index("heritage") + len("herit")]
        out = lin.decode(cut)
        assert out[0] == (
            "Can Verboom", "location", "Premià de Dalt", "location",
            "located in the administrative territorial entity",
        )
        assert out[1][4] == "herit"

    def test_surface_containing_grammar_token_round_trips(self):
        text = "the song <loc> charted in 1999 somewhere"
        doc = Document(
            "x:2", "2", "en", "t", text,
            [
                _mention(text, "the song <loc>", entity_id="Q4"),
                _mention(text, "somewhere", entity_id="Q5"),
            ],
        )
        t = Triplet("t", doc.doc_id, 0, "P276", 1, subj_type="media", obj_type="location")
        sample = lin.encode_re(doc, [t], {"P276": "location"})
        assert lin.decode(sample.target) == [
            ("the song <loc>", "media", "somewhere", "location", "location")
        ]


# Randomized round-trip machinery. Documents are synthesized straight from the
# group structure the grammar serializes, with surfaces drawn to include
# grammar-token lookalikes now and then.

_WORD = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyzàéïöу中日éß'",
    min_size=1,
    max_size=8,
)
_SURFACE = st.one_of(
    st.lists(_WORD, min_size=1, max_size=3).map(" ".join),
    st.just("<loc>"),
    st.just("a <triplet> b"),
    st.just("tp_XX"),
)
_LABELS = st.sampled_from(lin.type_labels())
_RELATION = st.sampled_from(
    ["country", "located in the administrative territorial entity",
     "heritage designation", "member of", "spouse", "part of"]
)
_GROUP = st.tuples(
    _SURFACE, _LABELS,
    st.lists(st.tuples(_SURFACE, _LABELS, _RELATION), min_size=1, max_size=4),
)
GROUPS = st.lists(_GROUP, min_size=0, max_size=5)


def doc_from_groups(groups):
    """Lay the generated surfaces out left to right and build the records."""
    pieces, mentions, triplets = [], [], []
    cursor = 0
    eid = 0

    def push(surface):
        nonlocal cursor, eid
        if pieces:
            cursor += 3  # " ; " separator
        start = cursor
        pieces.append(surface)
        cursor += len(surface)
        eid += 1
        mentions.append(Mention(start, cursor, surface, "entity", f"Q{eid}"))
        return len(mentions) - 1

    expected = []
    for subj_surface, subj_type, objects in groups:
        s_idx = push(subj_surface)
        for obj_surface, obj_type, rel in objects:
            o_idx = push(obj_surface)
            triplets.append(
                Triplet(
                    f"t{len(triplets)}", "d:0", s_idx, rel, o_idx,
                    subj_type=subj_type, obj_type=obj_type,
                )
            )
            expected.append((subj_surface, subj_type, obj_surface, obj_type, rel))
    doc = Document("d:0", "0", "en", "synthetic", " ; ".join(pieces), mentions)
    doc.validate()
    return doc, triplets, expected


@given(GROUPS)
def test_round_trip_identity(groups):
    doc, triplets, expected = doc_from_groups(groups)
    names = {rel: rel for _, _, objs in groups for _, _, rel in objs}
    sample = lin.encode_re(doc, triplets, names)
    assert lin.decode(sample.target) == expected


@given(GROUPS, st.randoms(use_true_random=False))
@settings(max_examples=60)
def test_decode_survives_mutation(groups, rng):
    doc, triplets, _ = doc_from_groups(groups)
    names = {rel: rel for _, _, objs in groups for _, _, rel in objs}
    target = lin.encode_re(doc, triplets, names).target
    chars = list(target)
    for _ in range(rng.randint(0, 6)):
        if not chars:
            break
        op = rng.choice("dis")
        pos = rng.randrange(len(chars))
        if op == "d":
            del chars[pos]
        elif op == "i":
            chars.insert(pos, rng.choice("<> abctp_X​日"))
        else:
            chars[pos] = rng.choice("<> abctp_X​日")
    out = lin.decode("".join(chars))
    assert isinstance(out, list)


class TestRcSampling:
    def _records(self, n=200):
        out = []
        for i in range(n):
            text = f"Subject{i} lives in Object{i}."
            doc = Document(
                f"en:{i}", str(i), "en", f"S{i}", text,
                [
                    _mention(text, f"Subject{i}", entity_id=f"Q{i}a"),
                    _mention(text, f"Object{i}", entity_id=f"Q{i}b"),
                ],
            )
            ts = [
                Triplet("t0", doc.doc_id, 0, "P276", 1,
                        subj_type="person", obj_type="location")
            ]
            out.append((doc, ts))
        return out

    def test_fraction_zero_keeps_everything_re(self):
        recs = self._records()
        modes = [m for _, _, m, _ in lin.sample_rc_fraction(recs, 0.0, seed=7)]
        assert set(modes) == {lin.RE}

    def test_fraction_one_converts_everything_convertible(self):
        recs = self._records()
        modes = [m for _, _, m, _ in lin.sample_rc_fraction(recs, 1.0, seed=7)]
        assert set(modes) == {lin.RC}

    def test_record_without_triplets_stays_re(self):
        doc = Document("en:x", "x", "en", "t", "no links here", [])
        out = list(lin.sample_rc_fraction([(doc, [])], 1.0, seed=7))
        assert out[0][2] == lin.RE

    def test_same_seed_same_selection(self):
        recs = self._records()
        a = [(d.doc_id, m, k) for d, _, m, k in lin.sample_rc_fraction(recs, 0.3, seed=5)]
        b = [(d.doc_id, m, k) for d, _, m, k in lin.sample_rc_fraction(recs, 0.3, seed=5)]
        assert a == b

    def test_different_seed_differs(self):
        recs = self._records()
        a = [m for _, _, m, _ in lin.sample_rc_fraction(recs, 0.3, seed=5)]
        b = [m for _, _, m, _ in lin.sample_rc_fraction(recs, 0.3, seed=6)]
        assert a != b

    def test_fraction_roughly_respected(self):
        recs = self._records(400)
        modes = [m for _, _, m, _ in lin.sample_rc_fraction(recs, 0.25, seed=11)]
        rc = modes.count(lin.RC)
        assert 60 <= rc <= 140  # 100 expected, generous binomial slack
