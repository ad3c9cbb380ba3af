"""Leasing, idempotent judgment intake, and the HTTP surface around them."""
import pytest
from fastapi.testclient import TestClient

from relkit.annotation import Hit, HitItem, JudgmentLog
from relkit.annotation_service import AnnotationService, load_descriptions, make_app


class Clock:
    def __init__(self, now=1000.0):
        self.now = now

    def __call__(self):
        return self.now


def _hit(hit_id, lang, tids, pid="P17"):
    items = tuple(
        HitItem(tid, f"text of {tid}", 0, 4, 5, 7, pid) for tid in tids
    )
    return Hit(hit_id, lang, items)


def _hits():
    return [
        _hit("en-0000", "en", ["t0", "t1"]),
        _hit("en-0001", "en", ["t2", "t3"], pid="P31"),
        _hit("de-0000", "de", ["t4", "t5"]),
    ]


def _service(tmp_path, **kw):
    clock = kw.pop("clock", Clock())
    kw.setdefault("qualified", ["a", "b", "c"])
    kw.setdefault("required", 2)
    service = AnnotationService(
        _hits(),
        JudgmentLog(tmp_path / "judgments.jsonl"),
        names={"P17": "country", "P31": "instance of"},
        clock=clock,
        **kw,
    )
    return service, clock


def _judge(service, annotator, tids, verdict=True):
    for tid in tids:
        service.submit(
            {"triplet_id": tid, "annotator_id": annotator, "verdict": verdict}
        )


class TestLeasing:
    def test_distinct_annotators_get_distinct_hits(self, tmp_path):
        service, _ = _service(tmp_path)
        assert service.next_hit("en", "a").hit_id == "en-0000"
        assert service.next_hit("en", "b").hit_id == "en-0001"
        assert service.next_hit("en", "c") is None

    def test_own_lease_is_returned_again(self, tmp_path):
        service, _ = _service(tmp_path)
        assert service.next_hit("en", "a").hit_id == "en-0000"
        assert service.next_hit("en", "a").hit_id == "en-0000"

    def test_expired_lease_is_reassigned(self, tmp_path):
        service, clock = _service(tmp_path, lease_seconds=60.0)
        service.next_hit("en", "a")
        clock.now += 61.0
        assert service.next_hit("en", "b").hit_id == "en-0000"

    def test_language_isolation(self, tmp_path):
        service, _ = _service(tmp_path)
        assert service.next_hit("de", "a").hit_id == "de-0000"
        assert service.next_hit("en", "a").hit_id == "en-0000"

    def test_unqualified_annotator_rejected(self, tmp_path):
        service, _ = _service(tmp_path)
        with pytest.raises(PermissionError):
            service.next_hit("en", "mallory")
        service.qualify("mallory")
        assert service.next_hit("en", "mallory") is not None

    def test_finished_hit_releases_lease(self, tmp_path):
        service, _ = _service(tmp_path)
        service.next_hit("en", "a")
        _judge(service, "a", ["t0", "t1"])
        assert service.next_hit("en", "b").hit_id == "en-0000"

    def test_never_the_same_triplet_twice(self, tmp_path):
        service, _ = _service(tmp_path)
        _judge(service, "a", ["t0", "t1"])
        assert service.next_hit("en", "a").hit_id == "en-0001"

    def test_fully_judged_hit_not_served(self, tmp_path):
        service, _ = _service(tmp_path)
        _judge(service, "a", ["t0", "t1"])
        _judge(service, "b", ["t0", "t1"])
        assert service.next_hit("en", "c").hit_id == "en-0001"


class TestSubmit:
    def test_accepted_and_logged(self, tmp_path):
        service, _ = _service(tmp_path)
        out = service.submit({"triplet_id": "t0", "annotator_id": "a", "verdict": True})
        assert out == {"accepted": True, "duplicate": False}
        assert len(service.log.read()) == 1

    def test_duplicate_is_a_no_op(self, tmp_path):
        service, _ = _service(tmp_path)
        _judge(service, "a", ["t0"])
        out = service.submit({"triplet_id": "t0", "annotator_id": "a", "verdict": False})
        assert out == {"accepted": False, "duplicate": True}
        assert len(service.log.read()) == 1
        assert service.progress("en")["judgments"] == 1

    def test_unknown_triplet_rejected(self, tmp_path):
        service, _ = _service(tmp_path)
        with pytest.raises(KeyError):
            service.submit({"triplet_id": "t99", "annotator_id": "a", "verdict": True})

    def test_unqualified_rejected(self, tmp_path):
        service, _ = _service(tmp_path)
        with pytest.raises(PermissionError):
            service.submit({"triplet_id": "t0", "annotator_id": "z", "verdict": True})

    def test_server_stamps_time(self, tmp_path):
        service, clock = _service(tmp_path)
        clock.now = 1234.5
        _judge(service, "a", ["t0"])
        assert service.log.read()[0].submitted_at == 1234.5

    def test_client_timestamp_kept(self, tmp_path):
        service, _ = _service(tmp_path)
        service.submit(
            {"triplet_id": "t0", "annotator_id": "a", "verdict": True, "submitted_at": 7.0}
        )
        assert service.log.read()[0].submitted_at == 7.0


class TestRebuild:
    def test_state_survives_restart(self, tmp_path):
        service, _ = _service(tmp_path)
        _judge(service, "a", ["t0", "t1"])
        _judge(service, "b", ["t0"])

        reborn, _ = _service(tmp_path)
        assert reborn.progress("en") == service.progress("en")
        out = reborn.submit({"triplet_id": "t0", "annotator_id": "a", "verdict": False})
        assert out["duplicate"] is True
        assert reborn.next_hit("en", "a").hit_id == "en-0001"


class TestProgressAndReport:
    def test_progress_hand_count(self, tmp_path):
        service, _ = _service(tmp_path)
        _judge(service, "a", ["t0"])
        _judge(service, "b", ["t0"])
        _judge(service, "a", ["t2"])
        p = service.progress("en")
        assert p == {
            "lang": "en",
            "hits_total": 2,
            "hits_complete": 0,
            "triplets_total": 4,
            "triplets_done": 1,
            "triplets_pending": 1,
            "triplets_untouched": 2,
            "judgments": 3,
        }

    def test_complete_hit_counted(self, tmp_path):
        service, _ = _service(tmp_path)
        for who in ("a", "b"):
            _judge(service, who, ["t0", "t1"])
        assert service.progress("en")["hits_complete"] == 1

    def test_report_hand_case(self, tmp_path):
        service, _ = _service(tmp_path)
        _judge(service, "a", ["t0"], verdict=True)
        _judge(service, "b", ["t0"], verdict=True)
        _judge(service, "a", ["t1"], verdict=True)
        _judge(service, "b", ["t1"], verdict=False)
        report = service.report("en")
        # Units [T,T] and [T,F]: D_o = 0.5, D_e = 2*3*1/(4*3) = 0.5.
        assert report.alpha == pytest.approx(0.0, abs=1e-9)
        assert report.n_annotators == 2
        assert report.filtered_pct == pytest.approx(50.0)

    def test_report_without_judgments(self, tmp_path):
        service, _ = _service(tmp_path)
        report = service.report("de")
        assert report.alpha is None
        assert report.filtered_pct is None


class TestRelationInfo:
    def test_descriptions_for_served_pids(self, tmp_path):
        service, _ = _service(tmp_path)
        info = service.relation_info("en")
        assert set(info) == {"P17", "P31"}
        assert info["P17"]["name"] == "country"
        assert "sovereign state" in info["P17"]["description"]

    def test_unlocalized_language_falls_back(self):
        assert load_descriptions("xx") == load_descriptions("en")
        assert "country" in load_descriptions("en")


class TestHttpApi:
    def client(self, tmp_path):
        service, clock = _service(tmp_path)
        return TestClient(make_app(service)), service, clock

    def test_hit_fetch_shape(self, tmp_path):
        client, _, _ = self.client(tmp_path)
        resp = client.get("/hits/next", params={"lang": "en", "annotator": "a"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["hit_id"] == "en-0000"
        assert body["items"][0]["subject"] == {"start": 0, "end": 4}
        assert body["items"][0]["relation"] == "P17"

    def test_hit_fetch_unqualified(self, tmp_path):
        client, _, _ = self.client(tmp_path)
        resp = client.get("/hits/next", params={"lang": "en", "annotator": "zz"})
        assert resp.status_code == 403

    def test_hit_fetch_exhausted(self, tmp_path):
        client, _, _ = self.client(tmp_path)
        client.get("/hits/next", params={"lang": "en", "annotator": "a"})
        client.get("/hits/next", params={"lang": "en", "annotator": "b"})
        resp = client.get("/hits/next", params={"lang": "en", "annotator": "c"})
        assert resp.status_code == 404

    def test_judgment_cycle(self, tmp_path):
        client, service, _ = self.client(tmp_path)
        hit = client.get(
            "/hits/next", params={"lang": "en", "annotator": "a"}
        ).json()
        for item in hit["items"]:
            resp = client.post(
                "/judgments",
                json={
                    "triplet_id": item["triplet_id"],
                    "annotator_id": "a",
                    "verdict": True,
                },
            )
            assert resp.status_code == 200
            assert resp.json()["accepted"] is True
        follow_up = client.get("/hits/next", params={"lang": "en", "annotator": "a"})
        assert follow_up.json()["hit_id"] == "en-0001"
        assert len(service.log.read()) == 2

    def test_duplicate_judgment_count_unchanged(self, tmp_path):
        client, service, _ = self.client(tmp_path)
        body = {"triplet_id": "t0", "annotator_id": "a", "verdict": True}
        assert client.post("/judgments", json=body).json()["accepted"] is True
        again = client.post("/judgments", json=body)
        assert again.status_code == 200
        assert again.json()["duplicate"] is True
        assert len(service.log.read()) == 1

    def test_judgment_missing_field(self, tmp_path):
        client, _, _ = self.client(tmp_path)
        resp = client.post("/judgments", json={"triplet_id": "t0", "verdict": True})
        assert resp.status_code == 422

    def test_judgment_unknown_triplet(self, tmp_path):
        client, _, _ = self.client(tmp_path)
        body = {"triplet_id": "t99", "annotator_id": "a", "verdict": True}
        assert client.post("/judgments", json=body).status_code == 404

    def test_progress_endpoint(self, tmp_path):
        client, _, _ = self.client(tmp_path)
        body = {"triplet_id": "t0", "annotator_id": "a", "verdict": True}
        client.post("/judgments", json=body)
        resp = client.get("/progress", params={"lang": "en"})
        assert resp.status_code == 200
        assert resp.json()["judgments"] == 1

    def test_report_endpoint(self, tmp_path):
        client, _, _ = self.client(tmp_path)
        for who in ("a", "b"):
            client.post(
                "/judgments",
                json={"triplet_id": "t0", "annotator_id": who, "verdict": True},
            )
        resp = client.get("/report", params={"lang": "en"})
        assert resp.status_code == 200
        assert resp.json()["filtered_pct"] == 0.0

    def test_relations_endpoint(self, tmp_path):
        client, _, _ = self.client(tmp_path)
        resp = client.get("/relations", params={"lang": "en"})
        assert resp.status_code == 200
        assert resp.json()["P31"]["name"] == "instance of"
