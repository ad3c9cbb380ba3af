"""Self-hosted HTTP service that hands HITs to annotators and takes judgments.

The in-memory state (who judged what, which HITs are leased) is a pure
function of the hit list and the append-only judgment log, so restarting the
process rebuilds it losslessly. Leases expire rather than block: an annotator
who walks away mid-HIT does not strand it, and the aggregation layer already
tolerates the stray duplicate judgments an expired lease can produce.
"""
from __future__ import annotations

import json
import time
from functools import lru_cache
from importlib import resources
from typing import Callable, Iterable, Mapping, Sequence

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .annotation import (
    PENDING,
    AgreementReport,
    Hit,
    Judgment,
    JudgmentLog,
    aggregate,
    build_report,
)
from .records import GOLD_FALSE, GOLD_TRUE


@lru_cache(maxsize=1)
def _description_file() -> dict:
    with resources.files("relkit.data").joinpath("relation_descriptions.json").open(
        encoding="utf-8"
    ) as fh:
        return json.load(fh)


def load_descriptions(lang: str) -> dict[str, str]:
    """Relation glosses for hover help, keyed by English relation name.

    Languages without their own section fall back to English."""
    data = _description_file()
    return data.get(lang) or data["en"]


class AnnotationService:
    def __init__(
        self,
        hits: Sequence[Hit],
        log: JudgmentLog,
        names: Mapping[str, str] | None = None,
        qualified: Iterable[str] = (),
        required: int = 3,
        quorum: int = 2,
        lease_seconds: float = 3600.0,
        clock: Callable[[], float] = time.time,
    ):
        self.hits = {h.hit_id: h for h in hits}
        self.log = log
        self.names = dict(names or {})
        self.qualified = set(qualified)
        self.required = required
        self.quorum = quorum
        self.lease_seconds = lease_seconds
        self.clock = clock

        self._hit_of_triplet: dict[str, str] = {}
        for h in hits:
            for it in h.items:
                prev = self._hit_of_triplet.setdefault(it.triplet_id, h.hit_id)
                if prev != h.hit_id:
                    raise ValueError(f"triplet {it.triplet_id} appears in {prev} and {h.hit_id}")

        self._leases: dict[str, tuple[str, float]] = {}
        self._judgments: list[Judgment] = [
            j for j in log.read() if j.triplet_id in self._hit_of_triplet
        ]
        self._seen: set[tuple[str, str]] = set()
        self._annotators: dict[str, set[str]] = {}
        for j in self._judgments:
            self._seen.add((j.triplet_id, j.annotator_id))
            self._annotators.setdefault(j.triplet_id, set()).add(j.annotator_id)

    def qualify(self, annotator_id: str) -> None:
        self.qualified.add(annotator_id)

    def _check_qualified(self, annotator_id: str) -> None:
        if annotator_id not in self.qualified:
            raise PermissionError(f"annotator {annotator_id!r} is not qualified")

    def _complete(self, hit: Hit) -> bool:
        return all(
            len(self._annotators.get(it.triplet_id, ())) >= self.required
            for it in hit.items
        )

    def next_hit(self, lang: str, annotator_id: str) -> Hit | None:
        """Lease the first open HIT of this language to the annotator.

        Skips HITs that already have enough annotators, HITs containing any
        triplet this annotator judged before, and HITs leased to someone else
        whose lease has not yet expired."""
        self._check_qualified(annotator_id)
        now = self.clock()
        for hit_id in sorted(self.hits):
            hit = self.hits[hit_id]
            if hit.lang != lang or self._complete(hit):
                continue
            if any((it.triplet_id, annotator_id) in self._seen for it in hit.items):
                continue
            lease = self._leases.get(hit_id)
            if lease and lease[0] != annotator_id and lease[1] > now:
                continue
            self._leases[hit_id] = (annotator_id, now + self.lease_seconds)
            return hit
        return None

    def submit(self, record: Mapping) -> dict:
        """Record one judgment; duplicates by (triplet, annotator) are no-ops."""
        annotator_id = record["annotator_id"]
        self._check_qualified(annotator_id)
        triplet_id = record["triplet_id"]
        if triplet_id not in self._hit_of_triplet:
            raise KeyError(triplet_id)
        if (triplet_id, annotator_id) in self._seen:
            return {"accepted": False, "duplicate": True}

        stamped = record.get("submitted_at")
        judgment = Judgment(
            triplet_id=triplet_id,
            annotator_id=annotator_id,
            verdict=bool(record["verdict"]),
            submitted_at=float(stamped) if stamped is not None else self.clock(),
        )
        self.log.append(judgment)
        self._judgments.append(judgment)
        self._seen.add((triplet_id, annotator_id))
        self._annotators.setdefault(triplet_id, set()).add(annotator_id)

        hit_id = self._hit_of_triplet[triplet_id]
        lease = self._leases.get(hit_id)
        if lease and lease[0] == annotator_id:
            hit = self.hits[hit_id]
            if all((it.triplet_id, annotator_id) in self._seen for it in hit.items):
                del self._leases[hit_id]
        return {"accepted": True, "duplicate": False}

    def _judgments_for(self, lang: str) -> list[Judgment]:
        return [
            j
            for j in self._judgments
            if self.hits[self._hit_of_triplet[j.triplet_id]].lang == lang
        ]

    def progress(self, lang: str) -> dict:
        hits = [h for h in self.hits.values() if h.lang == lang]
        triplet_ids = {it.triplet_id for h in hits for it in h.items}
        judgments = self._judgments_for(lang)
        verdicts = aggregate(judgments, self.required, self.quorum)
        return {
            "lang": lang,
            "hits_total": len(hits),
            "hits_complete": sum(1 for h in hits if self._complete(h)),
            "triplets_total": len(triplet_ids),
            "triplets_done": sum(
                1 for v in verdicts.values() if v in (GOLD_TRUE, GOLD_FALSE)
            ),
            "triplets_pending": sum(1 for v in verdicts.values() if v == PENDING),
            "triplets_untouched": len(triplet_ids) - len(verdicts),
            "judgments": len(judgments),
        }

    def report(self, lang: str) -> AgreementReport:
        judgments = self._judgments_for(lang)
        verdicts = aggregate(judgments, self.required, self.quorum)
        return build_report(lang, judgments, verdicts)

    def relation_info(self, lang: str) -> dict[str, dict[str, str]]:
        """Name and hover description for every relation present in the HITs."""
        glosses = load_descriptions(lang)
        pids = sorted({it.pid for h in self.hits.values() for it in h.items})
        out = {}
        for pid in pids:
            name = self.names.get(pid, pid)
            out[pid] = {"name": name, "description": glosses.get(name, "")}
        return out


class JudgmentIn(BaseModel):
    triplet_id: str
    annotator_id: str
    verdict: bool
    submitted_at: float | None = None


def make_app(service: AnnotationService) -> FastAPI:
    app = FastAPI(title="triplet validation")

    @app.get("/hits/next")
    def next_hit(lang: str, annotator: str) -> dict:
        try:
            hit = service.next_hit(lang, annotator)
        except PermissionError as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        if hit is None:
            raise HTTPException(status_code=404, detail=f"no open hits for {lang!r}")
        return hit.to_dict()

    @app.post("/judgments")
    def submit(judgment: JudgmentIn) -> dict:
        try:
            return service.submit(judgment.model_dump())
        except PermissionError as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown triplet {exc}")

    @app.get("/progress")
    def progress(lang: str) -> dict:
        return service.progress(lang)

    @app.get("/report")
    def report(lang: str) -> dict:
        return service.report(lang).to_dict()

    @app.get("/relations")
    def relations(lang: str = "en") -> dict:
        return service.relation_info(lang)

    return app
