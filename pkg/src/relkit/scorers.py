"""Pluggable pair scorers: an HTTP client and a deterministic mock.

Wire protocol, shared by the entailment and critic backends (they differ only
in endpoint path):

    POST <endpoint>  {"pairs": [[premise, hypothesis], ...]}
    -> 200           {"scores": [p, ...]}

one probability in [0, 1] per pair, in request order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx

from .fileio import read_jsonl


class ScorerError(RuntimeError):
    """The scoring backend failed or answered with the wrong shape."""


@dataclass(frozen=True)
class ScoreItem:
    premise: str
    hypothesis: str
    key: tuple[str, str] | None = None  # (doc_id, triplet_id) when known


class PairScorer(Protocol):
    def score(self, items: Sequence[ScoreItem]) -> list[float]: ...


def _chunks(seq: Sequence, size: int):
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


class HttpScorer:
    """Batched client for an external scoring service."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        batch_size: int = 32,
        client: httpx.Client | None = None,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        self.endpoint = endpoint
        self.batch_size = batch_size
        self._client = client or httpx.Client(timeout=timeout)

    def score(self, items: Sequence[ScoreItem]) -> list[float]:
        scores: list[float] = []
        for chunk in _chunks(items, self.batch_size):
            payload = {"pairs": [[it.premise, it.hypothesis] for it in chunk]}
            try:
                resp = self._client.post(self.endpoint, json=payload)
                resp.raise_for_status()
                body = resp.json()
            except httpx.HTTPError as exc:
                raise ScorerError(f"scoring request failed: {exc}") from exc
            got = body.get("scores") if isinstance(body, dict) else None
            if not isinstance(got, list) or len(got) != len(chunk):
                raise ScorerError(
                    f"backend returned {0 if not isinstance(got, list) else len(got)} "
                    f"scores for {len(chunk)} pairs"
                )
            scores.extend(float(s) for s in got)
        return scores


class MockScorer:
    """Deterministic rule-table scorer for tests and desk runs.

    Rules are keyed by (doc_id, triplet_id), matched against each item's key;
    (premise, hypothesis) rules work as well. Anything unmatched gets the
    default score. Keys listed in ``fail_on`` raise ScorerError to exercise
    the error paths.
    """

    def __init__(self, rules: dict | None = None, default: float = 0.5, fail_on=()):
        self.rules = dict(rules or {})
        self.default = default
        self.fail_on = set(fail_on)

    def score(self, items: Sequence[ScoreItem]) -> list[float]:
        out = []
        for it in items:
            pair = (it.premise, it.hypothesis)
            if it.key in self.fail_on or pair in self.fail_on:
                raise ScorerError(f"injected failure for {it.key or pair}")
            if it.key is not None and it.key in self.rules:
                out.append(self.rules[it.key])
            else:
                out.append(self.rules.get(pair, self.default))
        return out

    @classmethod
    def from_file(cls, path) -> "MockScorer":
        """Load rules from JSONL: one {"default": p} line and/or rule lines
        with either doc_id+triplet_id or premise+hypothesis plus "score"."""
        rules: dict = {}
        default = 0.5
        for rec in read_jsonl(path):
            if "default" in rec:
                default = float(rec["default"])
                continue
            if "doc_id" in rec:
                rules[(rec["doc_id"], rec["triplet_id"])] = float(rec["score"])
            else:
                rules[(rec["premise"], rec["hypothesis"])] = float(rec["score"])
        return cls(rules, default)


def make_scorer(spec: str, timeout: float = 30.0, batch_size: int = 32) -> PairScorer:
    """Build a scorer from a CLI-style spec: an http(s) URL or 'mock:<path>'."""
    if spec.startswith(("http://", "https://")):
        return HttpScorer(spec, timeout=timeout, batch_size=batch_size)
    if spec.startswith("mock:"):
        return MockScorer.from_file(spec[len("mock:"):])
    raise ValueError(f"unrecognized scorer spec {spec!r}")


def dump_mock_rules(path, rules: dict, default: float = 0.5, keyed_by: str = "id") -> None:
    """Write a MockScorer rule file (inverse of MockScorer.from_file).

    ``keyed_by`` says how to interpret the rule keys: "id" for
    (doc_id, triplet_id) tuples, "pair" for (premise, hypothesis).
    """
    if keyed_by not in ("id", "pair"):
        raise ValueError(f"keyed_by must be 'id' or 'pair', not {keyed_by!r}")
    fields = ("doc_id", "triplet_id") if keyed_by == "id" else ("premise", "hypothesis")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"default": default}) + "\n")
        for (a, b), score in rules.items():
            rec = {fields[0]: a, fields[1]: b, "score": score}
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
