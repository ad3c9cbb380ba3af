"""Run configuration, loaded from a single JSON file.

Every input path, threshold, and seed lives here so a manifest that echoes
the config is enough to reproduce a run. Relative paths are resolved against
the config file's own directory, which keeps fixture bundles relocatable.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class AnnotationPlan:
    """How silver triplets are sampled and batched for human validation."""

    langs: tuple[str, ...] = ()
    random_sample_size: int = 0
    sample_seed: int = 0
    per_hit: int = 10
    allow_partial: bool = True
    required: int = 3
    quorum: int = 2

    def __post_init__(self):
        if self.per_hit < 1:
            raise ValueError("per_hit must be at least 1")
        if not 1 <= self.quorum <= self.required:
            raise ValueError(f"quorum {self.quorum} outside 1..required={self.required}")


@dataclass(frozen=True)
class PipelineConfig:
    corpus: str
    title_maps: dict[str, str]
    triple_store: str
    vocab: str
    out_dir: str
    interlanguage: str | None = None
    entity_types: str | None = None
    judgments: str | None = None
    nli_scorer: str | None = None
    critic_scorer: str | None = None
    nli_threshold: float = 0.1
    critic_threshold: float = 0.5
    top_k: int = 400
    per_language_top_k: bool = False
    gold_top_k: int = 32
    split_ratios: tuple[float, ...] = (0.8, 0.1, 0.1)
    split_seed: int = 0
    export_annotation: bool = False
    annotation: AnnotationPlan = field(default_factory=AnnotationPlan)
    location_rollup: tuple[str, ...] = ()

    def __post_init__(self):
        # Thresholds above 1 are legal: they reject everything, which the
        # trivial-filter behavior relies on. Negative ones are nonsense.
        if self.nli_threshold < 0 or self.critic_threshold < 0:
            raise ValueError("score thresholds must be non-negative")
        if self.top_k < 1 or self.gold_top_k < 1:
            raise ValueError("top_k and gold_top_k must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["split_ratios"] = list(self.split_ratios)
        d["location_rollup"] = list(self.location_rollup)
        d["annotation"]["langs"] = list(self.annotation.langs)
        return d

    @classmethod
    def from_dict(cls, raw: dict, base: Path | None = None) -> "PipelineConfig":
        raw = dict(raw)

        def path(value):
            if value is None or base is None:
                return value
            return str(base / value) if not Path(value).is_absolute() else value

        def scorer(value):
            if value is None or not value.startswith("mock:"):
                return value
            return "mock:" + path(value[len("mock:"):])

        plan = raw.pop("annotation", {})
        if isinstance(plan, dict):
            plan = AnnotationPlan(
                **{**plan, "langs": tuple(plan.get("langs", ()))}
            )
        return cls(
            corpus=path(raw["corpus"]),
            title_maps={lang: path(p) for lang, p in raw["title_maps"].items()},
            triple_store=path(raw["triple_store"]),
            vocab=path(raw["vocab"]),
            out_dir=path(raw["out_dir"]),
            interlanguage=path(raw.get("interlanguage")),
            entity_types=path(raw.get("entity_types")),
            judgments=path(raw.get("judgments")),
            nli_scorer=scorer(raw.get("nli_scorer")),
            critic_scorer=scorer(raw.get("critic_scorer")),
            nli_threshold=float(raw.get("nli_threshold", 0.1)),
            critic_threshold=float(raw.get("critic_threshold", 0.5)),
            top_k=int(raw.get("top_k", 400)),
            per_language_top_k=bool(raw.get("per_language_top_k", False)),
            gold_top_k=int(raw.get("gold_top_k", 32)),
            split_ratios=tuple(raw.get("split_ratios", (0.8, 0.1, 0.1))),
            split_seed=int(raw.get("split_seed", 0)),
            export_annotation=bool(raw.get("export_annotation", False)),
            annotation=plan,
            location_rollup=tuple(raw.get("location_rollup", ())),
        )

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        p = Path(path)
        return cls.from_dict(json.loads(p.read_text(encoding="utf-8")), base=p.parent)
