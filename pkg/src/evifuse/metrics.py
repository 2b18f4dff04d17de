"""Exact-match span precision/recall/F1 and the per-epoch metrics record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .tags import CATEGORIES, TAGS, split_tag

SCHEMA_VERSION = 1


def _json_float(x: float) -> float | None:
    # Strict JSON has no NaN; an undefined mean is written as null.
    return None if math.isnan(x) else x


def _from_json_float(x) -> float:
    return float("nan") if x is None else float(x)


def extract_spans(tag_ids: Sequence[int]) -> set[tuple[int, int, str]]:
    """Spans as (start, end_exclusive, category).

    A span opens at B-X, or at a stray I-X, and runs through the following
    I-X tokens of the same category.
    """
    spans = set()
    start, cat = None, None
    for pos, t in enumerate(list(tag_ids) + [0]):
        prefix, c = split_tag(TAGS[t])
        if cat is not None and not (prefix == "I" and c == cat):
            spans.add((start, pos, cat))
            start, cat = None, None
        if prefix in ("B", "I") and cat is None:
            start, cat = pos, c
    return spans


def prf(correct: int, predicted: int, gold: int) -> tuple[float, float, float]:
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


@dataclass
class CategoryScore:
    correct: int = 0
    predicted: int = 0
    gold: int = 0

    @property
    def precision(self) -> float:
        return prf(self.correct, self.predicted, self.gold)[0]

    @property
    def recall(self) -> float:
        return prf(self.correct, self.predicted, self.gold)[1]

    @property
    def f1(self) -> float:
        return prf(self.correct, self.predicted, self.gold)[2]

    def to_dict(self) -> dict:
        p, r, f = prf(self.correct, self.predicted, self.gold)
        return {"correct": self.correct, "predicted": self.predicted, "gold": self.gold,
                "precision": p, "recall": r, "f1": f}


@dataclass
class SpanScores:
    per_category: dict[str, CategoryScore]
    overall: CategoryScore

    def to_dict(self) -> dict:
        d = {c: s.to_dict() for c, s in self.per_category.items()}
        d["overall"] = self.overall.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpanScores":
        def score(x):
            return CategoryScore(x["correct"], x["predicted"], x["gold"])
        return cls({c: score(d[c]) for c in CATEGORIES}, score(d["overall"]))


def span_metrics(gold: Sequence[Sequence[int]], predicted: Sequence[Sequence[int]]) -> SpanScores:
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold sequences but {len(predicted)} predicted")
    per = {c: CategoryScore() for c in CATEGORIES}
    for i, (g, p) in enumerate(zip(gold, predicted)):
        if len(g) != len(p):
            raise ValueError(f"sequence {i}: gold length {len(g)} != predicted length {len(p)}")
        gs, ps = extract_spans(g), extract_spans(p)
        for s in gs:
            per[s[2]].gold += 1
        for s in ps:
            per[s[2]].predicted += 1
        for s in gs & ps:
            per[s[2]].correct += 1
    overall = CategoryScore(
        sum(s.correct for s in per.values()),
        sum(s.predicted for s in per.values()),
        sum(s.gold for s in per.values()),
    )
    return SpanScores(per, overall)


@dataclass
class MetricsRecord:
    epoch: int
    split: str
    scores: SpanScores
    uncertainty_var_mu: float
    uncertainty_e_sigma2: float
    losses: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "epoch": self.epoch,
            "split": self.split,
            "metrics": self.scores.to_dict(),
            "uncertainty": {"var_mu": _json_float(self.uncertainty_var_mu),
                            "e_sigma2": _json_float(self.uncertainty_e_sigma2)},
            "loss": {k: _json_float(v) for k, v in self.losses.items()},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MetricsRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported metrics schema version {d.get('schema_version')!r}")
        return cls(
            epoch=int(d["epoch"]),
            split=d["split"],
            scores=SpanScores.from_dict(d["metrics"]),
            uncertainty_var_mu=_from_json_float(d["uncertainty"]["var_mu"]),
            uncertainty_e_sigma2=_from_json_float(d["uncertainty"]["e_sigma2"]),
            losses={k: _from_json_float(v) for k, v in d.get("loss", {}).items()},
        )

    def uncertainty(self, gating: str) -> float:
        return self.uncertainty_var_mu if gating == "var_mu" else self.uncertainty_e_sigma2
