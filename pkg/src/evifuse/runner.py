"""Orchestration behind the command line: load data, train, evaluate,
sweep λ, and summarize metrics files.

Output formats are JSON lines for metrics, ``epoch value`` lines for
uncertainty curves and fixed-width text for tables.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import RunConfig
from .data import SPLITS, Dataset, attach_features, generate_splits, read_conll, read_features, write_conll, write_features
from .errors import DataError
from .metrics import MetricsRecord, SpanScores
from .tagger import Tagger, TrainResult, encode, evaluate, load_checkpoint, save_checkpoint, train

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (0.01, 0.1, 1.0, 10.0)
METRICS_FILE = "metrics.jsonl"
CHECKPOINT_FILE = "model.ckpt"
CONFIG_FILE = "run.cfg"


# -- data ---------------------------------------------------------------------


def load_datasets(cfg: RunConfig) -> dict[str, Dataset]:
    """Train/dev/test splits from the synthetic generator or from files.

    Missing dev or test files yield empty splits.
    """
    if cfg.synth is not None:
        return generate_splits(cfg.synth)
    out = {}
    for split in SPLITS:
        path = cfg.paths[split]
        data = read_conll(path, vocab_size=cfg.values["vocab_size"]) if path else []
        for modality, fpath in cfg.features[split]:
            if not path:
                raise DataError(f"features given for {split} but no {split} data file")
            feats = read_features(fpath, modality=modality, lengths=[len(s) for s in data])
            attach_features(data, feats)
        out[split] = data
    if not out["train"]:
        raise DataError(f"training file {cfg.paths['train']} holds no sequences")
    return out


def write_datasets(splits: dict[str, Dataset], out: Path) -> list[Path]:
    """CoNLL files plus one EVIFEAT file per split and modality."""
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for split, data in splits.items():
        path = out / f"{split}.conll"
        write_conll(path, data)
        written.append(path)
        modalities = sorted(data[0].features) if data else []
        for m in modalities:
            fpath = out / f"{split}.{m}.evifeat"
            write_features(fpath, [seq.features[m] for seq in data])
            written.append(fpath)
    return written


# -- train / eval -------------------------------------------------------------


@dataclass
class RunOutcome:
    result: TrainResult
    test_scores: SpanScores
    test_uncertainty: dict[str, float]
    out: Path


def _test_record(epoch: int, scores: SpanScores, unc: dict[str, float]) -> MetricsRecord:
    return MetricsRecord(epoch, "test", scores, unc["var_mu"], unc["e_sigma2"])


def _dumps(record: MetricsRecord) -> str:
    return json.dumps(record.to_json_dict(), sort_keys=True, allow_nan=False)


def run_train(cfg: RunConfig, out: Path | None = None, splits: dict[str, Dataset] | None = None) -> RunOutcome:
    """Train, then write ``run.cfg``, ``metrics.jsonl`` and ``model.ckpt``.

    ``metrics.jsonl`` holds one dev record per epoch followed by one test
    record for the returned parameters.  Existing files are overwritten.
    """
    out = Path(out if out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    splits = splits if splits is not None else load_datasets(cfg)
    config_text = cfg.to_text()
    (out / CONFIG_FILE).write_text(config_text, encoding="utf-8")
    lines = []
    result = train(splits["train"], cfg.train, dev=splits.get("dev") or None,
                   vocab_size=cfg.values["vocab_size"], on_epoch=lambda r: lines.append(_dumps(r)))
    test = splits.get("test") or []
    scores, unc = evaluate(result.tagger, encode(test, result.tagger.spec))
    lines.append(_dumps(_test_record(result.best_epoch, scores, unc)))
    (out / METRICS_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")
    save_checkpoint(out / CHECKPOINT_FILE, result.tagger, cfg.seed, cfg.digest_text())
    log.info("test F1 %.4f (epoch %d), outputs in %s", scores.overall.f1, result.best_epoch, out)
    return RunOutcome(result, scores, unc, out)


def run_eval(checkpoint: Path, data: Dataset) -> tuple[SpanScores, dict[str, float], Tagger]:
    tagger, _ = load_checkpoint(checkpoint)
    scores, unc = evaluate(tagger, encode(data, tagger.spec))
    return scores, unc, tagger


# -- tables -------------------------------------------------------------------


def _fmt(x: float) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else f"{x:.4f}"


def format_table(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """Fixed-width, right-aligned columns with a dashed rule under the header."""
    cells = [[str(h) for h in header]] + [[_fmt(v) if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def scores_table(scores: SpanScores) -> str:
    rows = [(name, s.precision, s.recall, s.f1, s.correct, s.predicted, s.gold)
            for name, s in list(scores.per_category.items()) + [("overall", scores.overall)]]
    return format_table(("category", "P", "R", "F1", "correct", "predicted", "gold"), rows)


# -- sweep --------------------------------------------------------------------


@dataclass
class SweepRow:
    label: str
    lam: float | None
    scores: SpanScores


def run_sweep(cfg: RunConfig, lambdas: Sequence[float] = DEFAULT_LAMBDAS, out: Path | None = None) -> list[SweepRow]:
    """One run per λ plus a baseline with the evidential loss switched off,
    all on the same data and seed.  Writes ``sweep.txt``."""
    if not lambdas:
        raise ValueError("need at least one lambda")
    out = Path(out if out is not None else cfg.out)
    splits = load_datasets(cfg)
    rows = []
    for lam in lambdas:
        sub = cfg.with_overrides({"lambda": float(lam), "loss.evidential": True})
        outcome = run_train(sub, out / f"lambda_{lam:g}", splits)
        rows.append(SweepRow(f"{lam:g}", float(lam), outcome.test_scores))
    base = cfg.with_overrides({"loss.evidential": False})
    outcome = run_train(base, out / "baseline", splits)
    rows.append(SweepRow("baseline", None, outcome.test_scores))
    (out / "sweep.txt").write_text(sweep_table(rows), encoding="utf-8")
    return rows


def sweep_table(rows: Sequence[SweepRow]) -> str:
    return format_table(
        ("lambda", "P", "R", "F1"),
        [(r.label, r.scores.overall.precision, r.scores.overall.recall, r.scores.overall.f1) for r in rows],
    )


# -- report -------------------------------------------------------------------


def read_metrics(path: Path) -> list[MetricsRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read metrics file {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(MetricsRecord.from_json_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: malformed metrics record ({exc})") from exc
    if not records:
        raise DataError(f"{path}: no metrics records")
    return records


def uncertainty_series(records: Sequence[MetricsRecord], gating: str = "var_mu") -> list[tuple[int, float]]:
    return [(r.epoch, r.uncertainty(gating)) for r in records if r.split == "dev"]


def decrease_ratio(values: Sequence[float]) -> float:
    """Final value over first value; 1.0 for a constant series."""
    if not values:
        raise ValueError("empty series")
    return float(values[-1] / values[0])


def series_slope(values: Sequence[float]) -> float:
    """Least-squares slope against the epoch index; 0 for a single point."""
    if len(values) < 2:
        return 0.0
    return float(np.polyfit(np.arange(len(values), dtype=float), np.asarray(values, dtype=float), 1)[0])


def format_curve(series: Sequence[tuple[int, float]]) -> str:
    return "".join(f"{epoch} {value!r}\n" for epoch, value in series)


@dataclass
class ReportRow:
    label: str
    strategy: str
    evidential: str
    scores: SpanScores
    ratio: float
    slope: float


def _run_label(path: Path) -> tuple[str, str, str]:
    cfg_path = path.parent / CONFIG_FILE
    strategy, evidential = "?", "?"
    if cfg_path.exists():
        for line in cfg_path.read_text(encoding="utf-8").splitlines():
            key, _, value = line.partition("=")
            if key == "fusion.strategy":
                strategy = value
            elif key == "loss.evidential":
                evidential = "on" if value == "true" else "off"
    return path.parent.name or str(path), strategy, evidential


def run_report(paths: Sequence[Path], out: Path, gating: str = "var_mu") -> list[ReportRow]:
    """Write one ``curve_<run>.txt`` per metrics file and ``report.txt``
    comparing the runs (test scores when present, else the last dev epoch)."""
    if not paths:
        raise ValueError("need at least one metrics file")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows, seen = [], set()
    for path in map(Path, paths):
        records = read_metrics(path)
        series = uncertainty_series(records, gating)
        values = [v for _, v in series]
        label, strategy, evidential = _run_label(path)
        base, k = label, 1
        while label in seen:
            k += 1
            label = f"{base}_{k}"
        seen.add(label)
        tests = [r for r in records if r.split == "test"]
        final = tests[-1] if tests else records[-1]
        ratio = decrease_ratio(values) if values else float("nan")
        rows.append(ReportRow(label, strategy, evidential, final.scores, ratio, series_slope(values)))
        (out / f"curve_{label}.txt").write_text(format_curve(series), encoding="utf-8")
    table = format_table(
        ("run", "strategy", "evidential", "P", "R", "F1", "unc_ratio", "unc_slope"),
        [(r.label, r.strategy, r.evidential, r.scores.overall.precision, r.scores.overall.recall,
          r.scores.overall.f1, r.ratio, r.slope) for r in rows],
    )
    (out / "report.txt").write_text(table, encoding="utf-8")
    return rows
