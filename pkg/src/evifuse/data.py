"""Datasets: synthetic multimodal tagging benchmark, CoNLL ingestion and the
EVIFEAT v1 feature file format."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .tags import CATEGORIES, NUM_TAGS, TAG_INDEX, TAGS, bio_violations, repair_bio, split_tag

MODALITIES = ("text", "image", "pretrained")
# "concat" labels the output of input-level (strategy a) fusion.
FEATURE_LABELS = MODALITIES + ("concat",)
SPLITS = ("train", "dev", "test")


@dataclass
class ModalityFeatures:
    modality: str
    vectors: np.ndarray  # (tokens, width)

    def __post_init__(self):
        if self.modality not in FEATURE_LABELS:
            raise DataError(f"unknown modality {self.modality!r}")
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[1] == 0:
            raise DataError(f"{self.modality} features must be a (tokens, width>0) array")
        if not np.all(np.isfinite(self.vectors)):
            raise DataError(f"{self.modality} features contain non-finite values")

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


@dataclass
class TaggedSequence:
    tokens: np.ndarray
    tags: np.ndarray
    features: dict[str, ModalityFeatures] = field(default_factory=dict)
    words: tuple[str, ...] | None = None

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.int64)
        self.tags = np.asarray(self.tags, dtype=np.int64)
        n = len(self.tokens)
        if len(self.tags) != n:
            raise DataError(f"{n} tokens but {len(self.tags)} tags")
        if self.words is not None and len(self.words) != n:
            raise DataError(f"{n} tokens but {len(self.words)} words")
        for feats in self.features.values():
            if len(feats) != n:
                raise DataError(f"{feats.modality} features have {len(feats)} rows for {n} tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def violations(self) -> list[int]:
        return bio_violations(self.tags.tolist())


Dataset = list  # list[TaggedSequence]


# -- synthetic benchmark -----------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    vocab_size: int = 1000
    sequence_count: int = 2000
    dev_count: int = 400
    test_count: int = 400
    min_len: int = 5
    max_len: int = 20
    entity_density: float = 0.3
    sigma_text: float = 0.6
    sigma_image: float = 0.6
    # None disables the frozen pre-trained channel.
    sigma_pretrained: float | None = None
    conflict_rate: float = 0.3
    feature_dim: int = 16
    # "category": one prototype per entity category plus O, so B/I must be
    # read from context; "tag": one per BIO tag.
    prototype_granularity: str = "category"
    seed: int = 17

    def __post_init__(self):
        problems = []
        if self.vocab_size < 1:
            problems.append("vocab_size must be >= 1")
        if min(self.sequence_count, self.dev_count, self.test_count) < 0:
            problems.append("sequence counts must be >= 0")
        if not 1 <= self.min_len <= self.max_len:
            problems.append("need 1 <= min_len <= max_len")
        if not 0.0 <= self.entity_density <= 1.0:
            problems.append(f"entity_density must lie in [0, 1], got {self.entity_density}")
        if not 0.0 <= self.conflict_rate <= 1.0:
            problems.append(f"conflict_rate must lie in [0, 1], got {self.conflict_rate}")
        for name in ("sigma_text", "sigma_image", "sigma_pretrained"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                problems.append(f"{name} must be finite and >= 0")
        if self.prototype_granularity not in ("category", "tag"):
            problems.append(f"unknown prototype_granularity {self.prototype_granularity!r}")
        if self.feature_dim < 1:
            problems.append("feature_dim must be >= 1")
        if problems:
            raise DataError("infeasible synthetic config: " + "; ".join(problems))

    @property
    def modalities(self) -> tuple[str, ...]:
        return ("text", "image") if self.sigma_pretrained is None else MODALITIES

    def count(self, split: str) -> int:
        return {"train": self.sequence_count, "dev": self.dev_count, "test": self.test_count}[split]


# Prototype row used for each tag id under category granularity.
_CATEGORY_ROW = np.array([0] + [1 + CATEGORIES.index(split_tag(t)[1]) for t in TAGS[1:]])


def prototypes(cfg: SynthConfig) -> dict[str, np.ndarray]:
    """Random unit vectors per modality, indexed by tag id, shared by all splits."""
    out = {}
    rows = len(CATEGORIES) + 1 if cfg.prototype_granularity == "category" else NUM_TAGS
    for m_idx, modality in enumerate(MODALITIES):
        rng = np.random.default_rng([cfg.seed, 1000 + m_idx])
        v = rng.standard_normal((rows, cfg.feature_dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        out[modality] = v[_CATEGORY_ROW] if cfg.prototype_granularity == "category" else v
    return out


def _sample_tags(rng: np.random.Generator, length: int, density: float) -> tuple[list[int], list[tuple[int, int, str]]]:
    # Spans have length 1..3 (mean 2); a span starts at a free position with
    # probability q, so the expected entity-token fraction is 2q/(1+q).
    # Back-to-back spans never share a category, keeping boundaries visible.
    q = density / (2.0 - density)
    tags = [0] * length
    spans = []
    pos = 0
    while pos < length:
        if rng.random() < q:
            span_len = min(int(rng.integers(1, 4)), length - pos)
            adjacent = spans[-1][2] if spans and spans[-1][1] == pos else None
            choices = [c for c in CATEGORIES if c != adjacent]
            cat = choices[int(rng.integers(len(choices)))]
            tags[pos] = TAG_INDEX[f"B-{cat}"]
            for k in range(pos + 1, pos + span_len):
                tags[k] = TAG_INDEX[f"I-{cat}"]
            spans.append((pos, pos + span_len, cat))
            pos += span_len
        else:
            pos += 1
    return tags, spans


def _generate_one(cfg: SynthConfig, protos, split_code: int, index: int) -> TaggedSequence:
    rng = np.random.default_rng([cfg.seed, split_code, index])
    length = int(rng.integers(cfg.min_len, cfg.max_len + 1))
    tags, spans = _sample_tags(rng, length, cfg.entity_density)
    tokens = rng.integers(cfg.vocab_size, size=length)

    # Image-side tags: whole spans swap to another category at rate rho.
    image_tags = list(tags)
    for start, end, cat in spans:
        if rng.random() < cfg.conflict_rate:
            others = [c for c in CATEGORIES if c != cat]
            wrong = others[int(rng.integers(len(others)))]
            for k in range(start, end):
                prefix, _ = split_tag(TAGS[tags[k]])
                image_tags[k] = TAG_INDEX[f"{prefix}-{wrong}"]

    features = {}
    sigmas = {"text": cfg.sigma_text, "image": cfg.sigma_image, "pretrained": cfg.sigma_pretrained}
    for modality in cfg.modalities:
        source = tags if modality == "text" else image_tags
        noise = rng.standard_normal((length, cfg.feature_dim))
        vectors = protos[modality][source] + sigmas[modality] * noise
        features[modality] = ModalityFeatures(modality, vectors)
    return TaggedSequence(tokens, np.array(tags), features)


def generate(cfg: SynthConfig, split: str = "train") -> Dataset:
    """Deterministic synthetic split; each sequence has its own seed stream."""
    if split not in SPLITS:
        raise DataError(f"unknown split {split!r}")
    protos = prototypes(cfg)
    code = SPLITS.index(split)
    return [_generate_one(cfg, protos, code, i) for i in range(cfg.count(split))]


def generate_splits(cfg: SynthConfig) -> dict[str, Dataset]:
    return {split: generate(cfg, split) for split in SPLITS}


# -- CoNLL -------------------------------------------------------------------


def hash_token(word: str, vocab_size: int) -> int:
    return zlib.crc32(word.encode("utf-8")) % vocab_size


def _finish_sequence(words, tags, lines, vocab_size, repair, path) -> TaggedSequence:
    bad = bio_violations(tags)
    if bad:
        if not repair:
            line = lines[bad[0]]
            raise DataError(f"{path}:{line}: ill-formed BIO tag {TAGS[tags[bad[0]]]}")
        tags = repair_bio(tags)
    tokens = [hash_token(w, vocab_size) for w in words]
    return TaggedSequence(np.array(tokens, dtype=np.int64), np.array(tags, dtype=np.int64), words=tuple(words))


def read_conll(path: str | Path, vocab_size: int = 1000, repair: bool = True) -> Dataset:
    """Read one-token-per-line BIO data; blank lines separate sequences."""
    dataset = []
    words, tags, lines = [], [], []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            if words:
                dataset.append(_finish_sequence(words, tags, lines, vocab_size, repair, path))
                words, tags, lines = [], [], []
            continue
        cols = line.split(" ")
        if len(cols) < 2 or not cols[0] or cols[-1] not in TAG_INDEX:
            raise DataError(f"{path}:{lineno}: malformed line {line!r}")
        words.append(cols[0])
        tags.append(TAG_INDEX[cols[-1]])
        lines.append(lineno)
    if words:
        dataset.append(_finish_sequence(words, tags, lines, vocab_size, repair, path))
    return dataset


def write_conll(path: str | Path, dataset: Iterable[TaggedSequence]) -> None:
    chunks = []
    for seq in dataset:
        words = seq.words if seq.words is not None else [f"tok{t}" for t in seq.tokens]
        chunks.append("".join(f"{w} {TAGS[t]}\n" for w, t in zip(words, seq.tags)))
    Path(path).write_text("\n".join(chunks) + ("\n" if chunks else ""), encoding="utf-8")


# -- EVIFEAT v1 --------------------------------------------------------------


def read_features(
    path: str | Path,
    modality: str = "pretrained",
    width: int | None = None,
    lengths: Sequence[int] | None = None,
) -> list[ModalityFeatures]:
    """Parse an EVIFEAT v1 file.

    ``width`` and ``lengths`` (per-sequence token counts of the paired
    dataset) are checked when given.
    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise DataError(f"{path}: empty feature file")
    head = lines[0].split()
    if len(head) != 4 or head[:2] != ["EVIFEAT", "v1"]:
        raise DataError(f"{path}:1: expected 'EVIFEAT v1 <count> <width>', got {lines[0]!r}")
    try:
        count, declared = int(head[2]), int(head[3])
    except ValueError:
        raise DataError(f"{path}:1: non-integer count/width in header") from None
    if declared <= 0 or count < 0:
        raise DataError(f"{path}:1: invalid count/width in header")
    if width is not None and declared != width:
        raise DataError(f"{path}: width mismatch: declared {declared}, expected {width}")
    if lengths is not None and len(lengths) != count:
        raise DataError(f"{path}: header declares {count} sequences, dataset has {len(lengths)}")

    out = []
    pos = 1
    for s in range(count):
        if pos >= len(lines):
            raise DataError(f"{path}: header declares {count} sequences, file has {s}")
        parts = lines[pos].split()
        if len(parts) != 2 or parts[0] != "SEQ" or not parts[1].isdigit():
            raise DataError(f"{path}:{pos + 1}: expected 'SEQ <length>', got {lines[pos]!r}")
        n = int(parts[1])
        if lengths is not None and n != lengths[s]:
            raise DataError(f"{path}:{pos + 1}: sequence {s} has length {n}, dataset has {lengths[s]}")
        if pos + 1 + n > len(lines):
            raise DataError(f"{path}: sequence {s} truncated")
        rows = []
        for k in range(pos + 1, pos + 1 + n):
            vals = lines[k].split()
            if len(vals) != declared:
                raise DataError(f"{path}:{k + 1}: width mismatch: declared {declared}, found {len(vals)}")
            try:
                row = [float(v) for v in vals]
            except ValueError:
                raise DataError(f"{path}:{k + 1}: non-numeric value") from None
            if not all(math.isfinite(v) for v in row):
                raise DataError(f"{path}:{k + 1}: non-finite value")
            rows.append(row)
        if n == 0:
            raise DataError(f"{path}:{pos + 1}: empty sequence")
        out.append(ModalityFeatures(modality, np.array(rows, dtype=np.float64).reshape(n, declared)))
        pos += 1 + n
    if any(l.strip() for l in lines[pos:]):
        raise DataError(f"{path}:{pos + 1}: trailing content after {count} sequences")
    return out


def write_features(path: str | Path, features: Sequence[ModalityFeatures]) -> None:
    if not features:
        raise DataError("cannot write an empty feature stream")
    width = features[0].width
    out = [f"EVIFEAT v1 {len(features)} {width}"]
    for f in features:
        if f.width != width:
            raise DataError(f"inconsistent widths {width} and {f.width}")
        out.append(f"SEQ {len(f)}")
        out.extend(" ".join(repr(float(v)) for v in row) for row in f.vectors)
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def attach_features(dataset: Dataset, features: Sequence[ModalityFeatures]) -> None:
    """Attach a feature stream (one entry per sequence) to ``dataset`` in place."""
    if len(features) != len(dataset):
        raise DataError(f"{len(features)} feature sequences for {len(dataset)} tagged sequences")
    for i, (seq, feats) in enumerate(zip(dataset, features)):
        if len(feats) != len(seq):
            raise DataError(f"sequence {i}: {len(feats)} feature rows for {len(seq)} tokens")
        seq.features[feats.modality] = feats
