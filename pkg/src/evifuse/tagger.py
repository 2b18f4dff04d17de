"""Desk-scale evidential sequence tagger.

Each branch is a two-layer feed-forward encoder over a token +/- 1 context
window, followed by four linear heads producing raw (delta, gamma, alpha,
beta) per tag class.  Branch outputs are combined by the configured fusion
strategy.  Gradients are computed by hand and trained with clipped SGD.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from . import fusion
from .data import MODALITIES, Dataset, ModalityFeatures, TaggedSequence
from .errors import ConfigError, DataError, DivergenceError
from .evidence import (
    DEFAULT_EPSILON,
    EvidentialOutput,
    canonical_gating,
    constrain,
    constrain_arrays,
    constrain_backward,
)
from .fusion import FusionConfig
from .metrics import MetricsRecord, span_metrics
from .objective import (
    LossBreakdown,
    LossConfig,
    nll_arrays,
    nll_grad_arrays,
    regularizer_arrays,
    regularizer_grad_arrays,
)
from .tags import NUM_TAGS

__all__ = [
    "constrain",
    "ModelSpec",
    "Tagger",
    "TrainConfig",
    "TrainResult",
    "EncodedData",
    "encode",
    "forward",
    "predict_tags",
    "train",
    "evaluate",
    "save_checkpoint",
    "load_checkpoint",
]

log = logging.getLogger(__name__)

ModelParameters = dict  # name -> np.ndarray, insertion ordered


@dataclass(frozen=True)
class Branch:
    name: str
    modalities: tuple[str, ...]
    uses_embedding: bool
    feature_width: int


@dataclass(frozen=True)
class ModelSpec:
    strategy: str
    modalities: tuple[str, ...]
    feature_widths: tuple[int, ...]  # per modality; 0 for text means tokens only
    num_classes: int = NUM_TAGS
    hidden: int = 64
    embed_dim: int = 8
    vocab_size: int = 1000
    epsilon: float = DEFAULT_EPSILON
    shared_heads: bool = False
    gating: str = "var_mu"
    invert_gating: bool = False

    def __post_init__(self):
        object.__setattr__(self, "modalities", tuple(self.modalities))
        object.__setattr__(self, "feature_widths", tuple(int(w) for w in self.feature_widths))
        object.__setattr__(self, "strategy", FusionConfig(self.strategy).strategy)
        object.__setattr__(self, "gating", canonical_gating(self.gating))
        if len(self.modalities) != len(self.feature_widths) or not self.modalities:
            raise ConfigError("need one feature width per modality and at least one modality")
        for m, w in zip(self.modalities, self.feature_widths):
            if m not in MODALITIES:
                raise ConfigError(f"unknown modality {m!r}")
            if w < 0 or (w == 0 and not (m == "text" and self.embed_dim > 0)):
                raise ConfigError(f"modality {m!r} has no input (width {w})")
        if self.strategy == "c" and len(self.branches) < 2:
            raise ConfigError("strategy c needs at least two branches")
        if min(self.num_classes, self.hidden, self.vocab_size) < 1 or self.embed_dim < 0:
            raise ConfigError("num_classes, hidden and vocab_size must be >= 1, embed_dim >= 0")

    @property
    def fusion(self) -> FusionConfig:
        return FusionConfig(self.strategy, self.gating, self.invert_gating)

    @property
    def uses_embedding(self) -> bool:
        return self.embed_dim > 0 and "text" in self.modalities

    @property
    def branches(self) -> tuple[Branch, ...]:
        widths = dict(zip(self.modalities, self.feature_widths))
        if self.strategy == "a":
            return (Branch("concat", self.modalities, self.uses_embedding, sum(self.feature_widths)),)
        return tuple(
            Branch(m, (m,), m == "text" and self.uses_embedding, widths[m]) for m in self.modalities
        )

    def input_width(self, branch: Branch) -> int:
        return 3 * (branch.feature_width + (self.embed_dim if branch.uses_embedding else 0))

    def head_prefix(self, branch: Branch) -> str:
        return "shared" if self.shared_heads and len(self.branches) > 1 else branch.name

    def parameter_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes = {}
        if self.uses_embedding:
            shapes["embedding"] = (self.vocab_size, self.embed_dim)
        for br in self.branches:
            shapes[f"{br.name}.W1"] = (self.input_width(br), self.hidden)
            shapes[f"{br.name}.b1"] = (self.hidden,)
            head = self.head_prefix(br)
            shapes[f"{head}.W2"] = (self.hidden, 4 * self.num_classes)
            shapes[f"{head}.b2"] = (4 * self.num_classes,)
        if self.strategy == "b":
            shapes["decoder.W"] = (4 * len(self.branches), 4)
            shapes["decoder.b"] = (4,)
        return shapes

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        d = json.loads(text)
        d["modalities"] = tuple(d["modalities"])
        d["feature_widths"] = tuple(d["feature_widths"])
        return cls(**d)


def init_parameters(spec: ModelSpec, seed: int) -> ModelParameters:
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; a bias uses its weight's fan-in."""
    rng = np.random.default_rng([seed, 0])
    params = {}
    fan_in = 1
    for name, shape in spec.parameter_shapes().items():
        if name != "embedding" and len(shape) == 2:
            fan_in = shape[0]
        r = 1.0 / math.sqrt(1 if name == "embedding" else fan_in)
        params[name] = rng.uniform(-r, r, size=shape)
    return params


# -- input encoding -----------------------------------------------------------


@dataclass
class EncodedData:
    """Context-window inputs for every token of a dataset, flattened."""

    features: dict[str, np.ndarray]  # branch name -> (tokens, 3 * width)
    token_windows: np.ndarray  # (tokens, 3); vocab_size marks padding
    tags: np.ndarray
    offsets: np.ndarray  # sequence i spans rows offsets[i]:offsets[i+1]

    @property
    def num_sequences(self) -> int:
        return len(self.offsets) - 1

    def rows(self, seq_indices: Sequence[int]) -> np.ndarray:
        return np.concatenate([np.arange(self.offsets[i], self.offsets[i + 1]) for i in seq_indices])

    def take(self, rows: np.ndarray) -> "EncodedData":
        return EncodedData(
            {k: v[rows] for k, v in self.features.items()},
            self.token_windows[rows],
            self.tags[rows],
            np.array([0, len(rows)]),
        )


def _window(x: np.ndarray) -> np.ndarray:
    pad = np.zeros((1, x.shape[1]))
    return np.concatenate([np.vstack([pad, x[:-1]]), x, np.vstack([x[1:], pad])], axis=1)


def encode(dataset: Sequence[TaggedSequence], spec: ModelSpec) -> EncodedData:
    widths = dict(zip(spec.modalities, spec.feature_widths))
    feats = {br.name: [] for br in spec.branches}
    windows, tags, offsets = [], [], [0]
    for i, seq in enumerate(dataset):
        n = len(seq)
        if n == 0:
            raise DataError(f"sequence {i} is empty")
        for br in spec.branches:
            channels = []
            for m in br.modalities:
                if widths[m] == 0:
                    continue
                if m not in seq.features:
                    raise DataError(f"sequence {i} lacks {m} features")
                if seq.features[m].width != widths[m]:
                    raise DataError(
                        f"sequence {i}: {m} width mismatch: declared {widths[m]}, found {seq.features[m].width}"
                    )
                channels.append(seq.features[m])
            if channels:
                feats[br.name].append(_window(fusion.fuse_features_concat(channels).vectors))
            else:
                feats[br.name].append(np.zeros((n, 0)))
        tok = seq.tokens
        if tok.size and (tok.min() < 0 or tok.max() >= spec.vocab_size):
            raise DataError(f"sequence {i}: token id outside vocabulary of size {spec.vocab_size}")
        pad = spec.vocab_size
        windows.append(np.stack([np.r_[pad, tok[:-1]], tok, np.r_[tok[1:], pad]], axis=1))
        tags.append(seq.tags)
        offsets.append(offsets[-1] + n)
    if not tags:
        return EncodedData(
            {br.name: np.zeros((0, 3 * br.feature_width)) for br in spec.branches},
            np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.int64), np.array([0]),
        )
    return EncodedData(
        {k: np.concatenate(v) for k, v in feats.items()},
        np.concatenate(windows).astype(np.int64),
        np.concatenate(tags).astype(np.int64),
        np.array(offsets),
    )


# -- model ----------------------------------------------------------------------


def output_loss(out: EvidentialOutput, tags: np.ndarray, cfg: LossConfig, need_grad: bool = True):
    """Mean losses of one evidential output against gold tags.

    Returns (breakdown, objective, grads) where grads are the partials of the
    objective w.r.t. (delta, gamma, alpha, beta), or None.
    """
    n, c = out.shape
    rows = np.arange(n)
    y = np.zeros((n, c))
    y[rows, tags] = 1.0
    d, g, a, b = out.fields()
    nll = float(nll_arrays(y, d, g, a, b).mean())
    reg = float(regularizer_arrays(y, d, g, a).mean())
    logits = d / cfg.temperature
    lse = logsumexp(logits, axis=1)
    ce = float((lse - logits[rows, tags]).mean())
    breakdown = LossBreakdown.compose(nll, reg, ce, cfg)
    objective = breakdown.grand_total if cfg.evidential else cfg.classification_weight * ce
    if not need_grad:
        return breakdown, objective, None
    if cfg.evidential:
        gn = nll_grad_arrays(y, d, g, a, b)
        gr = regularizer_grad_arrays(y, d, g, a)
        grads = [(gn[k] + cfg.lam * gr[k]) / (n * c) for k in range(4)]
    else:
        grads = [np.zeros_like(d) for _ in range(4)]
    soft = np.exp(logits - lse[:, None])
    grads[0] = grads[0] + cfg.classification_weight * (soft - y) / (n * cfg.temperature)
    return breakdown, objective, tuple(grads)


@dataclass
class _BranchCache:
    x: np.ndarray
    h: np.ndarray
    raw: np.ndarray
    out: EvidentialOutput


class Tagger:
    def __init__(self, spec: ModelSpec, params: ModelParameters | None = None, seed: int = 0):
        self.spec = spec
        self.params = init_parameters(spec, seed) if params is None else params
        expected = spec.parameter_shapes()
        if list(self.params) != list(expected) or any(
            self.params[k].shape != s for k, s in expected.items()
        ):
            raise ConfigError("parameter names/shapes do not match the model spec")

    # forward ---------------------------------------------------------------

    def _branch_forward(self, br: Branch, data: EncodedData) -> _BranchCache:
        p, spec = self.params, self.spec
        parts = []
        if br.uses_embedding:
            table = np.vstack([p["embedding"], np.zeros((1, spec.embed_dim))])
            parts.append(table[data.token_windows].reshape(len(data.tags), 3 * table.shape[1]))
        parts.append(data.features[br.name])
        x = np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0]
        h = np.tanh(x @ p[f"{br.name}.W1"] + p[f"{br.name}.b1"])
        head = spec.head_prefix(br)
        raw = h @ p[f"{head}.W2"] + p[f"{head}.b2"]
        c = spec.num_classes
        out = EvidentialOutput(*constrain_arrays(
            raw[:, :c], raw[:, c:2 * c], raw[:, 2 * c:3 * c], raw[:, 3 * c:], eps=spec.epsilon
        ))
        return _BranchCache(x, h, raw, out)

    def _fuse(self, outs: list[EvidentialOutput]) -> EvidentialOutput:
        strategy = self.spec.strategy
        if strategy == "a" or (strategy == "evidential" and len(outs) == 1):
            return outs[0]
        if strategy == "evidential":
            return fusion.fuse_outputs_evidential(outs)
        if strategy == "c":
            return fusion.fuse_outputs_gated(outs, self.spec.fusion)
        return fusion.fuse_outputs_late(outs, self.params["decoder.W"], self.params["decoder.b"], self.spec.epsilon)

    def branch_outputs(self, data: EncodedData) -> list[EvidentialOutput]:
        return [self._branch_forward(br, data).out for br in self.spec.branches]

    def forward(self, data: EncodedData) -> EvidentialOutput:
        return self._fuse(self.branch_outputs(data))

    # loss and gradients ------------------------------------------------------

    def loss_and_grad(self, data: EncodedData, cfg: LossConfig, need_grad: bool = True,
                      branch_weight: float = 0.0):
        """Loss breakdown at the fused output, the optimized objective and
        parameter gradients.

        ``branch_weight`` > 0 adds that multiple of each branch's own
        objective (multi-branch strategies only).
        """
        spec = self.spec
        caches = [self._branch_forward(br, data) for br in spec.branches]
        outs = [c.out for c in caches]
        final = self._fuse(outs)
        breakdown, objective, grads = output_loss(final, data.tags, cfg, need_grad)
        multi = len(outs) > 1 and branch_weight > 0
        extra = [output_loss(o, data.tags, cfg, need_grad) for o in outs] if multi else []
        objective += branch_weight * sum(e[1] for e in extra)
        if not need_grad:
            return breakdown, objective, None

        pgrads = {k: np.zeros_like(v) for k, v in self.params.items()}
        if spec.strategy == "a" or (spec.strategy == "evidential" and len(outs) == 1):
            branch_grads = [grads]
        elif spec.strategy == "evidential":
            branch_grads = fusion.fuse_outputs_evidential_backward(outs, grads)
        elif spec.strategy == "c":
            branch_grads = fusion.fuse_outputs_gated_backward(outs, spec.fusion, grads)
        else:
            branch_grads, dw, db = fusion.fuse_outputs_late_backward(
                outs, self.params["decoder.W"], self.params["decoder.b"], grads
            )
            pgrads["decoder.W"] += dw
            pgrads["decoder.b"] += db
        for k, e in enumerate(extra):
            branch_grads[k] = tuple(g + branch_weight * ge for g, ge in zip(branch_grads[k], e[2]))

        for br, cache, bg in zip(spec.branches, caches, branch_grads):
            self._branch_backward(br, cache, bg, data, pgrads)
        return breakdown, objective, pgrads

    def _branch_backward(self, br: Branch, cache: _BranchCache, grads, data: EncodedData, pgrads) -> None:
        spec, p = self.spec, self.params
        c = spec.num_classes
        raw = cache.raw
        g_raw = np.concatenate(
            constrain_backward(raw[:, c:2 * c], raw[:, 2 * c:3 * c], raw[:, 3 * c:], *grads), axis=1
        )
        head = spec.head_prefix(br)
        pgrads[f"{head}.W2"] += cache.h.T @ g_raw
        pgrads[f"{head}.b2"] += g_raw.sum(axis=0)
        g_z = (g_raw @ p[f"{head}.W2"].T) * (1.0 - cache.h * cache.h)
        pgrads[f"{br.name}.W1"] += cache.x.T @ g_z
        pgrads[f"{br.name}.b1"] += g_z.sum(axis=0)
        if br.uses_embedding:
            e = spec.embed_dim
            g_x = g_z @ p[f"{br.name}.W1"][: 3 * e].T
            g_table = np.zeros((spec.vocab_size + 1, e))
            np.add.at(g_table, data.token_windows.ravel(), g_x.reshape(-1, e))
            pgrads["embedding"] += g_table[:-1]


def forward(features: ModalityFeatures | Sequence[ModalityFeatures], tagger: Tagger,
            tokens: Sequence[int] | None = None) -> EvidentialOutput:
    """Fused output for a single sequence given its feature channels."""
    channels = [features] if isinstance(features, ModalityFeatures) else list(features)
    n = len(channels[0]) if channels else len(tokens or [])
    seq = TaggedSequence(
        np.zeros(n, dtype=np.int64) if tokens is None else np.asarray(tokens),
        np.zeros(n, dtype=np.int64),
        {ch.modality: ch for ch in channels},
    )
    return tagger.forward(encode([seq], tagger.spec))


def predict_tags(fused: EvidentialOutput, gating: str = "var_mu") -> tuple[np.ndarray, np.ndarray]:
    """Argmax of delta per token (lowest index on ties) and the winning
    class's uncertainty under ``gating``."""
    tags = np.argmax(fused.delta, axis=1)
    unc = fused.uncertainty(gating)[np.arange(len(tags)), tags]
    return tags, unc


# -- training -------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 0.05
    seed: int = 17
    epsilon: float = DEFAULT_EPSILON
    loss: LossConfig = field(default_factory=LossConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    hidden: int = 64
    embed_dim: int = 8
    clip_norm: float = 5.0
    shared_heads: bool = False
    # None means every modality present in the training data.
    modalities: tuple[str, ...] | None = None
    # Weight of each branch's own objective added to the fused one.
    branch_loss_weight: float = 0.0
    # Return the parameters of the best dev-F1 epoch instead of the last.
    select_best: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (math.isfinite(self.lr) and self.lr >= 0):
            raise ConfigError(f"learning rate must be finite and >= 0, got {self.lr}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.clip_norm > 0:
            raise ConfigError(f"clip_norm must be > 0, got {self.clip_norm}")
        if not (math.isfinite(self.branch_loss_weight) and self.branch_loss_weight >= 0):
            raise ConfigError(f"branch_loss_weight must be finite and >= 0, got {self.branch_loss_weight}")

    def model_spec(self, dataset: Sequence[TaggedSequence], vocab_size: int) -> ModelSpec:
        if not dataset:
            raise DataError("training set is empty")
        present = dataset[0].features
        mods = self.modalities
        if mods is None:
            mods = tuple(m for m in MODALITIES if m in present)
            if "text" not in mods and self.embed_dim > 0:
                mods = ("text",) + mods
        widths = tuple(present[m].width if m in present else 0 for m in mods)
        return ModelSpec(
            strategy=self.fusion.strategy,
            modalities=mods,
            feature_widths=widths,
            hidden=self.hidden,
            embed_dim=self.embed_dim,
            vocab_size=vocab_size,
            epsilon=self.epsilon,
            shared_heads=self.shared_heads,
            gating=self.fusion.gating,
            invert_gating=self.fusion.invert_gating,
        )


@dataclass
class TrainResult:
    tagger: Tagger
    records: list[MetricsRecord]
    best_epoch: int


def clip_gradients(grads: ModelParameters, max_norm: float) -> float:
    norm = math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def evaluate(tagger: Tagger, data: EncodedData):
    """Span scores plus mean winning-class uncertainty under both formulas."""
    fused = tagger.forward(data)
    tags, _ = predict_tags(fused)
    cols = np.arange(len(tags))
    unc = {f: float(fused.uncertainty(f)[cols, tags].mean()) if len(tags) else float("nan")
           for f in ("var_mu", "e_sigma2")}
    gold = [data.tags[data.offsets[i]:data.offsets[i + 1]] for i in range(data.num_sequences)]
    pred = [tags[data.offsets[i]:data.offsets[i + 1]] for i in range(data.num_sequences)]
    return span_metrics(gold, pred), unc


def train(
    dataset: Sequence[TaggedSequence],
    config: TrainConfig,
    dev: Sequence[TaggedSequence] | None = None,
    vocab_size: int = 1000,
    on_epoch: Callable[[MetricsRecord], None] | None = None,
) -> TrainResult:
    """Mini-batch gradient descent on the total loss.

    One record per epoch carries the mean training losses and, when ``dev``
    is given, dev span scores and mean uncertainties.
    """
    spec = config.model_spec(dataset, vocab_size)
    tagger = Tagger(spec, seed=config.seed)
    data = encode(dataset, spec)
    dev_data = encode(dev, spec) if dev else None
    records = []
    best_f1, best_epoch, best_params = -1.0, config.epochs, None
    for epoch in range(1, config.epochs + 1):
        order = np.random.default_rng([config.seed, 1, epoch]).permutation(data.num_sequences)
        sums = np.zeros(3)
        batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = data.take(data.rows(order[start:start + config.batch_size]))
            losses, objective, grads = tagger.loss_and_grad(batch, config.loss,
                                                            branch_weight=config.branch_loss_weight)
            if not (math.isfinite(objective) and all(np.all(np.isfinite(g)) for g in grads.values())):
                raise DivergenceError(
                    f"non-finite loss or gradient at epoch {epoch}, batch {start // config.batch_size} "
                    f"(sequences {order[start:start + config.batch_size].tolist()})"
                )
            clip_gradients(grads, config.clip_norm)
            if config.lr:
                with np.errstate(over="ignore", invalid="ignore"):
                    for k, g in grads.items():
                        tagger.params[k] -= config.lr * g
                if not all(np.all(np.isfinite(v)) for v in tagger.params.values()):
                    raise DivergenceError(
                        f"non-finite parameters after the update at epoch {epoch}, "
                        f"batch {start // config.batch_size}"
                    )
            sums += (losses.evidential_total, losses.classification, objective)
            batches += 1
        means = sums / max(batches, 1)
        if dev_data is not None and dev_data.num_sequences:
            scores, unc = evaluate(tagger, dev_data)
        else:
            scores, unc = span_metrics([], []), {"var_mu": float("nan"), "e_sigma2": float("nan")}
        record = MetricsRecord(
            epoch, "dev", scores, unc["var_mu"], unc["e_sigma2"],
            {"evidential": float(means[0]), "classification": float(means[1]), "total": float(means[2])},
        )
        log.info("epoch %d loss %.4f dev F1 %.4f", epoch, means[2], scores.overall.f1)
        records.append(record)
        if config.select_best and dev_data is not None and scores.overall.f1 > best_f1:
            best_f1, best_epoch = scores.overall.f1, epoch
            best_params = {k: v.copy() for k, v in tagger.params.items()}
        if on_epoch:
            on_epoch(record)
    if best_params is not None:
        tagger.params = best_params
    return TrainResult(tagger, records, best_epoch)


# -- checkpoints ------------------------------------------------------------------

CHECKPOINT_MAGIC = "EVICKPT v1"


def save_checkpoint(path: str | Path, tagger: Tagger, seed: int, config_text: str = "") -> None:
    """Text header then one section per tensor of row-major decimal values."""
    digest = hashlib.sha256(config_text.encode("utf-8")).hexdigest()
    lines = [
        CHECKPOINT_MAGIC,
        f"seed {seed}",
        f"config_digest {digest}",
        f"spec {tagger.spec.to_json()}",
        f"tensors {len(tagger.params)}",
    ]
    for name, value in tagger.params.items():
        lines.append(f"TENSOR {name} {value.ndim} {' '.join(map(str, value.shape))}")
        rows = value.reshape(value.shape[0], -1) if value.ndim > 1 else value.reshape(1, -1)
        lines.extend(" ".join(repr(float(v)) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[Tagger, dict]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: not an {CHECKPOINT_MAGIC} checkpoint")
    try:
        meta = {"seed": int(lines[1].split()[1]), "config_digest": lines[2].split()[1]}
        spec = ModelSpec.from_json(lines[3].split(" ", 1)[1])
        count = int(lines[4].split()[1])
        params = {}
        pos = 5
        for _ in range(count):
            head = lines[pos].split()
            name, ndim = head[1], int(head[2])
            shape = tuple(int(s) for s in head[3:3 + ndim])
            nrows = shape[0] if ndim > 1 else 1
            values = [float(v) for line in lines[pos + 1:pos + 1 + nrows] for v in line.split()]
            params[name] = np.array(values, dtype=np.float64).reshape(shape)
            pos += 1 + nrows
    except (IndexError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed checkpoint ({exc})") from exc
    return Tagger(spec, params), meta
