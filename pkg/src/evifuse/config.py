"""Run configuration: a flat ``key=value`` text format and its mapping onto
the typed training, fusion, loss and data configs.

Every key has a default, so an empty file is a valid configuration (the
standard synthetic benchmark with default training settings).  The resolved
configuration is rendered back with :meth:`RunConfig.to_text`, one key per
line in sorted order, which is what runs echo to ``run.cfg``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Mapping

from .data import MODALITIES, SPLITS, SynthConfig
from .errors import ConfigError, DataError
from .fusion import FusionConfig
from .objective import LossConfig
from .tagger import TrainConfig


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


def _parse_modalities(text: str) -> tuple[str, ...] | None:
    if text.strip().lower() in ("", "auto", "none"):
        return None
    mods = tuple(m.strip() for m in text.split(",") if m.strip())
    for m in mods:
        if m not in MODALITIES:
            raise ValueError(f"unknown modality {m!r}; expected some of {MODALITIES}")
    return mods


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_TRAIN = TrainConfig()
_LOSS = LossConfig()
_FUSION = FusionConfig()
_SYNTH = SynthConfig()

# key -> (parser, default)
KEYS: dict[str, tuple[Callable[[str], object], object]] = {
    "seed": (int, _TRAIN.seed),
    "lambda": (float, _LOSS.lam),
    "epochs": (int, _TRAIN.epochs),
    "lr": (float, _TRAIN.lr),
    "batch_size": (int, _TRAIN.batch_size),
    "hidden": (int, _TRAIN.hidden),
    "embed_dim": (int, _TRAIN.embed_dim),
    "epsilon": (float, _TRAIN.epsilon),
    "clip_norm": (float, _TRAIN.clip_norm),
    "shared_heads": (_parse_bool, _TRAIN.shared_heads),
    "select_best": (_parse_bool, _TRAIN.select_best),
    "branch_loss_weight": (float, _TRAIN.branch_loss_weight),
    "modalities": (_parse_modalities, _TRAIN.modalities),
    "vocab_size": (int, _SYNTH.vocab_size),
    "loss.evidential": (_parse_bool, _LOSS.evidential),
    "loss.classification_weight": (float, _LOSS.classification_weight),
    "loss.temperature": (float, _LOSS.temperature),
    "fusion.strategy": (str, _FUSION.strategy),
    "fusion.gating": (str, _FUSION.gating),
    "fusion.invert_gating": (_parse_bool, _FUSION.invert_gating),
    "data.source": (str, "synth"),
    "out": (str, "runs/default"),
}
for _split in SPLITS:
    KEYS[f"data.{_split}"] = (str, "")
    # Comma-separated feature files; "path" means the pre-trained channel,
    # "modality=path" names the channel explicitly.
    KEYS[f"data.{_split}.features"] = (str, "")
# synth.seed defaults to the run seed, so "none" means "follow seed".
KEYS["synth.seed"] = (lambda s: None if s.strip().lower() in ("", "none") else int(s), None)
for _f in fields(SynthConfig):
    if _f.name in ("seed", "vocab_size"):
        continue
    _default = getattr(_SYNTH, _f.name)
    if _f.name == "sigma_pretrained":
        _parser = _parse_optional_float
    elif isinstance(_default, bool):
        _parser = _parse_bool
    elif isinstance(_default, int):
        _parser = int
    elif isinstance(_default, float):
        _parser = float
    else:
        _parser = str
    KEYS[f"synth.{_f.name}"] = (_parser, _default)

DATA_SOURCES = ("synth", "files")


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, str]:
    """Raw ``key=value`` pairs; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def read_config_file(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def _feature_specs(text: str) -> tuple[tuple[str, str], ...]:
    specs = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        modality, sep, path = item.partition("=")
        if not sep:
            modality, path = "pretrained", item
        if modality not in MODALITIES:
            raise ConfigError(f"unknown feature modality {modality!r}")
        specs.append((modality, path))
    return tuple(specs)


@dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, object]
    train: TrainConfig
    synth: SynthConfig | None
    paths: Mapping[str, str]
    features: Mapping[str, tuple[tuple[str, str], ...]]
    out: Path

    @property
    def seed(self) -> int:
        return self.train.seed

    def to_text(self) -> str:
        return "".join(f"{k}={_render(self.values[k])}\n" for k in sorted(self.values))

    def digest_text(self) -> str:
        """Resolved config without the output location, so the checkpoint
        digest depends only on what was trained."""
        return "".join(line for line in self.to_text().splitlines(keepends=True) if not line.startswith("out="))

    def with_overrides(self, overrides: Mapping[str, object]) -> "RunConfig":
        merged = dict(self.values)
        merged.update(overrides)
        return build_run_config({k: _render(v) for k, v in merged.items()})


def build_run_config(raw: Mapping[str, str]) -> RunConfig:
    """Validate raw string values and assemble the typed sub-configs.

    Every problem, including those found by the sub-config constructors,
    surfaces as :class:`ConfigError`.
    """
    values = {}
    for key, (parser, default) in KEYS.items():
        if key in raw:
            try:
                values[key] = parser(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        else:
            values[key] = default
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in values.items():
        if isinstance(value, float) and not math.isfinite(value):
            raise ConfigError(f"{key} must be finite, got {value}")
    if values["data.source"] not in DATA_SOURCES:
        raise ConfigError(f"data.source must be one of {DATA_SOURCES}, got {values['data.source']!r}")
    files = values["data.source"] == "files"
    if files and not values["data.train"]:
        raise ConfigError("data.source=files needs data.train")
    if not files and any(values[f"data.{s}"] for s in SPLITS):
        raise ConfigError("data.train/dev/test given but data.source is synth")
    try:
        loss = LossConfig(
            lam=values["lambda"],
            classification_weight=values["loss.classification_weight"],
            evidential=values["loss.evidential"],
            temperature=values["loss.temperature"],
        )
        fusion = FusionConfig(values["fusion.strategy"], values["fusion.gating"], values["fusion.invert_gating"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    values["fusion.strategy"], values["fusion.gating"] = fusion.strategy, fusion.gating
    train = TrainConfig(
        epochs=values["epochs"],
        batch_size=values["batch_size"],
        lr=values["lr"],
        seed=values["seed"],
        epsilon=values["epsilon"],
        loss=loss,
        fusion=fusion,
        hidden=values["hidden"],
        embed_dim=values["embed_dim"],
        clip_norm=values["clip_norm"],
        shared_heads=values["shared_heads"],
        modalities=values["modalities"],
        branch_loss_weight=values["branch_loss_weight"],
        select_best=values["select_best"],
    )
    if train.hidden < 1 or train.embed_dim < 0:
        raise ConfigError("hidden must be >= 1 and embed_dim >= 0")
    synth = None
    if not files:
        kwargs = {k[len("synth."):]: v for k, v in values.items() if k.startswith("synth.") and k != "synth.seed"}
        seed = values["synth.seed"] if values["synth.seed"] is not None else values["seed"]
        try:
            synth = SynthConfig(vocab_size=values["vocab_size"], seed=seed, **kwargs)
        except DataError as exc:
            raise ConfigError(str(exc)) from None
    elif values["vocab_size"] < 1:
        raise ConfigError("vocab_size must be >= 1")
    return RunConfig(
        values=values,
        train=train,
        synth=synth,
        paths={s: values[f"data.{s}"] for s in SPLITS},
        features={s: _feature_specs(values[f"data.{s}.features"]) for s in SPLITS},
        out=Path(values["out"]),
    )
