"""Fusion strategies.

``a``          concatenate input feature channels before a single encoder.
``b``          concatenate per-branch NIG outputs and decode them linearly.
``c``          per token/class, keep the branch with the lowest uncertainty.
``evidential`` merge per-branch NIGs with the summation operator.

Each output-level strategy has a matching ``*_backward`` used by training.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import ModalityFeatures
from .evidence import (
    DEFAULT_EPSILON,
    EvidentialOutput,
    canonical_gating,
    constrain_arrays,
    constrain_backward,
)
from .nig import fuse_arrays

STRATEGIES = ("a", "b", "c", "evidential")
STRATEGY_ALIASES = {
    "a": "a", "concat_a": "a",
    "b": "b", "late_concat_b": "b",
    "c": "c", "uncertainty_gated_c": "c",
    "evidential": "evidential", "evidential_nig": "evidential",
}


@dataclass(frozen=True)
class FusionConfig:
    strategy: str = "evidential"
    gating: str = "var_mu"
    # Select the most uncertain branch instead; only useful as a worst case.
    invert_gating: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGY_ALIASES:
            raise ValueError(f"unknown fusion strategy {self.strategy!r}; expected one of {STRATEGIES}")
        object.__setattr__(self, "strategy", STRATEGY_ALIASES[self.strategy])
        object.__setattr__(self, "gating", canonical_gating(self.gating))


def _check_shapes(outputs: Sequence[EvidentialOutput], minimum: int = 1) -> tuple[int, int]:
    if len(outputs) < minimum:
        raise ValueError(f"need at least {minimum} branch outputs, got {len(outputs)}")
    shape = outputs[0].shape
    for k, out in enumerate(outputs[1:], start=1):
        if out.shape != shape:
            raise ValueError(f"branch {k} has shape {out.shape}, branch 0 has {shape}")
    return shape


# -- strategy a ---------------------------------------------------------------


def fuse_features_concat(channels: Sequence[ModalityFeatures]) -> ModalityFeatures:
    if not channels:
        raise ValueError("need at least one channel")
    n = len(channels[0])
    for ch in channels[1:]:
        if len(ch) != n:
            raise ValueError(f"{ch.modality} has {len(ch)} tokens, {channels[0].modality} has {n}")
    if len(channels) == 1:
        return channels[0]
    return ModalityFeatures("concat", np.concatenate([ch.vectors for ch in channels], axis=1))


# -- evidential ---------------------------------------------------------------


def fuse_outputs_evidential(outputs: Sequence[EvidentialOutput]) -> EvidentialOutput:
    _check_shapes(outputs)
    acc = outputs[0].fields()
    for out in outputs[1:]:
        acc = fuse_arrays(*acc, *out.fields())
    return EvidentialOutput(*acc)


def _pair_backward(left, right, grads):
    d1, g1, _, _ = left
    d2, g2, _, _ = right
    gd, gg, ga, gb = grads
    big_g = g1 + g2
    diff = d1 - d2
    h = g1 * g2 / big_g
    sq = big_g * big_g
    grad_left = (
        gd * g1 / big_g + gb * h * diff,
        gd * g2 * diff / sq + gg + gb * 0.5 * diff * diff * g2 * g2 / sq,
        ga,
        gb,
    )
    grad_right = (
        gd * g2 / big_g - gb * h * diff,
        -gd * g1 * diff / sq + gg + gb * 0.5 * diff * diff * g1 * g1 / sq,
        ga,
        gb,
    )
    return grad_left, grad_right


def fuse_outputs_evidential_backward(outputs: Sequence[EvidentialOutput], grads):
    """Gradients of each branch's (delta, gamma, alpha, beta) given the
    gradient at the fused output."""
    partials = [outputs[0].fields()]
    for out in outputs[1:]:
        partials.append(fuse_arrays(*partials[-1], *out.fields()))
    branch_grads = [None] * len(outputs)
    for k in range(len(outputs) - 1, 0, -1):
        grads, branch_grads[k] = _pair_backward(partials[k - 1], outputs[k].fields(), grads)
    branch_grads[0] = grads
    return branch_grads


# -- strategy c ---------------------------------------------------------------


def gate_selection(outputs: Sequence[EvidentialOutput], cfg: FusionConfig) -> np.ndarray:
    """Index of the chosen branch per token/class (ties -> lowest index)."""
    unc = np.stack([o.uncertainty(cfg.gating) for o in outputs])
    return np.argmax(unc, axis=0) if cfg.invert_gating else np.argmin(unc, axis=0)


def fuse_outputs_gated(outputs: Sequence[EvidentialOutput], cfg: FusionConfig) -> EvidentialOutput:
    _check_shapes(outputs, minimum=2)
    choice = gate_selection(outputs, cfg)
    return EvidentialOutput(*(
        np.choose(choice, [o.fields()[k] for o in outputs]) for k in range(4)
    ))


def fuse_outputs_gated_backward(outputs: Sequence[EvidentialOutput], cfg: FusionConfig, grads):
    choice = gate_selection(outputs, cfg)
    return [tuple(np.where(choice == b, g, 0.0) for g in grads) for b in range(len(outputs))]


# -- strategy b ---------------------------------------------------------------


def late_decoder_input(outputs: Sequence[EvidentialOutput]) -> np.ndarray:
    """(tokens, classes, 4 * branches) array of concatenated branch NIGs."""
    _check_shapes(outputs)
    return np.stack([f for o in outputs for f in o.fields()], axis=-1)


def fuse_outputs_late(outputs: Sequence[EvidentialOutput], weight: np.ndarray, bias: np.ndarray,
                      eps: float = DEFAULT_EPSILON) -> EvidentialOutput:
    """Linear decoder (4B -> 4) applied per token/class, then constrained."""
    x = late_decoder_input(outputs)
    if weight.shape != (x.shape[-1], 4) or bias.shape != (4,):
        raise ValueError(f"decoder expects weight ({x.shape[-1]}, 4) and bias (4,), "
                         f"got {weight.shape} and {bias.shape}")
    raw = x @ weight + bias
    return EvidentialOutput(*constrain_arrays(*np.moveaxis(raw, -1, 0), eps=eps))


def fuse_outputs_late_backward(outputs: Sequence[EvidentialOutput], weight, bias, grads):
    """Returns (branch gradients, d weight, d bias)."""
    x = late_decoder_input(outputs)
    raw = x @ weight + bias
    g_raw = np.stack(constrain_backward(raw[..., 1], raw[..., 2], raw[..., 3], *grads), axis=-1)
    d_weight = x.reshape(-1, x.shape[-1]).T @ g_raw.reshape(-1, 4)
    d_bias = g_raw.reshape(-1, 4).sum(axis=0)
    g_x = g_raw @ weight.T
    branch_grads = [tuple(g_x[..., 4 * b + k] for k in range(4)) for b in range(len(outputs))]
    return branch_grads, d_weight, d_bias
