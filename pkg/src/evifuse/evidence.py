"""Per-token, per-class NIG outputs and the map from raw activations to them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .nig import InvalidNigParams, NigParams

DEFAULT_EPSILON = 1e-6

# Formula names accepted by ``fusion.gating`` and the uncertainty reports.
GATING_FORMULAS = ("var_mu", "e_sigma2")
GATING_ALIASES = {
    "var_mu": "var_mu",
    "beta_over_gamma_alpha": "var_mu",
    "e_sigma2": "e_sigma2",
    "beta_over_alpha": "e_sigma2",
}


def canonical_gating(name: str) -> str:
    try:
        return GATING_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown uncertainty formula {name!r}; expected one of {GATING_FORMULAS}") from None


def softplus(x):
    return np.logaddexp(0.0, x)


def constrain(raw_delta: float, raw_gamma: float, raw_alpha: float, raw_beta: float,
              eps: float = DEFAULT_EPSILON) -> NigParams:
    raws = (raw_delta, raw_gamma, raw_alpha, raw_beta)
    if not all(math.isfinite(r) for r in raws):
        raise InvalidNigParams(f"raw head outputs must be finite, got {raws}")
    d, g, a, b = constrain_arrays(*(np.float64(r) for r in raws), eps=eps)
    return NigParams(float(d), float(g), float(a), float(b))


def constrain_arrays(raw_delta, raw_gamma, raw_alpha, raw_beta, eps=DEFAULT_EPSILON):
    return (
        raw_delta,
        softplus(raw_gamma) + eps,
        1.0 + softplus(raw_alpha) + eps,
        softplus(raw_beta) + eps,
    )


def constrain_backward(raw_gamma, raw_alpha, raw_beta, g_delta, g_gamma, g_alpha, g_beta):
    """Push output gradients back to the raw activations."""
    return g_delta, g_gamma * expit(raw_gamma), g_alpha * expit(raw_alpha), g_beta * expit(raw_beta)


@dataclass
class EvidentialOutput:
    """NIG parameters for every token (rows) and tag class (columns)."""

    delta: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.delta.shape

    def fields(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.delta, self.gamma, self.alpha, self.beta)

    def at(self, token: int, cls: int) -> NigParams:
        return NigParams(*(float(f[token, cls]) for f in self.fields()))

    def invalid_mask(self) -> np.ndarray:
        finite = np.logical_and.reduce([np.isfinite(f) for f in self.fields()])
        ok = finite & (self.gamma > 0) & (self.alpha > 1) & (self.beta > 0)
        return ~ok

    def is_valid(self) -> bool:
        return not self.invalid_mask().any()

    def check(self) -> "EvidentialOutput":
        bad = self.invalid_mask()
        if bad.any():
            t, c = map(int, np.argwhere(bad)[0])
            raise InvalidNigParams(f"invalid NIG output at token {t}, class {c}: {self.at(t, c)}")
        return self

    def uncertainty(self, formula: str = "var_mu") -> np.ndarray:
        formula = canonical_gating(formula)
        es2 = self.beta / (self.alpha - 1.0)
        return es2 / self.gamma if formula == "var_mu" else es2
