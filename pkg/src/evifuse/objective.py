"""Evidential training objective: NIG negative log-likelihood, evidence
regularizer, their combination, and analytic gradients.

The scalar functions validate their inputs and are the public surface.  The
``*_arrays`` kernels compute the same quantities elementwise on numpy arrays
without validation and are what the training loop calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import digamma, gammaln

from .nig import InvalidNigParams, NigParams, check

__all__ = [
    "LossConfig",
    "LossBreakdown",
    "NigGradient",
    "nll_loss",
    "regularizer",
    "evidential_loss",
    "total_loss",
    "nll_gradient",
    "regularizer_gradient",
    "finite_difference_gradient",
    "nll_arrays",
    "nll_grad_arrays",
    "regularizer_arrays",
    "regularizer_grad_arrays",
]

_HALF_LOG_PI = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class LossConfig:
    lam: float = 0.01
    classification_weight: float = 1.0
    # False trains on the classification term alone (the plain baseline).
    evidential: bool = True
    # Softmax temperature of the classification term over per-class deltas.
    temperature: float = 0.1

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if not math.isfinite(self.classification_weight) or self.classification_weight < 0:
            raise ValueError(
                f"classification_weight must be finite and >= 0, got {self.classification_weight}"
            )
        if not (math.isfinite(self.temperature) and self.temperature > 0):
            raise ValueError(f"temperature must be finite and > 0, got {self.temperature}")


@dataclass(frozen=True)
class LossBreakdown:
    nll: float
    regularizer: float
    evidential_total: float
    classification: float
    grand_total: float

    @classmethod
    def compose(cls, nll: float, reg: float, classification: float, cfg: LossConfig) -> "LossBreakdown":
        ev = nll + cfg.lam * reg
        return cls(nll, reg, ev, classification, ev + cfg.classification_weight * classification)


@dataclass(frozen=True)
class NigGradient:
    d_delta: float
    d_gamma: float
    d_alpha: float
    d_beta: float

    def astuple(self) -> tuple[float, float, float, float]:
        return (self.d_delta, self.d_gamma, self.d_alpha, self.d_beta)


# -- array kernels ---------------------------------------------------------


def nll_arrays(y, delta, gamma, alpha, beta):
    omega = 2.0 * beta * (1.0 + gamma)
    return (
        _HALF_LOG_PI
        - 0.5 * np.log(gamma)
        - alpha * np.log(omega)
        + (alpha + 0.5) * np.log((y - delta) ** 2 * gamma + omega)
        + gammaln(alpha)
        - gammaln(alpha + 0.5)
    )


def nll_grad_arrays(y, delta, gamma, alpha, beta):
    """Partials of the NLL with respect to (delta, gamma, alpha, beta)."""
    r = y - delta
    omega = 2.0 * beta * (1.0 + gamma)
    s = r * r * gamma + omega
    d_delta = -(alpha + 0.5) * 2.0 * r * gamma / s
    d_gamma = -0.5 / gamma - alpha / (1.0 + gamma) + (alpha + 0.5) * (r * r + 2.0 * beta) / s
    d_alpha = np.log(s) - np.log(omega) + digamma(alpha) - digamma(alpha + 0.5)
    d_beta = -alpha / beta + (alpha + 0.5) * 2.0 * (1.0 + gamma) / s
    return d_delta, d_gamma, d_alpha, d_beta


def regularizer_arrays(y, delta, gamma, alpha):
    return np.abs(y - delta) * (2.0 * gamma + alpha)


def regularizer_grad_arrays(y, delta, gamma, alpha):
    """Partials of the regularizer; zero subgradient at y == delta."""
    r = y - delta
    a = np.abs(r)
    d_delta = -np.sign(r) * (2.0 * gamma + alpha)
    return d_delta, 2.0 * a, a, np.zeros_like(a * gamma)


# -- scalar API ------------------------------------------------------------


def _checked(target: float, p: NigParams) -> NigParams:
    if not math.isfinite(target):
        raise InvalidNigParams(f"target must be finite, got {target}")
    return check(p)


def nll_loss(target: float, p: NigParams) -> float:
    _checked(target, p)
    return float(nll_arrays(target, *p.astuple()))


def regularizer(target: float, p: NigParams) -> float:
    """|target - delta| * (2 gamma + alpha)."""
    _checked(target, p)
    return abs(target - p.delta) * (2.0 * p.gamma + p.alpha)


def evidential_loss(target: float, p: NigParams, cfg: LossConfig) -> float:
    return nll_loss(target, p) + cfg.lam * regularizer(target, p)


def total_loss(evidential: float, classification: float, cfg: LossConfig) -> float:
    return evidential + cfg.classification_weight * classification


def nll_gradient(target: float, p: NigParams) -> NigGradient:
    _checked(target, p)
    return NigGradient(*(float(g) for g in nll_grad_arrays(target, *p.astuple())))


def regularizer_gradient(target: float, p: NigParams) -> NigGradient:
    _checked(target, p)
    d, g, a, b = regularizer_grad_arrays(target, p.delta, p.gamma, p.alpha)
    return NigGradient(float(d), float(g), float(a), float(b))


def finite_difference_gradient(
    loss: Callable[[float, NigParams], float], target: float, p: NigParams, h: float = 1e-5
) -> NigGradient:
    """Central differences of ``loss(target, p)`` in each NIG parameter."""
    base = list(p.astuple())
    out = []
    for k in range(4):
        hi, lo = list(base), list(base)
        hi[k] += h
        lo[k] -= h
        out.append((loss(target, NigParams(*hi)) - loss(target, NigParams(*lo))) / (2.0 * h))
    return NigGradient(*out)
