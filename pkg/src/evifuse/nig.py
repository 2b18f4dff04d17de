"""Normal-Inverse-Gamma evidential parameters and their summation operator.

A NIG(delta, gamma, alpha, beta) places a Gaussian prior on the unknown mean
and an inverse-gamma prior on the unknown variance of a scalar target.  Two
NIGs are merged with a closed-form summation that weights locations by gamma
and inflates beta by the disagreement between the inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

__all__ = [
    "InvalidNigParams",
    "NigParams",
    "NigMixture",
    "validate",
    "check",
    "expected_sigma2",
    "variance_mu",
    "confidence",
    "fuse_pair",
    "fuse_many",
    "fuse_arrays",
]


class InvalidNigParams(ValueError):
    """Raised when NIG parameters violate their domain constraints."""


@dataclass(frozen=True)
class NigParams:
    delta: float
    gamma: float
    alpha: float
    beta: float

    def astuple(self) -> tuple[float, float, float, float]:
        return (self.delta, self.gamma, self.alpha, self.beta)


@dataclass(frozen=True)
class NigMixture:
    """Uniformly weighted mixture of NIG components."""

    components: tuple[NigParams, ...]

    def __init__(self, components: Sequence[NigParams]):
        comps = tuple(components)
        if not comps:
            raise InvalidNigParams("a mixture needs at least one component")
        for c in comps:
            check(c)
        object.__setattr__(self, "components", comps)

    def __len__(self) -> int:
        return len(self.components)


def validate(p: NigParams) -> tuple[str, ...]:
    """Return the names of violated constraints; an empty tuple means valid."""
    bad = []
    for name, value in zip(("delta", "gamma", "alpha", "beta"), p.astuple()):
        if not math.isfinite(value):
            bad.append(name)
    if "gamma" not in bad and not p.gamma > 0:
        bad.append("gamma")
    if "alpha" not in bad and not p.alpha > 1:
        bad.append("alpha")
    if "beta" not in bad and not p.beta > 0:
        bad.append("beta")
    return tuple(bad)


def check(p: NigParams) -> NigParams:
    violations = validate(p)
    if violations:
        raise InvalidNigParams(f"invalid NIG parameters {p}: violates {', '.join(violations)}")
    return p


def expected_sigma2(p: NigParams) -> float:
    """E[sigma^2] = beta / (alpha - 1)."""
    check(p)
    return p.beta / (p.alpha - 1.0)


def variance_mu(p: NigParams) -> float:
    """Var[mu] = beta / (gamma * (alpha - 1))."""
    check(p)
    return p.beta / (p.gamma * (p.alpha - 1.0))


def confidence(p: NigParams) -> float:
    """Evidence strength 2*gamma + alpha."""
    check(p)
    return 2.0 * p.gamma + p.alpha


def fuse_arrays(d1, g1, a1, b1, d2, g2, a2, b2):
    """Elementwise NIG summation on scalars or numpy arrays.

    No validation is done here; callers own the domain checks.
    """
    gamma = g1 + g2
    delta = (g1 * d1 + g2 * d2) / gamma
    alpha = a1 + a2 + 0.5
    beta = b1 + b2 + 0.5 * g1 * (d1 - delta) ** 2 + 0.5 * g2 * (d2 - delta) ** 2
    return delta, gamma, alpha, beta


def fuse_pair(t: NigParams, i: NigParams) -> NigParams:
    """Merge two NIG distributions with the summation operator."""
    check(t)
    check(i)
    out = NigParams(*(float(v) for v in fuse_arrays(*t.astuple(), *i.astuple())))
    if validate(out):
        raise InvalidNigParams(f"fusion of {t} and {i} produced non-finite or invalid result {out}")
    return out


def fuse_many(components: NigMixture | Sequence[NigParams]) -> NigParams:
    """Fold fuse_pair left to right over the mixture components."""
    comps = components.components if isinstance(components, NigMixture) else tuple(components)
    if not comps:
        raise InvalidNigParams("cannot fuse an empty mixture")
    if len(comps) == 1:
        return check(comps[0])
    return reduce(fuse_pair, comps)
