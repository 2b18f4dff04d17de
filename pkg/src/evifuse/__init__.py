"""Evidential multimodal fusion for sequence labeling.

Per-modality Normal-Inverse-Gamma predictive distributions, their
closed-form fusion, the evidential training objective and a small
multimodal tagger for comparing fusion strategies.
"""

from .errors import ConfigError, DataError, DivergenceError, EvifuseError
from .fusion import FusionConfig
from .nig import InvalidNigParams, NigMixture, NigParams, confidence, expected_sigma2, fuse_many, fuse_pair, validate, variance_mu
from .objective import LossConfig, evidential_loss, nll_loss, regularizer, total_loss

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DivergenceError",
    "EvifuseError",
    "FusionConfig",
    "InvalidNigParams",
    "LossConfig",
    "NigMixture",
    "NigParams",
    "confidence",
    "evidential_loss",
    "expected_sigma2",
    "fuse_many",
    "fuse_pair",
    "nll_loss",
    "regularizer",
    "total_loss",
    "validate",
    "variance_mu",
]
