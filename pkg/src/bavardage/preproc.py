"""Feature preprocessing applied identically to base and novel splits.

The transform order is: optional signed power transform, then centering
by the base-split mean, then L2 normalization. The default is the
center-and-normalize variant with the power step off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PreprocConfig:
    center: bool = True
    l2_normalize: bool = True
    power_beta: float | None = None  # signed |x|^beta, 0 < beta <= 1

    def __post_init__(self):
        if self.power_beta is not None and not 0.0 < self.power_beta <= 1.0:
            raise ValueError(f"power_beta must be in (0, 1], got {self.power_beta}")


def power_transform(features: np.ndarray, beta: float) -> np.ndarray:
    """Element-wise |x|^beta * sign(x)."""
    return np.sign(features) * np.abs(features) ** beta


def base_mean(features: np.ndarray, cfg: PreprocConfig) -> np.ndarray:
    """Grand mean of the base split after the config's power step.

    This is the vector that must be passed to :func:`preprocess` for
    every split so all features live in one space.
    """
    features = np.asarray(features, dtype=np.float64)
    if cfg.power_beta is not None:
        features = power_transform(features, cfg.power_beta)
    return features.mean(axis=0)


def preprocess(
    features: np.ndarray, base_mean: np.ndarray, cfg: PreprocConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Transform rows: power step, center by ``base_mean``, L2 normalize.

    Returns the transformed matrix and a boolean mask flagging rows
    whose norm vanished after centering; those rows are left
    unnormalized rather than divided by zero.
    """
    features = np.asarray(features, dtype=np.float64)
    base_mean = np.asarray(base_mean, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != base_mean.shape[0]:
        raise ValueError(
            f"dimension mismatch: features {features.shape} vs base mean {base_mean.shape}"
        )
    out = features.copy()
    if cfg.power_beta is not None:
        out = power_transform(out, cfg.power_beta)
    if cfg.center:
        out = out - base_mean
    zero_rows = np.zeros(out.shape[0], dtype=bool)
    if cfg.l2_normalize:
        norms = np.linalg.norm(out, axis=1)
        zero_rows = norms < np.finfo(np.float64).tiny
        out = out / np.where(zero_rows, 1.0, norms)[:, None]
    return out, zero_rows
