"""Few-shot task generation under balanced and Dirichlet-unbalanced protocols.

A task draws K distinct classes from a novel bundle, L labeled support
samples per class, and Q query samples distributed either evenly
(balanced) or according to a symmetric Dirichlet draw (dirichlet). Every
task is fully determined by (seed, task_index), so tasks can be
generated concurrently and in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .featurestore import FeatureBundle
from .numerics import task_rng

_MAX_PROPORTION_REDRAWS = 100


class TaskInfeasibleError(ValueError):
    """A class cannot supply the samples its drawn counts require."""


@dataclass(frozen=True)
class TaskConfig:
    ways: int = 5
    shots: int = 1
    query_total: int = 75
    setting: str = "dirichlet"  # "balanced" | "dirichlet"
    alpha_star: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.ways < 2:
            raise ValueError(f"ways must be >= 2, got {self.ways}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if self.query_total < 1:
            raise ValueError(f"query_total must be >= 1, got {self.query_total}")
        if self.alpha_star <= 0:
            raise ValueError(f"alpha_star must be positive, got {self.alpha_star}")
        if self.setting not in ("balanced", "dirichlet"):
            raise ValueError(f"unknown setting {self.setting!r}")


@dataclass(frozen=True)
class TaskInstance:
    """One few-shot episode with hidden query labels for scoring."""

    support_features: np.ndarray  # (K*L, D)
    support_labels: np.ndarray  # (K*L,) local ids in [0, K)
    query_features: np.ndarray  # (Q, D)
    query_labels_hidden: np.ndarray  # (Q,) local ids, scoring only
    class_map: tuple[str, ...]  # local id -> original class id
    source_rows: np.ndarray  # (K*L + Q,) bundle row indices, support first

    @property
    def ways(self) -> int:
        return len(self.class_map)

    @property
    def features(self) -> np.ndarray:
        """All task rows, support block first then query block."""
        return np.vstack([self.support_features, self.query_features])


def apportion_counts(proportions: np.ndarray, total: int) -> np.ndarray:
    """Round a simplex vector to integer counts summing exactly to ``total``.

    Largest-remainder apportionment: floor the scaled proportions, then
    hand the leftover units to the largest fractional remainders, ties
    broken toward the lower index.
    """
    p = np.asarray(proportions, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("proportions must be a vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"proportions must be a simplex vector, got sum {p.sum()!r}")
    scaled = p * total
    counts = np.floor(scaled).astype(np.int64)
    remainder = scaled - counts
    missing = total - int(counts.sum())
    if missing > 0:
        # stable sort keeps ties in index order after the descending flip
        order = np.argsort(-remainder, kind="stable")
        counts[order[:missing]] += 1
    return counts


def _query_counts(cfg: TaskConfig, class_sizes: np.ndarray, class_names, rng) -> np.ndarray:
    k, q = cfg.ways, cfg.query_total
    capacity = class_sizes - cfg.shots
    if cfg.setting == "balanced":
        if q % k != 0:
            raise TaskInfeasibleError(
                f"balanced setting requires ways | query_total, got {k} and {q}"
            )
        counts = np.full(k, q // k, dtype=np.int64)
        short = np.nonzero(capacity < counts)[0]
        if short.size:
            raise TaskInfeasibleError(
                f"class {class_names[short[0]]!r} has {class_sizes[short[0]]} samples, "
                f"needs {cfg.shots + counts[short[0]]}"
            )
        return counts
    for _ in range(_MAX_PROPORTION_REDRAWS):
        counts = apportion_counts(rng.dirichlet(np.full(k, cfg.alpha_star)), q)
        if np.all(capacity >= counts):
            return counts
    short = int(np.nonzero(capacity < counts)[0][0])
    raise TaskInfeasibleError(
        f"class {class_names[short]!r} has {class_sizes[short]} samples, "
        f"needs {cfg.shots + counts[short]} after {_MAX_PROPORTION_REDRAWS} proportion redraws"
    )


def sample_task(bundle: FeatureBundle, cfg: TaskConfig, task_index: int) -> TaskInstance:
    """Draw one task. Deterministic given (bundle, cfg, task_index)."""
    class_ids = bundle.class_ids
    if len(class_ids) < cfg.ways:
        raise TaskInfeasibleError(
            f"bundle has {len(class_ids)} classes, task needs {cfg.ways}"
        )
    rng = task_rng(cfg.seed, task_index)
    chosen = rng.choice(len(class_ids), size=cfg.ways, replace=False)
    class_map = tuple(class_ids[i] for i in chosen)
    class_rows = [bundle.class_index[c] for c in class_map]
    sizes = np.array([rows.size for rows in class_rows])
    counts = _query_counts(cfg, sizes, class_map, rng)

    support_rows, query_rows = [], []
    support_labels, query_labels = [], []
    for k, rows in enumerate(class_rows):
        draw = rng.choice(rows, size=cfg.shots + counts[k], replace=False)
        support_rows.append(draw[: cfg.shots])
        query_rows.append(draw[cfg.shots :])
        support_labels.extend([k] * cfg.shots)
        query_labels.extend([k] * int(counts[k]))
    support_rows = np.concatenate(support_rows)
    query_rows = np.concatenate(query_rows)
    return TaskInstance(
        support_features=bundle.features[support_rows],
        support_labels=np.asarray(support_labels, dtype=np.int64),
        query_features=bundle.features[query_rows],
        query_labels_hidden=np.asarray(query_labels, dtype=np.int64),
        class_map=class_map,
        source_rows=np.concatenate([support_rows, query_rows]),
    )
