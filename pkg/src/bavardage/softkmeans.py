"""Temperature-scaled soft k-means with labeled anchors.

Produces the initial soft class assignments: support rows are clamped
one-hot on their true label, query rows get softmax responsibilities
from squared distances to the centroids, and centroids are re-estimated
from all rows with their current weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import normalize_log_rows
from .sampler import TaskInstance


@dataclass
class SoftAssignments:
    """Row-stochastic responsibility matrix with clamped support rows."""

    matrix: np.ndarray  # (N, K), rows sum to 1
    support_mask: np.ndarray  # (N,) bool, True where clamped

    @property
    def ways(self) -> int:
        return self.matrix.shape[1]

    def counts(self) -> np.ndarray:
        """Effective per-class sample counts (column sums)."""
        return self.matrix.sum(axis=0)

    def validate(self, atol: float = 1e-9):
        sums = self.matrix.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > atol:
            raise ValueError(f"rows must sum to 1, worst deviation {np.max(np.abs(sums - 1.0)):g}")
        clamped = self.matrix[self.support_mask]
        if clamped.size and not np.all(np.isin(clamped, (0.0, 1.0))):
            raise ValueError("support rows must be exact one-hot")


def one_hot(labels: np.ndarray, ways: int) -> np.ndarray:
    out = np.zeros((len(labels), ways))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def soft_kmeans_init(
    task: TaskInstance, t_km: float, max_iter: int = 20, tol: float = 1e-4
) -> SoftAssignments:
    """Initial assignments via soft k-means at inverse temperature ``t_km``.

    Centroids start at the support class means. Each iteration assigns
    query rows by softmax of -t_km/2 times squared distance, then moves
    centroids to the responsibility-weighted mean over all rows, support
    included with weight one. Stops when the largest assignment change
    falls below ``tol`` or after ``max_iter`` iterations.
    """
    if t_km <= 0:
        raise ValueError(f"t_km must be positive, got {t_km}")
    x = task.features
    k = task.ways
    n_support = len(task.support_labels)
    clamped = one_hot(task.support_labels, k)
    centroids = np.stack(
        [task.support_features[task.support_labels == j].mean(axis=0) for j in range(k)]
    )
    mask = np.zeros(x.shape[0], dtype=bool)
    mask[:n_support] = True

    o = np.vstack([clamped, np.full((x.shape[0] - n_support, k), 1.0 / k)])
    for _ in range(max_iter):
        sq = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        o_new = o.copy()
        o_new[~mask] = normalize_log_rows(-0.5 * t_km * sq[~mask])
        delta = np.max(np.abs(o_new - o)) if o.size else 0.0
        o = o_new
        if delta < tol:
            break
        weights = o.sum(axis=0)
        centroids = (o.T @ x) / weights[:, None]
    return SoftAssignments(matrix=o, support_mask=mask)
