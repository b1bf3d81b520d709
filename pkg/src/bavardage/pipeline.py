"""Full clustering pipeline for one task.

Soft k-means produces the initial responsibilities; each subsequent
iteration re-estimates the discriminative projection from the current
responsibilities, then runs one variational M step and one E step in
the reduced space. Hard labels are the final row-wise argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .featurestore import BaseStatistics
from .plda import build_sphering, plda_project
from .sampler import TaskInstance
from .softkmeans import SoftAssignments, soft_kmeans_init
from .vb import VBPriors, compute_elbo, e_step, m_step


@dataclass(frozen=True)
class BavardageConfig:
    """Knobs for the full pipeline.

    t_km and t_vb are the inverse-temperature scales of the k-means and
    variational E steps; s_max bounds the per-direction whitening gain.
    alpha_o and beta_o are the Dirichlet and centroid-mobility priors,
    gamma the centroid shrinkage used inside the projection. n_step
    fixes the number of projection/M/E rounds; early_stop_tol, when
    set, ends the loop once the assignment max-change falls below it.
    """

    t_km: float = 10.0
    t_vb: float = 50.0
    s_max: float = 2.0
    alpha_o: float = 2.0
    beta_o: float = 10.0
    gamma: float = 10.0
    n_step: int = 20
    softkmeans_max_iter: int = 20
    softkmeans_tol: float = 1e-4
    early_stop_tol: float | None = None

    def __post_init__(self):
        if min(self.t_km, self.t_vb, self.s_max, self.alpha_o, self.beta_o) <= 0:
            raise ValueError("t_km, t_vb, s_max, alpha_o and beta_o must be positive")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.n_step < 1:
            raise ValueError(f"n_step must be at least 1, got {self.n_step}")
        if self.softkmeans_max_iter < 1 or self.softkmeans_tol <= 0:
            raise ValueError("soft k-means needs max_iter >= 1 and tol > 0")


@dataclass(frozen=True)
class Prediction:
    """Outcome for one task.

    labels holds the hard query predictions (local class ids, argmax of
    the final responsibilities, ties toward the lowest index).
    assignments is the full final soft matrix including support rows;
    trace records (elbo, assignment max-change) per iteration.
    """

    labels: np.ndarray
    assignments: SoftAssignments
    trace: tuple[tuple[float, float], ...]


def _query_argmax(assignments: SoftAssignments) -> np.ndarray:
    return np.argmax(assignments.matrix[~assignments.support_mask], axis=1)


def run_bavardage(
    task: TaskInstance,
    stats: BaseStatistics,
    cfg: BavardageConfig,
    sphering: tuple[np.ndarray, np.ndarray] | None = None,
) -> Prediction:
    """Soft k-means init, then n_step rounds of projection + M step + E step.

    ``stats`` must come from the same preprocessing that produced the
    task features. ``sphering`` may carry the precomputed
    (rotation, scaling) pair shared across the tasks of a run.
    """
    if sphering is None:
        sphering = build_sphering(stats, cfg.s_max)
    features = task.features
    assignments = soft_kmeans_init(
        task, cfg.t_km, max_iter=cfg.softkmeans_max_iter, tol=cfg.softkmeans_tol
    )
    priors = VBPriors(
        alpha_o=cfg.alpha_o,
        beta_o=cfg.beta_o,
        m_o=np.zeros(task.ways - 1),
        t_vb=cfg.t_vb,
    )
    trace = []
    for _ in range(cfg.n_step):
        sphered_task, _ = plda_project(
            features, stats, cfg.s_max, assignments, cfg.gamma, sphering=sphering
        )
        posterior = m_step(sphered_task.reduced, assignments, priors)
        updated = e_step(
            sphered_task.reduced,
            posterior,
            priors,
            support_mask=assignments.support_mask,
            support_labels=task.support_labels,
        )
        max_change = float(np.max(np.abs(updated.matrix - assignments.matrix)))
        assignments = updated
        elbo = compute_elbo(sphered_task.reduced, assignments, posterior, priors)
        trace.append((elbo, max_change))
        if cfg.early_stop_tol is not None and max_change < cfg.early_stop_tol:
            break
    return Prediction(
        labels=_query_argmax(assignments),
        assignments=assignments,
        trace=tuple(trace),
    )


def run_soft_kmeans_baseline(
    task: TaskInstance,
    stats: BaseStatistics,
    cfg: BavardageConfig,
    sphering: tuple[np.ndarray, np.ndarray] | None = None,
) -> Prediction:
    """Soft k-means alone: the init stage's argmax, no projection or VB.

    ``stats`` and ``sphering`` are accepted so both methods run under
    one calling convention; neither is used.
    """
    del stats, sphering
    assignments = soft_kmeans_init(
        task, cfg.t_km, max_iter=cfg.softkmeans_max_iter, tol=cfg.softkmeans_tol
    )
    return Prediction(
        labels=_query_argmax(assignments),
        assignments=assignments,
        trace=(),
    )
