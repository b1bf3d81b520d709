"""Discriminant projection: sphere with the base within-class scatter,
then project onto the leading eigendirections of the soft between-class
scatter.

The sphering transform is built once per run from the base statistics
and shared read-only across tasks; the projection itself is recomputed
per task from the current soft assignments, so the reduced space adapts
as the assignments are refined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .featurestore import BaseStatistics
from .numerics import sym_eigh
from .softkmeans import SoftAssignments

# Eigenvalues below this are treated as noise directions: their inverse
# square roots would blow past any reasonable clamp.
_EIGENVALUE_FLOOR = 1e-12


@dataclass(frozen=True)
class PldaProjection:
    """Pieces of the projection from ambient dimension D to K-1.

    ``rotation`` holds the scatter eigenvectors as columns, ``scaling``
    the clamped inverse-square-root eigenvalues, ``basis`` the top
    between-scatter eigenvectors in sphered space, and ``composite`` the
    single D x (K-1) matrix W with u_n = W^T x_n.
    """

    rotation: np.ndarray  # (D, D)
    scaling: np.ndarray  # (D,)
    basis: np.ndarray  # (D, K-1)
    composite: np.ndarray  # (D, K-1)


@dataclass(frozen=True)
class SpheredTask:
    sphered: np.ndarray  # (N, D)
    reduced: np.ndarray  # (N, K-1), always sphered @ basis


def build_sphering(stats: BaseStatistics, s_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotation and per-direction scaling that whiten the base scatter.

    Scaling is the inverse square root of each eigenvalue, clamped to
    ``s_max``; eigenvalues are floored at 1e-12 first, so degenerate
    directions always saturate the clamp instead of overflowing.
    """
    if s_max <= 0:
        raise ValueError(f"s_max must be positive, got {s_max}")
    eig = sym_eigh(stats.scatter)
    lam = np.maximum(eig.values, _EIGENVALUE_FLOOR)
    scaling = np.minimum(lam ** -0.5, s_max)
    return eig.vectors, scaling


def sphere_rows(features: np.ndarray, rotation: np.ndarray, scaling: np.ndarray) -> np.ndarray:
    """Apply the whitening transform to row vectors."""
    return (features @ rotation) * scaling


def estimate_offset_centroids(
    sphered: np.ndarray, assignments: SoftAssignments, gamma: float
) -> np.ndarray:
    """Soft class centroids shrunk toward zero by the offset ``gamma``.

    Each centroid is the responsibility-weighted sum of rows divided by
    gamma plus the effective class count.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    counts = assignments.counts()
    if gamma == 0.0 and np.any(counts == 0.0):
        raise ZeroDivisionError("gamma = 0 with an empty class leaves a centroid undefined")
    return (assignments.matrix.T @ sphered) / (gamma + counts)[:, None]


def between_scatter(centroids: np.ndarray) -> np.ndarray:
    """Scatter of the class centroids about their unweighted mean.

    Rank is at most K-1 by construction.
    """
    if centroids.shape[0] < 2:
        raise ValueError(f"need at least 2 centroids, got {centroids.shape[0]}")
    dev = centroids - centroids.mean(axis=0)
    psi = dev.T @ dev
    return (psi + psi.T) / 2.0


def plda_project(
    task_features: np.ndarray,
    stats: BaseStatistics,
    s_max: float,
    assignments: SoftAssignments,
    gamma: float,
    sphering: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[SpheredTask, PldaProjection]:
    """Full projection pipeline for one task.

    Spheres the rows, estimates offset centroids from the current
    assignments, and projects onto the top K-1 eigenvectors of their
    between-scatter. ``sphering`` may carry a precomputed
    (rotation, scaling) pair so the base eigendecomposition is not
    repeated per call.
    """
    rotation, scaling = sphering if sphering is not None else build_sphering(stats, s_max)
    sphered = sphere_rows(task_features, rotation, scaling)
    centroids = estimate_offset_centroids(sphered, assignments, gamma)
    psi = between_scatter(centroids)
    k = assignments.ways
    # eigh of the zero matrix still yields an orthonormal basis, so rank
    # deficiency below K-1 keeps the reduced shape fixed
    basis = sym_eigh(psi).vectors[:, : k - 1]
    reduced = sphered @ basis
    composite = (rotation * scaling) @ basis
    projection = PldaProjection(
        rotation=rotation, scaling=scaling, basis=basis, composite=composite
    )
    return SpheredTask(sphered=sphered, reduced=reduced), projection
