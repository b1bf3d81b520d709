"""Mean-field inference for the reduced-space Gaussian mixture.

The mixture weights carry a symmetric Dirichlet posterior and each
class centroid an isotropic Gaussian posterior; the shared precision is
fixed at t_vb times the identity and never learned. The M step updates
the posterior parameters from the current responsibilities, the E step
updates responsibilities from the posterior, and the evidence lower
bound ties the two together as a convergence diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import digamma, normalize_log_rows
from .softkmeans import SoftAssignments, one_hot

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class VBPriors:
    """Symmetric priors shared by all classes.

    alpha_o is the Dirichlet concentration, beta_o the centroid
    mobility (larger keeps centroids near m_o), m_o the centroid prior
    mean in reduced space, and t_vb the fixed isotropic precision scale.
    beta_o = 0 is the degenerate no-anchor limit (centroids become
    plain weighted means); it is only usable while every class keeps
    nonzero responsibility mass, and the ELBO is undefined there.
    """

    alpha_o: float
    beta_o: float
    m_o: np.ndarray
    t_vb: float

    def __post_init__(self):
        if self.alpha_o <= 0 or self.t_vb <= 0:
            raise ValueError("alpha_o and t_vb must be positive")
        if self.beta_o < 0:
            raise ValueError(f"beta_o must be non-negative, got {self.beta_o}")
        object.__setattr__(self, "m_o", np.asarray(self.m_o, dtype=np.float64))
        if not np.all(np.isfinite(self.m_o)):
            raise ValueError("m_o must be finite")


@dataclass(frozen=True)
class VBPosterior:
    """Per-class posterior parameters: Dirichlet weights and centroid Gaussians."""

    alpha: np.ndarray  # (K,)
    beta: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)


def m_step(reduced: np.ndarray, assignments: SoftAssignments, priors: VBPriors) -> VBPosterior:
    """Posterior parameter updates from the current responsibilities.

    For each class: alpha = alpha_o + N_k, beta = beta_o + N_k, and the
    mean is the prior-anchored weighted average
    (beta_o * m_o + sum_n o_nk u_n) / beta.
    """
    o = assignments.matrix
    counts = o.sum(axis=0)
    alpha = priors.alpha_o + counts
    beta = priors.beta_o + counts
    means = (priors.beta_o * priors.m_o + o.T @ reduced) / beta[:, None]
    return VBPosterior(alpha=alpha, beta=beta, means=means)


def e_step(
    reduced: np.ndarray,
    posterior: VBPosterior,
    priors: VBPriors,
    support_mask: np.ndarray | None = None,
    support_labels: np.ndarray | None = None,
) -> SoftAssignments:
    """Responsibility updates from the current posterior.

    The unnormalized log responsibility of row n for class k is the
    expected log mixing weight (a digamma difference) plus the expected
    Gaussian log density, whose centroid uncertainty contributes the
    d / beta_k correction. Rows are softmax-normalized; rows under
    ``support_mask`` are then re-clamped one-hot on ``support_labels``.
    """
    n, d = reduced.shape
    k = len(posterior.alpha)
    t = priors.t_vb
    e_log_pi = np.array([digamma(a) for a in posterior.alpha]) - digamma(posterior.alpha.sum())
    sq = ((reduced[:, None, :] - posterior.means[None, :, :]) ** 2).sum(axis=2)
    log_rho = (
        e_log_pi[None, :]
        + 0.5 * d * (math.log(t) - _LOG_2PI)
        - 0.5 * (d / posterior.beta)[None, :]
        - 0.5 * t * sq
    )
    o = normalize_log_rows(log_rho)
    if support_mask is None:
        mask = np.zeros(n, dtype=bool)
    else:
        mask = np.asarray(support_mask, dtype=bool)
        if support_labels is None:
            raise ValueError("support_labels are required when support_mask is given")
        o[mask] = one_hot(np.asarray(support_labels), k)
    return SoftAssignments(matrix=o, support_mask=mask)


def compute_elbo(
    reduced: np.ndarray,
    assignments: SoftAssignments,
    posterior: VBPosterior,
    priors: VBPriors,
) -> float:
    """Evidence lower bound of the current variational state.

    Assembled from the closed-form Dirichlet, Gaussian, and categorical
    expectations. Clamped rows participate through their fixed one-hot
    responsibilities (their assignment entropy is zero), so alternating
    e_step / m_step with a fixed projection can never decrease this
    value.
    """
    o = assignments.matrix
    n, d = reduced.shape
    k = len(posterior.alpha)
    t = priors.t_vb
    alpha_total = posterior.alpha.sum()
    e_log_pi = np.array([digamma(a) for a in posterior.alpha]) - digamma(alpha_total)
    sq = ((reduced[:, None, :] - posterior.means[None, :, :]) ** 2).sum(axis=2)

    gauss_const = 0.5 * d * (math.log(t) - _LOG_2PI)
    e_log_px = np.sum(o * (gauss_const - 0.5 * (d / posterior.beta)[None, :] - 0.5 * t * sq))
    e_log_pz = np.sum(o * e_log_pi[None, :])
    e_log_ppi = (
        math.lgamma(k * priors.alpha_o)
        - k * math.lgamma(priors.alpha_o)
        + (priors.alpha_o - 1.0) * e_log_pi.sum()
    )
    mean_shift = np.sum((posterior.means - priors.m_o) ** 2, axis=1)
    e_log_pmu = np.sum(
        0.5 * d * (math.log(priors.beta_o) + math.log(t) - _LOG_2PI)
        - 0.5 * (priors.beta_o * t * mean_shift + priors.beta_o * d / posterior.beta)
    )

    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(o > 0.0, o * np.log(o), 0.0)
    entropy_z = -np.sum(plogp)
    e_log_qpi = (
        math.lgamma(alpha_total)
        - np.sum([math.lgamma(a) for a in posterior.alpha])
        + np.sum((posterior.alpha - 1.0) * e_log_pi)
    )
    entropy_mu = np.sum(
        0.5 * d * (1.0 + _LOG_2PI) - 0.5 * d * (np.log(posterior.beta) + math.log(t))
    )
    return float(e_log_px + e_log_pz + e_log_ppi + e_log_pmu + entropy_z - e_log_qpi + entropy_mu)
