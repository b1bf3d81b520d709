"""Semi-supervised clustering for transductive few-shot classification.

A soft k-means initializer feeds an iterated loop of discriminative
dimension reduction and variational Bayesian mixture inference; the
harness evaluates either method over seeded episode streams with
reproducible, order-independent aggregation.
"""

from .featurestore import (
    BaseStatistics,
    BundleFormatError,
    FeatureBundle,
    compute_base_statistics,
    load_bundle,
    save_bundle,
)
from .harness import (
    METHODS,
    PRESETS,
    SWEEP_AXES,
    EvaluationResult,
    RunConfig,
    apply_preset,
    evaluate,
    evaluate_bundles,
    result_to_json,
    sweep,
    sweep_bundles,
    sweep_table,
    synth_generate,
)
from .numerics import (
    RNG_ALGORITHM,
    EigenDecomposition,
    digamma,
    normalize_log_rows,
    sym_eigh,
    task_rng,
)
from .pipeline import BavardageConfig, Prediction, run_bavardage, run_soft_kmeans_baseline
from .plda import (
    PldaProjection,
    SpheredTask,
    between_scatter,
    build_sphering,
    estimate_offset_centroids,
    plda_project,
    sphere_rows,
)
from .preproc import PreprocConfig, base_mean, power_transform, preprocess
from .sampler import (
    TaskConfig,
    TaskInfeasibleError,
    TaskInstance,
    apportion_counts,
    sample_task,
)
from .softkmeans import SoftAssignments, one_hot, soft_kmeans_init
from .vb import VBPosterior, VBPriors, compute_elbo, e_step, m_step

__version__ = "0.1.0"

__all__ = [
    "BaseStatistics",
    "BavardageConfig",
    "BundleFormatError",
    "EigenDecomposition",
    "EvaluationResult",
    "FeatureBundle",
    "METHODS",
    "PRESETS",
    "PldaProjection",
    "Prediction",
    "PreprocConfig",
    "RNG_ALGORITHM",
    "RunConfig",
    "SWEEP_AXES",
    "SoftAssignments",
    "SpheredTask",
    "TaskConfig",
    "TaskInfeasibleError",
    "TaskInstance",
    "VBPosterior",
    "VBPriors",
    "apply_preset",
    "apportion_counts",
    "base_mean",
    "between_scatter",
    "build_sphering",
    "compute_base_statistics",
    "compute_elbo",
    "digamma",
    "e_step",
    "estimate_offset_centroids",
    "evaluate",
    "evaluate_bundles",
    "load_bundle",
    "m_step",
    "normalize_log_rows",
    "one_hot",
    "plda_project",
    "power_transform",
    "preprocess",
    "result_to_json",
    "run_bavardage",
    "run_soft_kmeans_baseline",
    "sample_task",
    "save_bundle",
    "soft_kmeans_init",
    "sphere_rows",
    "sweep",
    "sweep_bundles",
    "sweep_table",
    "sym_eigh",
    "synth_generate",
    "task_rng",
]
