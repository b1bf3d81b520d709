"""Benchmark harness: many-task evaluation with reproducible streams.

Given a base bundle (for preprocessing statistics) and a novel bundle
(for episode sampling), runs one of the registered methods over a fixed
number of tasks and aggregates accuracy with a 95% confidence interval.
Every result embeds the fully resolved configuration, the RNG algorithm
name, and an order-independent checksum of the sampled task stream, so
two runs can be compared field by field.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .featurestore import FeatureBundle, compute_base_statistics, load_bundle
from .numerics import RNG_ALGORITHM
from .pipeline import BavardageConfig, run_bavardage, run_soft_kmeans_baseline
from .plda import build_sphering
from .preproc import PreprocConfig, base_mean, preprocess
from .sampler import TaskConfig, TaskInstance, sample_task

METHODS = {
    "bavardage": run_bavardage,
    "soft_kmeans": run_soft_kmeans_baseline,
}

SWEEP_AXES = (
    "t_km",
    "t_vb",
    "s_max",
    "beta_o",
    "alpha_o",
    "alpha_star",
    "shots",
    "query_total",
)

# Temperature / clamp triples tuned per feature source and query setting;
# everything else keeps the library defaults.
PRESETS: dict[str, dict] = {
    "mini-balanced": {"setting": "balanced", "t_km": 10.0, "t_vb": 50.0, "s_max": 2.0},
    "mini-unbalanced": {"setting": "dirichlet", "t_km": 50.0, "t_vb": 50.0, "s_max": 1.0},
    "tiered-balanced": {"setting": "balanced", "t_km": 10.0, "t_vb": 100.0, "s_max": 2.0},
    "tiered-unbalanced": {"setting": "dirichlet", "t_km": 100.0, "t_vb": 100.0, "s_max": 1.0},
    "cub-balanced": {"setting": "balanced", "t_km": 10.0, "t_vb": 4.0, "s_max": 5.0},
    "cub-unbalanced": {"setting": "dirichlet", "t_km": 10.0, "t_vb": 4.0, "s_max": 5.0},
}
PRESETS["mini-wrn-unbalanced"] = dict(PRESETS["mini-unbalanced"])


@dataclass(frozen=True)
class RunConfig:
    """Everything one evaluation needs, bundled for echoing into results."""

    base_path: str | None = None
    novel_path: str | None = None
    task: TaskConfig = TaskConfig()
    model: BavardageConfig = BavardageConfig()
    preproc: PreprocConfig = PreprocConfig()
    method: str = "bavardage"
    tasks: int = 1000
    workers: int = 1
    output: str | None = None
    store_per_task: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {sorted(METHODS)}")
        if self.tasks < 1:
            raise ValueError(f"tasks must be >= 1, got {self.tasks}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class EvaluationResult:
    """Aggregate of one evaluation run.

    ci95 is the half-width 1.96 * sample std / sqrt(tasks), zero for a
    single task. task_checksum is the XOR of per-task digests, hence
    independent of evaluation order and worker count.
    """

    mean_accuracy: float
    ci95: float
    tasks: int
    method: str
    task_checksum: str
    config_echo: dict
    wall_time: float
    per_task_accuracies: tuple[float, ...] | None = None

    def to_json_dict(self) -> dict:
        per_task = self.per_task_accuracies
        return {
            "mean_accuracy": self.mean_accuracy,
            "ci95": self.ci95,
            "tasks": self.tasks,
            "method": self.method,
            "task_checksum": self.task_checksum,
            "config_echo": self.config_echo,
            "wall_time": self.wall_time,
            "per_task_accuracies": None if per_task is None else list(per_task),
        }


def result_to_json(result: EvaluationResult) -> str:
    return json.dumps(result.to_json_dict(), sort_keys=True, indent=2) + "\n"


def apply_preset(cfg: RunConfig, name: str) -> RunConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}")
    p = PRESETS[name]
    return replace(
        cfg,
        task=replace(cfg.task, setting=p["setting"]),
        model=replace(cfg.model, t_km=p["t_km"], t_vb=p["t_vb"], s_max=p["s_max"]),
    )


def _config_echo(cfg: RunConfig) -> dict:
    return {
        "base": None if cfg.base_path is None else str(cfg.base_path),
        "novel": None if cfg.novel_path is None else str(cfg.novel_path),
        "method": cfg.method,
        "tasks": cfg.tasks,
        "workers": cfg.workers,
        "output": None if cfg.output is None else str(cfg.output),
        "store_per_task": cfg.store_per_task,
        "rng_algorithm": RNG_ALGORITHM,
        "task": asdict(cfg.task),
        "model": asdict(cfg.model),
        "preproc": asdict(cfg.preproc),
    }


def _task_digest(task: TaskInstance, task_index: int) -> bytes:
    """Digest of the sampled episode itself, independent of any method."""
    h = hashlib.sha256()
    h.update(struct.pack("<q", task_index))
    h.update("\x1f".join(task.class_map).encode("utf-8"))
    h.update(task.source_rows.astype("<i8").tobytes())
    h.update(task.support_labels.astype("<i8").tobytes())
    h.update(task.query_labels_hidden.astype("<i8").tobytes())
    return h.digest()


def _combine_digests(digests) -> str:
    acc = bytes(32)
    for d in digests:
        acc = bytes(a ^ b for a, b in zip(acc, d))
    return acc.hex()


def _evaluate_one(payload, task_index: int):
    novel, stats, sphering, task_cfg, model_cfg, method = payload
    task = sample_task(novel, task_cfg, task_index)
    prediction = METHODS[method](task, stats, model_cfg, sphering=sphering)
    accuracy = float(np.mean(prediction.labels == task.query_labels_hidden))
    return task_index, accuracy, _task_digest(task, task_index)


# Worker-process state; populated once by the pool initializer so the
# per-task call ships only an integer.
_WORKER_PAYLOAD = None


def _worker_init(payload):
    global _WORKER_PAYLOAD
    _WORKER_PAYLOAD = payload


def _worker_run(task_index: int):
    return _evaluate_one(_WORKER_PAYLOAD, task_index)


def evaluate_bundles(
    base: FeatureBundle, novel: FeatureBundle, cfg: RunConfig
) -> EvaluationResult:
    """Run the configured method over cfg.tasks episodes and aggregate.

    Preprocessing statistics come from ``base``; episodes are sampled
    from ``novel``. Per-task results are keyed by task index and sorted
    before aggregation, so the outcome does not depend on worker count
    or completion order.
    """
    start = time.perf_counter()
    overlap = set(base.class_ids) & set(novel.class_ids)
    if overlap:
        warnings.warn(f"base and novel splits share {len(overlap)} class ids", stacklevel=2)
    mean_vec = base_mean(base.features, cfg.preproc)
    base_feats, base_zero = preprocess(base.features, mean_vec, cfg.preproc)
    novel_feats, novel_zero = preprocess(novel.features, mean_vec, cfg.preproc)
    n_zero = int(base_zero.sum() + novel_zero.sum())
    if n_zero:
        warnings.warn(f"{n_zero} rows had zero norm after centering; left unnormalized", stacklevel=2)
    stats = compute_base_statistics(base.with_features(base_feats))
    sphering = build_sphering(stats, cfg.model.s_max)
    payload = (novel.with_features(novel_feats), stats, sphering, cfg.task, cfg.model, cfg.method)

    if cfg.workers == 1:
        rows = [_evaluate_one(payload, idx) for idx in range(cfg.tasks)]
    else:
        chunk = max(1, cfg.tasks // (cfg.workers * 8))
        with ProcessPoolExecutor(
            max_workers=cfg.workers, initializer=_worker_init, initargs=(payload,)
        ) as pool:
            rows = list(pool.map(_worker_run, range(cfg.tasks), chunksize=chunk))
    rows.sort(key=lambda r: r[0])

    accuracies = np.array([r[1] for r in rows], dtype=np.float64)
    checksum = _combine_digests(r[2] for r in rows)
    if len(accuracies) > 1:
        ci95 = float(1.96 * accuracies.std(ddof=1) / math.sqrt(len(accuracies)))
    else:
        ci95 = 0.0
    return EvaluationResult(
        mean_accuracy=float(accuracies.mean()),
        ci95=ci95,
        tasks=cfg.tasks,
        method=cfg.method,
        task_checksum=checksum,
        config_echo=_config_echo(cfg),
        wall_time=round(time.perf_counter() - start, 6),
        per_task_accuracies=tuple(accuracies.tolist()) if cfg.store_per_task else None,
    )


def evaluate(cfg: RunConfig) -> EvaluationResult:
    """File-level entry point: load bundles, evaluate, optionally serialize."""
    if cfg.base_path is None or cfg.novel_path is None:
        raise ValueError("evaluate requires both base_path and novel_path")
    base = load_bundle(cfg.base_path, split_tag="base")
    novel = load_bundle(cfg.novel_path)
    result = evaluate_bundles(base, novel, cfg)
    if cfg.output is not None:
        out = Path(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(result_to_json(result))
    return result


def _with_axis_value(cfg: RunConfig, axis: str, value) -> RunConfig:
    if axis in ("shots", "query_total"):
        return replace(cfg, task=replace(cfg.task, **{axis: int(value)}))
    if axis == "alpha_star":
        return replace(cfg, task=replace(cfg.task, alpha_star=float(value)))
    return replace(cfg, model=replace(cfg.model, **{axis: float(value)}))


def sweep_bundles(
    base: FeatureBundle, novel: FeatureBundle, cfg: RunConfig, axis: str, values
) -> list[EvaluationResult]:
    """One evaluation per axis value; the seed (hence task stream) is shared."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}, expected one of {SWEEP_AXES}")
    return [
        evaluate_bundles(base, novel, _with_axis_value(cfg, axis, value)) for value in values
    ]


def sweep(cfg: RunConfig, axis: str, values) -> list[EvaluationResult]:
    if cfg.base_path is None or cfg.novel_path is None:
        raise ValueError("sweep requires both base_path and novel_path")
    base = load_bundle(cfg.base_path, split_tag="base")
    novel = load_bundle(cfg.novel_path)
    return sweep_bundles(base, novel, cfg, axis, values)


def sweep_table(axis: str, values, results: list[EvaluationResult]) -> str:
    """Plot-ready CSV: one row per axis value."""
    lines = [f"{axis},mean_accuracy,ci95,tasks,task_checksum"]
    for value, result in zip(values, results):
        lines.append(
            f"{value},{result.mean_accuracy:.6f},{result.ci95:.6f},"
            f"{result.tasks},{result.task_checksum}"
        )
    return "\n".join(lines) + "\n"


def synth_generate(
    classes: int,
    dim: int,
    samples_per_class: int,
    cluster_std: float,
    separation: float,
    within_cov_skew: float,
    seed: int = 0,
) -> tuple[FeatureBundle, FeatureBundle]:
    """Synthetic base/novel pair with one shared within-class covariance.

    Class means are drawn uniformly on the sphere of radius
    ``separation``; all samples share the anisotropic covariance
    Q diag(lam) Q^T, where lam spans cluster_std^2 * exp(+-within_cov_skew)
    log-linearly and Q is a random rotation. The first half of the
    classes form the base split, the rest the novel split.
    """
    if classes < 4:
        raise ValueError(f"need at least 4 classes to split base/novel, got {classes}")
    if dim < 1 or samples_per_class < 1:
        raise ValueError("dim and samples_per_class must be >= 1")
    if cluster_std <= 0:
        raise ValueError(f"cluster_std must be positive, got {cluster_std}")
    if separation < 0 or within_cov_skew < 0:
        raise ValueError("separation and within_cov_skew must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lam = cluster_std**2 * np.exp(within_cov_skew * np.linspace(-1.0, 1.0, dim))
    rotation = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    transform = rotation * np.sqrt(lam)  # z ~ N(0, I)  ->  z @ transform.T ~ N(0, Q diag(lam) Q^T)
    directions = rng.standard_normal((classes, dim))
    norms = np.maximum(np.linalg.norm(directions, axis=1, keepdims=True), np.finfo(float).tiny)
    means = separation * directions / norms

    features, labels = [], []
    for c in range(classes):
        noise = rng.standard_normal((samples_per_class, dim))
        features.append(means[c] + noise @ transform.T)
        labels.extend([f"c{c:03d}"] * samples_per_class)
    stacked = np.vstack(features)

    cut = (classes // 2) * samples_per_class
    base = FeatureBundle.from_arrays(stacked[:cut], labels[:cut], "base")
    novel = FeatureBundle.from_arrays(stacked[cut:], labels[cut:], "novel")
    return base, novel
