"""Feature bundle loading, validation, persistence, and base-split statistics.

A bundle on disk is a JSON manifest next to a raw binary of row-major
little-endian scalars::

    {"version": 1, "n": N, "d": D, "dtype": "f32",
     "labels": [...], "data_file": "features.bin"}

An optional ``"split"`` key records which split the bundle holds. Paths
ending in ``.csv`` are read as a CSV fallback with rows
``label,v0,v1,...`` (a header starting with ``label`` is skipped).

All arithmetic is in float64 regardless of the on-disk dtype; scatter
accumulation over ~1e5 rows needs the headroom.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_DTYPES = {"f32": "<f4", "f64": "<f8"}
SPLITS = ("base", "validation", "novel")


class BundleFormatError(ValueError):
    """A bundle file violated the format contract.

    ``field`` names the manifest/data field at fault so callers and
    tests can tell the failure modes apart.
    """

    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field = field_name


@dataclass(frozen=True)
class FeatureBundle:
    """A labeled feature matrix for one split, immutable after construction."""

    features: np.ndarray  # (N, D) float64
    labels: tuple[str, ...]  # length N
    class_index: dict[str, np.ndarray] = field(repr=False)
    split_tag: str = "novel"

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def class_ids(self) -> tuple[str, ...]:
        """Class identifiers in first-appearance order."""
        return tuple(self.class_index.keys())

    @staticmethod
    def from_arrays(features, labels, split_tag: str = "novel") -> "FeatureBundle":
        """Build and validate a bundle from in-memory arrays."""
        # always copy: the array is frozen below and must not alias caller data
        features = np.array(features, dtype=np.float64, order="C", copy=True)
        labels = tuple(str(l) for l in labels)
        if features.ndim != 2:
            raise BundleFormatError("data", f"features must be 2-D, got shape {features.shape}")
        if features.shape[0] < 1:
            raise BundleFormatError("n", "a bundle must contain at least one row")
        if len(labels) != features.shape[0]:
            raise BundleFormatError(
                "labels",
                f"manifest declares {len(labels)} labels but data has {features.shape[0]} rows",
            )
        bad = np.argwhere(~np.isfinite(features))
        if bad.size:
            r, c = bad[0]
            raise BundleFormatError("data", f"non-finite value at row {r}, column {c}")
        if split_tag not in SPLITS:
            raise BundleFormatError("split", f"unknown split tag {split_tag!r}, expected one of {SPLITS}")
        index: dict[str, list[int]] = {}
        for i, lab in enumerate(labels):
            index.setdefault(lab, []).append(i)
        class_index = {c: np.asarray(rows, dtype=np.intp) for c, rows in index.items()}
        features.flags.writeable = False
        return FeatureBundle(features, labels, class_index, split_tag)

    def with_features(self, features: np.ndarray) -> "FeatureBundle":
        """Same labels and split, new feature matrix (e.g. after preprocessing)."""
        return FeatureBundle.from_arrays(features, self.labels, self.split_tag)


@dataclass(frozen=True)
class BaseStatistics:
    """Grand mean and pooled within-class scatter of the base split."""

    mean: np.ndarray  # (D,)
    scatter: np.ndarray  # (D, D), symmetric PSD
    per_class_means: dict[str, np.ndarray]

    def validate(self, atol: float = 1e-6):
        """Check symmetry and positive semi-definiteness of the scatter."""
        asym = np.max(np.abs(self.scatter - self.scatter.T))
        if asym > atol:
            raise ValueError(f"scatter not symmetric: max asymmetry {asym:g}")
        eigvals = np.linalg.eigvalsh((self.scatter + self.scatter.T) / 2.0)
        floor = -1e-8 * max(eigvals.max(), 0.0)
        if eigvals.min() < floor:
            raise ValueError(f"scatter not PSD: min eigenvalue {eigvals.min():g}")


def load_bundle(path, split_tag: str | None = None) -> FeatureBundle:
    """Load and validate a feature bundle.

    ``path`` is either a JSON manifest (binary format) or a ``.csv``
    file. ``split_tag`` overrides the manifest's ``"split"`` key; the
    default when neither is present is ``"novel"``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"bundle manifest not found: {path}")
    if path.suffix == ".csv":
        return _load_csv(path, split_tag or "novel")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BundleFormatError("manifest", f"manifest is not valid JSON: {exc}") from exc
    version = manifest.get("version")
    if version != 1:
        raise BundleFormatError("version", f"unknown bundle format version {version!r}, expected 1")
    for key in ("n", "d", "dtype", "labels", "data_file"):
        if key not in manifest:
            raise BundleFormatError(key, f"manifest is missing required field {key!r}")
    n, d = manifest["n"], manifest["d"]
    dtype = manifest["dtype"]
    if dtype not in _DTYPES:
        raise BundleFormatError("dtype", f"unknown dtype {dtype!r}, expected one of {sorted(_DTYPES)}")
    labels = manifest["labels"]
    if len(labels) != n:
        raise BundleFormatError("labels", f"manifest declares n={n} but lists {len(labels)} labels")
    data_path = path.parent / manifest["data_file"]
    if not data_path.exists():
        raise FileNotFoundError(f"bundle data file not found: {data_path}")
    raw = np.fromfile(data_path, dtype=_DTYPES[dtype])
    if raw.size != n * d:
        raise BundleFormatError(
            "data_file",
            f"data file holds {raw.size} scalars but manifest declares n*d = {n * d}",
        )
    features = raw.astype(np.float64).reshape(n, d)
    tag = split_tag or manifest.get("split", "novel")
    return FeatureBundle.from_arrays(features, labels, tag)


def save_bundle(bundle: FeatureBundle, manifest_path, dtype: str = "f32") -> Path:
    """Persist a bundle as manifest + binary pair; returns the manifest path."""
    if dtype not in _DTYPES:
        raise BundleFormatError("dtype", f"unknown dtype {dtype!r}, expected one of {sorted(_DTYPES)}")
    manifest_path = Path(manifest_path)
    data_name = manifest_path.stem + ".bin"
    manifest = {
        "version": 1,
        "n": bundle.n,
        "d": bundle.dim,
        "dtype": dtype,
        "labels": list(bundle.labels),
        "data_file": data_name,
        "split": bundle.split_tag,
    }
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    bundle.features.astype(_DTYPES[dtype]).tofile(manifest_path.parent / data_name)
    manifest_path.write_text(json.dumps(manifest))
    return manifest_path


def _load_csv(path: Path, split_tag: str) -> FeatureBundle:
    labels, rows = [], []
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh)):
            if not record:
                continue
            if lineno == 0 and record[0].strip().lower() == "label":
                continue
            labels.append(record[0])
            try:
                rows.append([float(v) for v in record[1:]])
            except ValueError as exc:
                raise BundleFormatError("data", f"non-numeric value on line {lineno + 1}: {exc}") from exc
    if not rows:
        raise BundleFormatError("n", f"no data rows in {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise BundleFormatError("data", f"inconsistent row widths {sorted(widths)} in {path}")
    return FeatureBundle.from_arrays(np.asarray(rows, dtype=np.float64), labels, split_tag)


def compute_base_statistics(bundle: FeatureBundle) -> BaseStatistics:
    """Grand mean and pooled within-class scatter of a base bundle.

    The scatter sums squared deviations of every sample about its own
    class mean and divides by the total sample count.
    """
    if bundle.split_tag != "base":
        raise ValueError(f"base statistics require a base bundle, got split {bundle.split_tag!r}")
    x = bundle.features
    n, d = x.shape
    scatter = np.zeros((d, d))
    per_class_means: dict[str, np.ndarray] = {}
    for cls, rows in bundle.class_index.items():
        block = x[rows]
        m = block.mean(axis=0)
        per_class_means[cls] = m
        dev = block - m
        scatter += dev.T @ dev
    scatter /= n
    scatter = (scatter + scatter.T) / 2.0
    return BaseStatistics(mean=x.mean(axis=0), scatter=scatter, per_class_means=per_class_means)
