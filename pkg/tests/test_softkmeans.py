import numpy as np
import pytest

from bavardage.featurestore import FeatureBundle
from bavardage.sampler import TaskConfig, TaskInstance, sample_task
from bavardage.softkmeans import SoftAssignments, one_hot, soft_kmeans_init


def toy_task(support, support_labels, queries, query_labels=None):
    support = np.asarray(support, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    support_labels = np.asarray(support_labels, dtype=np.int64)
    ways = int(support_labels.max()) + 1
    if query_labels is None:
        query_labels = np.zeros(len(queries), dtype=np.int64)
    return TaskInstance(
        support_features=support,
        support_labels=support_labels,
        query_features=queries,
        query_labels_hidden=np.asarray(query_labels, dtype=np.int64),
        class_map=tuple(f"c{i}" for i in range(ways)),
        source_rows=np.arange(len(support) + len(queries)),
    )


def separable_task(rng, ways=3, shots=2, queries_per_class=5, spread=0.05, radius=20.0):
    angles = 2 * np.pi * np.arange(ways) / ways
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    sup, sup_lab, qry, qry_lab = [], [], [], []
    for k in range(ways):
        sup.append(centers[k] + spread * rng.normal(size=(shots, 2)))
        sup_lab += [k] * shots
        qry.append(centers[k] + spread * rng.normal(size=(queries_per_class, 2)))
        qry_lab += [k] * queries_per_class
    return toy_task(np.vstack(sup), sup_lab, np.vstack(qry), qry_lab)


class TestOneHot:
    def test_basic(self):
        out = one_hot(np.array([2, 0]), 3)
        np.testing.assert_array_equal(out, [[0, 0, 1], [1, 0, 0]])


class TestSoftAssignments:
    def test_counts_are_column_sums(self):
        m = np.array([[0.5, 0.5], [1.0, 0.0]])
        a = SoftAssignments(matrix=m, support_mask=np.array([False, True]))
        np.testing.assert_allclose(a.counts(), [1.5, 0.5])

    def test_validate_catches_bad_rows(self):
        m = np.array([[0.6, 0.6]])
        a = SoftAssignments(matrix=m, support_mask=np.array([False]))
        with pytest.raises(ValueError):
            a.validate()


class TestSoftKmeansInit:
    def test_one_step_scalar_oracle(self):
        """Supports at -1, +1, query at 0.5, t=10: one E-step gives
        softmax(-5*2.25, -5*0.25), about (4.54e-5, 0.99995)."""
        task = toy_task([[-1.0], [1.0]], [0, 1], [[0.5]])
        a = soft_kmeans_init(task, t_km=10.0, max_iter=1)
        expected = np.exp([-5 * 2.25, -5 * 0.25])
        expected /= expected.sum()
        np.testing.assert_allclose(a.matrix[2], expected, rtol=1e-12)
        np.testing.assert_allclose(a.matrix[2], [4.5397868702e-05, 0.9999546021], atol=1e-9)

    def test_query_on_centroid_saturates(self):
        task = toy_task([[0.0, 0.0], [10.0, 0.0]], [0, 1], [[0.0, 0.0]])
        a = soft_kmeans_init(task, t_km=100.0, max_iter=1)
        np.testing.assert_allclose(a.matrix[2], [1.0, 0.0], atol=1e-12)

    def test_equidistant_query_uniform(self):
        task = toy_task([[-1.0], [1.0]], [0, 1], [[0.0]])
        a = soft_kmeans_init(task, t_km=10.0, max_iter=1)
        np.testing.assert_allclose(a.matrix[2], [0.5, 0.5], atol=1e-12)

    def test_high_temperature_near_uniform(self):
        """t_km -> 0 pushes query rows toward 1/K."""
        rng = np.random.default_rng(0)
        task = separable_task(rng, radius=1.0)
        a = soft_kmeans_init(task, t_km=1e-8)
        queries = a.matrix[~a.support_mask]
        assert np.abs(queries - 1.0 / 3.0).max() <= 1e-6

    def test_rows_stochastic_and_clamped(self):
        rng = np.random.default_rng(1)
        task = separable_task(rng, spread=3.0)
        a = soft_kmeans_init(task, t_km=5.0)
        a.validate()
        np.testing.assert_allclose(a.matrix.sum(axis=1), 1.0, atol=1e-9)
        sup = a.matrix[a.support_mask]
        np.testing.assert_array_equal(sup, one_hot(task.support_labels, 3))

    def test_separable_matches_nearest_centroid(self):
        rng = np.random.default_rng(2)
        for trial in range(5):
            task = separable_task(rng, spread=0.5, radius=30.0)
            a = soft_kmeans_init(task, t_km=10.0)
            pred = np.argmax(a.matrix[~a.support_mask], axis=1)
            np.testing.assert_array_equal(pred, task.query_labels_hidden)

    def test_accepts_sampled_task(self):
        rng = np.random.default_rng(3)
        feats = rng.normal(size=(200, 4))
        labels = [f"c{i % 5}" for i in range(200)]
        bundle = FeatureBundle.from_arrays(feats, labels, "novel")
        task = sample_task(bundle, TaskConfig(ways=3, shots=2, query_total=12, seed=0), 0)
        a = soft_kmeans_init(task, t_km=10.0)
        assert a.matrix.shape == (3 * 2 + 12, 3)
        a.validate()

    def test_invalid_temperature(self):
        task = toy_task([[-1.0], [1.0]], [0, 1], [[0.0]])
        with pytest.raises(ValueError):
            soft_kmeans_init(task, t_km=0.0)

    def test_convergence_is_a_fixed_point(self):
        """Once converged on separable data, extra iterations change nothing."""
        rng = np.random.default_rng(4)
        task = separable_task(rng, spread=0.1)
        short = soft_kmeans_init(task, t_km=10.0, max_iter=30, tol=1e-12)
        long = soft_kmeans_init(task, t_km=10.0, max_iter=60, tol=1e-12)
        np.testing.assert_allclose(short.matrix, long.matrix, atol=1e-9)
