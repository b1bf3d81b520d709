import numpy as np
import pytest

from bavardage.featurestore import BaseStatistics, FeatureBundle, compute_base_statistics
from bavardage.plda import (
    between_scatter,
    build_sphering,
    estimate_offset_centroids,
    plda_project,
    sphere_rows,
)
from bavardage.softkmeans import SoftAssignments, one_hot


def stats_from_scatter(scatter, dim=None):
    scatter = np.asarray(scatter, dtype=np.float64)
    dim = scatter.shape[0]
    return BaseStatistics(
        mean=np.zeros(dim), scatter=scatter, per_class_means={"a": np.zeros(dim)}
    )


def one_hot_assignments(labels, ways, n_support=None):
    labels = np.asarray(labels)
    mask = np.zeros(len(labels), dtype=bool)
    if n_support:
        mask[:n_support] = True
    return SoftAssignments(matrix=one_hot(labels, ways), support_mask=mask)


class TestBuildSphering:
    def test_identity_scatter(self):
        rotation, scaling = build_sphering(stats_from_scatter(np.eye(3)), s_max=2.0)
        np.testing.assert_allclose(scaling, np.ones(3), atol=1e-12)
        np.testing.assert_allclose(rotation @ rotation.T, np.eye(3), atol=1e-12)

    def test_clamped_direction(self):
        """Eigenvalues (4, 0.04): inverse roots (0.5, 5), the 5 clamps to 2."""
        _, scaling = build_sphering(stats_from_scatter(np.diag([0.04, 4.0])), s_max=2.0)
        np.testing.assert_allclose(scaling, [0.5, 2.0], atol=1e-12)

    def test_zero_scatter_saturates(self):
        _, scaling = build_sphering(stats_from_scatter(np.zeros((4, 4))), s_max=1.0)
        np.testing.assert_allclose(scaling, np.ones(4))

    def test_whitening_identity(self):
        """Unclamped sphering maps the scatter to the identity."""
        rng = np.random.default_rng(0)
        a = rng.normal(size=(5, 5))
        scatter = a @ a.T + 0.5 * np.eye(5)
        rotation, scaling = build_sphering(stats_from_scatter(scatter), s_max=1e6)
        t = (rotation * scaling).T  # rows x' = T x
        np.testing.assert_allclose(t @ scatter @ t.T, np.eye(5), atol=1e-10)

    def test_scaling_bounded(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(6, 6)) * 0.01
        scatter = a @ a.T
        _, scaling = build_sphering(stats_from_scatter(scatter), s_max=3.0)
        assert (scaling <= 3.0 + 1e-12).all()

    def test_invalid_s_max(self):
        with pytest.raises(ValueError):
            build_sphering(stats_from_scatter(np.eye(2)), s_max=0.0)


class TestSphereRows:
    def test_matches_composition(self):
        rng = np.random.default_rng(2)
        scatter = np.diag([1.0, 4.0, 0.25])
        rotation, scaling = build_sphering(stats_from_scatter(scatter), s_max=10.0)
        x = rng.normal(size=(7, 3))
        out = sphere_rows(x, rotation, scaling)
        np.testing.assert_allclose(out, (x @ rotation) * scaling, atol=1e-14)

    def test_whitens_sampled_data(self):
        rng = np.random.default_rng(3)
        root = np.array([[2.0, 0.0], [0.6, 0.5]])
        x = rng.normal(size=(40000, 2)) @ root.T
        labels = ["a"] * 20000 + ["b"] * 20000
        stats = compute_base_statistics(FeatureBundle.from_arrays(x, labels, "base"))
        rotation, scaling = build_sphering(stats, s_max=100.0)
        sphered = sphere_rows(x, rotation, scaling)
        cov = sphered.T @ sphered / len(sphered)
        np.testing.assert_allclose(cov, np.eye(2), atol=0.05)


class TestOffsetCentroids:
    def test_gamma_zero_hard_means(self):
        x = np.array([[0.0, 0.0], [2.0, 2.0], [4.0, 0.0]])
        a = one_hot_assignments([0, 0, 1], 2)
        out = estimate_offset_centroids(x, a, gamma=0.0)
        np.testing.assert_allclose(out, [[1.0, 1.0], [4.0, 0.0]], atol=1e-14)

    def test_single_sample_shrinkage(self):
        """One unit-weight sample with gamma=10 lands at x'/11."""
        x = np.array([[3.3, -1.1]])
        a = one_hot_assignments([0], 1)
        out = estimate_offset_centroids(x, a, gamma=10.0)
        np.testing.assert_allclose(out, x / 11.0, atol=1e-14)

    def test_empty_class_goes_to_origin(self):
        x = np.array([[1.0, 2.0]])
        a = SoftAssignments(matrix=np.array([[1.0, 0.0]]), support_mask=np.array([False]))
        out = estimate_offset_centroids(x, a, gamma=10.0)
        np.testing.assert_array_equal(out[1], [0.0, 0.0])

    def test_empty_class_with_zero_gamma_errors(self):
        x = np.array([[1.0, 2.0]])
        a = SoftAssignments(matrix=np.array([[1.0, 0.0]]), support_mask=np.array([False]))
        with pytest.raises(ZeroDivisionError):
            estimate_offset_centroids(x, a, gamma=0.0)

    def test_negative_gamma_rejected(self):
        x = np.ones((1, 2))
        a = one_hot_assignments([0], 1)
        with pytest.raises(ValueError):
            estimate_offset_centroids(x, a, gamma=-1.0)


class TestBetweenScatter:
    def test_equal_centroids_zero(self):
        out = between_scatter(np.ones((4, 3)))
        np.testing.assert_array_equal(out, np.zeros((3, 3)))

    def test_hand_case(self):
        out = between_scatter(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        np.testing.assert_allclose(out, [[2.0, 0.0], [0.0, 0.0]], atol=1e-14)

    def test_rank_bound(self):
        rng = np.random.default_rng(4)
        for k in (2, 3, 5):
            centroids = rng.normal(size=(k, 8))
            psi = between_scatter(centroids)
            eigvals = np.linalg.eigvalsh(psi)
            above = (eigvals > 1e-10 * max(np.trace(psi), 1e-300)).sum()
            assert above <= k - 1


class TestPldaProject:
    def test_reduced_dimension_is_ways_minus_one(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(20, 6))
        labels = rng.integers(0, 4, size=20)
        sphered_task, projection = plda_project(
            x, stats_from_scatter(np.eye(6)), 2.0, one_hot_assignments(labels, 4), 10.0
        )
        assert sphered_task.reduced.shape == (20, 3)
        assert projection.basis.shape == (6, 3)
        assert projection.composite.shape == (6, 3)

    def test_reduced_is_sphered_times_basis(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(15, 4))
        labels = rng.integers(0, 3, size=15)
        a = one_hot_assignments(labels, 3)
        scatter = np.diag([0.5, 1.0, 2.0, 4.0])
        sphered_task, projection = plda_project(x, stats_from_scatter(scatter), 2.0, a, 5.0)
        np.testing.assert_array_equal(
            sphered_task.reduced, sphered_task.sphered @ projection.basis
        )

    def test_recompose_identity(self):
        """u_n = W^T x_n: projecting raw rows through the composite matrix
        reproduces the reduced matrix."""
        rng = np.random.default_rng(7)
        x = rng.normal(size=(25, 5))
        labels = rng.integers(0, 3, size=25)
        a = one_hot_assignments(labels, 3)
        m = rng.normal(size=(5, 5))
        scatter = m @ m.T + 0.1 * np.eye(5)
        sphered_task, projection = plda_project(x, stats_from_scatter(scatter), 2.0, a, 10.0)
        u = sphered_task.reduced
        assert np.linalg.norm(u - x @ projection.composite) <= 1e-8 * np.linalg.norm(u)

    def test_basis_orthonormal(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(30, 6))
        labels = rng.integers(0, 5, size=30)
        _, projection = plda_project(
            x, stats_from_scatter(np.eye(6)), 2.0, one_hot_assignments(labels, 5), 10.0
        )
        np.testing.assert_allclose(
            projection.basis.T @ projection.basis, np.eye(4), atol=1e-8
        )

    def test_preserves_inter_class_axis(self):
        """Identity scatter, two tight classes: class means in U keep
        their original separation (gamma off so centroids are exact)."""
        rng = np.random.default_rng(9)
        mu0, mu1 = np.zeros(3), np.array([6.0, 0.0, 0.0])
        x = np.vstack(
            [mu0 + 1e-3 * rng.normal(size=(10, 3)), mu1 + 1e-3 * rng.normal(size=(10, 3))]
        )
        labels = np.array([0] * 10 + [1] * 10)
        sphered_task, _ = plda_project(
            x, stats_from_scatter(np.eye(3)), 2.0, one_hot_assignments(labels, 2), 0.0
        )
        u = sphered_task.reduced
        gap = np.abs(u[:10].mean() - u[10:].mean())
        np.testing.assert_allclose(gap, 6.0, atol=1e-2)

    def test_identical_assignments_degenerate_but_defined(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(12, 4))
        a = SoftAssignments(
            matrix=np.full((12, 3), 1 / 3), support_mask=np.zeros(12, dtype=bool)
        )
        sphered_task, projection = plda_project(x, stats_from_scatter(np.eye(4)), 2.0, a, 10.0)
        assert np.isfinite(sphered_task.reduced).all()
        np.testing.assert_allclose(
            projection.basis.T @ projection.basis, np.eye(2), atol=1e-8
        )

    def test_precomputed_sphering_matches(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(18, 4))
        labels = rng.integers(0, 3, size=18)
        a = one_hot_assignments(labels, 3)
        m = rng.normal(size=(4, 4))
        stats = stats_from_scatter(m @ m.T + np.eye(4))
        pre = build_sphering(stats, 2.0)
        direct, _ = plda_project(x, stats, 2.0, a, 10.0)
        shared, _ = plda_project(x, stats, 2.0, a, 10.0, sphering=pre)
        np.testing.assert_array_equal(direct.reduced, shared.reduced)
