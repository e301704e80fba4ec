import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import v_measure_oracle
from drivecluster.errors import AlignmentError, DomainError, InfeasibleError, InsufficientDataError
from drivecluster.learn import contingency_table, homogeneity_completeness_v, kmeans, pca_project, v_measure
from drivecluster.learn.kmeans import kmeans_plusplus, lloyd


def two_groups(seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(0, 0.1, (5, 10))
    b = rng.normal(0, 0.1, (5, 10))
    b[:, 0] += 100
    X = np.vstack([a, b])
    order = rng.permutation(10)
    return X[order], (order >= 5).astype(int)


class TestKMeans:
    def test_separated_groups(self):
        X, truth = two_groups()
        c = kmeans(X, 2, seed=3)
        assert v_measure(c.labels, truth) == 1.0
        assert set(c.labels.tolist()) == {0, 1}

    def test_k_equals_n(self):
        X = np.random.default_rng(1).normal(size=(7, 3))
        c = kmeans(X, 7, seed=0)
        assert sorted(c.labels.tolist()) == list(range(7))
        assert c.inertia == 0.0

    def test_k_one_inertia(self):
        X = np.array([[0.0, 0], [1, 0], [0, 3], [5, 1]])
        c = kmeans(X, 1)
        np.testing.assert_allclose(c.centers[0], [1.5, 1.0])
        assert c.inertia == pytest.approx(23.0, abs=1e-12)

    def test_errors(self):
        X = np.zeros((3, 2))
        with pytest.raises(InfeasibleError):
            kmeans(X, 4)
        with pytest.raises(DomainError):
            kmeans(X, 0)

    def test_duplicate_points_do_not_crash(self):
        X = np.vstack([np.zeros((4, 2)), np.ones((2, 2))])
        c = kmeans(X, 3, seed=0)
        assert c.labels.max() < 3 and c.inertia == 0.0

    def test_deterministic_and_canonical(self):
        X = np.random.default_rng(2).normal(size=(30, 4))
        a, b = kmeans(X, 4, seed=9), kmeans(X, 4, seed=9)
        assert np.array_equal(a.labels, b.labels) and a.inertia == b.inertia
        assert a.labels[0] == 0
        firsts = [int(np.flatnonzero(a.labels == k)[0]) for k in range(4)]
        assert firsts == sorted(firsts)

    def test_best_of_restarts(self):
        X = np.random.default_rng(3).normal(size=(40, 3))
        best = kmeans(X, 5, seed=7, restarts=10).inertia
        runs = []
        for child in np.random.SeedSequence(7).spawn(10):
            rng = np.random.default_rng(child)
            runs.append(lloyd(X, kmeans_plusplus(X, 5, rng))[2])
        assert best == min(runs)
        assert len(set(round(r, 9) for r in runs)) > 1  # restarts actually differ

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31), st.integers(2, 6), st.integers(6, 40))
    def test_lloyd_inertia_never_increases(self, seed, K, n):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, 3))
        _, _, inertia, history = lloyd(X, kmeans_plusplus(X, K, rng))
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))
        assert inertia == history[-1] >= 0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_isometry_invariance(self, seed):
        rng = np.random.default_rng(seed)
        centers = rng.normal(0, 20, (3, 4))
        X = np.vstack([c + rng.normal(0, 0.5, (8, 4)) for c in centers])
        Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        Y = X @ Q + rng.normal(size=4)
        a, b = kmeans(X, 3, seed=1), kmeans(Y, 3, seed=1)
        assert v_measure(a, b) == 1.0
        assert b.inertia == pytest.approx(a.inertia, rel=1e-9)


class TestPca:
    def test_rank_one(self):
        rng = np.random.default_rng(0)
        direction = rng.normal(size=10)
        X = rng.normal(size=(50, 1)) * direction + 3.0
        p = pca_project(X)
        assert abs(p.explained_variance_ratio[0] - 1.0) <= 1e-9
        assert abs(p.explained_variance_ratio[1]) <= 1e-9

    def test_isotropic(self):
        X = np.random.default_rng(12345).normal(size=(10000, 10))
        p = pca_project(X)
        # each of ten equal directions carries 0.1; the leading pair together about 0.2
        np.testing.assert_allclose(p.explained_variance_ratio, [0.1, 0.1], atol=0.02)
        assert abs(p.explained_variance_ratio.sum() - 0.2) <= 0.05

    def test_duplication(self):
        X = np.random.default_rng(5).normal(size=(20, 6)) * np.arange(1, 7)
        a = pca_project(X)
        b = pca_project(np.vstack([X, X]))
        np.testing.assert_allclose(b.explained_variance_ratio, a.explained_variance_ratio, atol=1e-9)
        np.testing.assert_allclose(b.coords[:20], a.coords, atol=1e-9)
        np.testing.assert_allclose(b.coords[20:], a.coords, atol=1e-9)

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            pca_project(np.zeros((1, 10)))

    def test_zero_variance(self, caplog):
        with caplog.at_level(logging.WARNING):
            p = pca_project(np.ones((5, 3)))
        np.testing.assert_array_equal(p.ratio_spectrum, 0.0)
        np.testing.assert_array_equal(p.coords, 0.0)
        assert "zero variance" in caplog.text

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31), st.integers(2, 30), st.integers(2, 10))
    def test_spectrum(self, seed, n, d):
        X = np.random.default_rng(seed).normal(size=(n, d))
        p = pca_project(X, dims=2)
        s = p.ratio_spectrum
        assert abs(s.sum() - 1.0) <= 1e-9
        assert np.all((s >= 0) & (s <= 1))
        assert np.all(np.diff(s) <= 1e-12)
        assert p.coords.shape == (n, 2)


class TestVMeasure:
    def test_identical_and_permuted(self):
        a = [0, 0, 1, 1, 2]
        assert v_measure(a, a) == 1.0
        assert v_measure([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0

    def test_single_cluster_prediction(self):
        h, c, v = homogeneity_completeness_v([0, 0, 1, 1], [0, 0, 0, 0])
        assert h == 0.0 and v == 0.0

    def test_frozen_value(self):
        # computed by the contingency-entropy oracle before the implementation existed
        h, c, v = homogeneity_completeness_v([0, 0, 1, 1], [0, 1, 1, 1])
        assert v == pytest.approx(0.3437110184854507, abs=1e-15)
        assert h == pytest.approx(0.3112781244591327, abs=1e-15)
        assert c == pytest.approx(0.3836885465963443, abs=1e-15)

    def test_alignment(self):
        with pytest.raises(AlignmentError):
            v_measure([0, 1], [0, 1, 1])

    def test_contingency(self):
        t = contingency_table(["x", "x", "y"], [5, 7, 7])
        assert t.tolist() == [[1, 1], [0, 1]]

    def test_clustering_objects(self):
        X, truth = two_groups()
        assert v_measure(kmeans(X, 2), kmeans(X, 2, seed=5)) == 1.0

    def test_random_pairs_against_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 16))
            a = rng.integers(0, rng.integers(1, 6), n).tolist()
            b = rng.integers(0, rng.integers(1, 6), n).tolist()
            v = v_measure(a, b)
            assert abs(v - v_measure_oracle(a, b)) <= 1e-12
            assert 0.0 <= v <= 1.0
            assert v == v_measure(b, a)
