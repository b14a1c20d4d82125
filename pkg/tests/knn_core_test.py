import numpy as np
import pytest

from elliptest.exceptions import DuplicatePoints, InvalidInput, InvalidK
from elliptest.knn_core import knn_distances


def test_one_dimensional_example():
    nn = knn_distances([[0.0], [1.0], [3.0]], 2)
    assert nn.rho.tolist() == [[1.0, 3.0], [1.0, 2.0], [2.0, 3.0]]
    assert nn.index.tolist() == [[1, 2], [0, 2], [1, 0]]


def test_tree_matches_brute_force():
    rng = np.random.default_rng(10)
    for _ in range(100):
        n = int(rng.integers(30, 300))
        d = int(rng.integers(1, 11))
        k = int(rng.integers(1, min(25, n - 1) + 1))
        pts = rng.standard_normal((n, d))
        tree = knn_distances(pts, k, backend='tree')
        brute = knn_distances(pts, k, backend='brute')
        assert np.array_equal(tree.rho, brute.rho)
        assert np.array_equal(tree.index, brute.index)


def test_distances_sorted_and_exclude_self():
    rng = np.random.default_rng(11)
    pts = rng.uniform(size=(200, 3))
    nn = knn_distances(pts, 5)
    assert nn.n == 200 and nn.k == 5
    assert np.all(np.diff(nn.rho, axis=1) >= 0)
    assert not np.any(nn.index == np.arange(200)[:, None])


@pytest.mark.parametrize('k', [0, 10])
def test_k_out_of_range(k):
    with pytest.raises(InvalidK):
        knn_distances(np.arange(10.0), k)


def test_duplicates_are_reported():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [2.0, 0.5]])
    with pytest.raises(DuplicatePoints) as info:
        knn_distances(pts, 1)
    assert info.value.indices == (0, 2)


def test_non_finite_points_are_rejected():
    with pytest.raises(InvalidInput):
        knn_distances([[0.0], [np.nan], [1.0]], 1)


def test_shuffling_rows_permutes_neighbors():
    rng = np.random.default_rng(12)
    pts = rng.standard_normal((150, 3))
    perm = rng.permutation(150)
    inverse = np.argsort(perm)
    nn = knn_distances(pts, 6)
    shuffled = knn_distances(pts[perm], 6)
    np.testing.assert_array_equal(shuffled.rho, nn.rho[perm])
    np.testing.assert_array_equal(shuffled.index, inverse[nn.index[perm]])


def test_rotation_and_shift_keep_distances():
    rng = np.random.default_rng(13)
    pts = rng.standard_normal((200, 4))
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    moved = pts @ q.T + np.array([2.0, -1.0, 0.5, 7.0])
    np.testing.assert_allclose(knn_distances(moved, 5).rho, knn_distances(pts, 5).rho, rtol=0, atol=1e-12)
