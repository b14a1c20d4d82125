"""
Exact Euclidean k-nearest-neighbor distances.

For each point of a cloud, the distances to its 1st..k-th nearest neighbors,
the point itself excluded. A k-d tree answers the queries; small or
high-dimensional clouds fall back to brute force. Both backends only pick
neighbor indices; distances are recomputed by one routine, so the two agree
bitwise.
"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import DuplicatePoints, InvalidInput, InvalidK

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 64
BRUTE_FORCE_MIN_DIM = 16
_BRUTE_FORCE_CHUNK = 256

Backend = Literal['auto', 'tree', 'brute']


@dataclass(frozen=True)
class NeighborDistances:
    """
    Sorted neighbor distances.

    Attributes
    ----------
    rho : np.ndarray
        Array of shape (n, k); ``rho[i, j]`` is the distance from point i to
        its (j+1)-ranked neighbor.
    index : np.ndarray
        Array of shape (n, k) with the neighbor row numbers, ties broken by
        ascending index.
    """
    rho: np.ndarray
    index: np.ndarray

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def k(self) -> int:
        return self.rho.shape[1]


def as_points(points) -> np.ndarray:
    """Coerce input to a finite float (n, d) array; a 1d input is one column."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise InvalidInput(f"expected an n x d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("points contain non-finite values")
    return arr


def _distances_to(points: np.ndarray, rows: np.ndarray, index: np.ndarray) -> np.ndarray:
    # coordinates accumulated in a fixed order
    sq = np.zeros(index.shape)
    for c in range(points.shape[1]):
        diff = points[index, c] - points[rows, c][:, None]
        sq += diff * diff
    return np.sqrt(sq)


def _brute_force_index(points: np.ndarray, k: int) -> np.ndarray:
    n = points.shape[0]
    out = np.empty((n, k), dtype=np.intp)
    candidates = np.arange(n)
    for start in range(0, n, _BRUTE_FORCE_CHUNK):
        rows = np.arange(start, min(start + _BRUTE_FORCE_CHUNK, n))
        grid = np.broadcast_to(candidates, (len(rows), n))
        dist = _distances_to(points, rows, grid)
        dist[np.arange(len(rows)), rows] = np.inf
        # stable sort on distance keeps ascending index among ties
        order = np.argsort(dist, axis=1, kind='stable')
        out[rows] = order[:, :k]
    return out


def _tree_index(points: np.ndarray, k: int) -> np.ndarray:
    n = points.shape[0]
    tree = cKDTree(points)
    # one spare neighbor so the point itself can be dropped even among duplicates
    _, found = tree.query(points, k=k + 1)
    found = np.asarray(found, dtype=np.intp).reshape(n, k + 1)
    rows = np.arange(n)
    is_self = found == rows[:, None]
    has_self = is_self.any(axis=1)
    keep = ~is_self
    # rows where the tree did not report the point itself drop the farthest candidate
    keep[~has_self, k] = False
    return found[keep].reshape(n, k)


def knn_distances(points, k: int, backend: Backend = 'auto') -> NeighborDistances:
    """
    Distances from every point to its k nearest neighbors.

    Parameters
    ----------
    points : array_like
        An n x d matrix (or a length-n vector for d = 1).
    k : int
        Neighbor depth, 1 <= k <= n - 1.
    backend : {'auto', 'tree', 'brute'}
        'auto' uses brute force when n < 64 or d > 15 and the k-d tree otherwise.

    Returns
    -------
    NeighborDistances

    Raises
    ------
    InvalidK
        If k is outside 1..n-1.
    DuplicatePoints
        If some point has a neighbor at distance zero.

    Examples
    --------
    >>> knn_distances([[0.0], [1.0], [3.0]], 2).rho
    array([[1., 3.],
           [1., 2.],
           [2., 3.]])
    """
    pts = as_points(points)
    n, d = pts.shape
    if not 1 <= k <= n - 1:
        raise InvalidK(f"k={k} must lie in 1..{n - 1} for n={n} points")

    if backend == 'auto':
        backend = 'brute' if (n < BRUTE_FORCE_MAX_N or d >= BRUTE_FORCE_MIN_DIM) else 'tree'
    if backend == 'brute':
        index = _brute_force_index(pts, k)
    elif backend == 'tree':
        index = _tree_index(pts, k)
    else:
        raise InvalidInput(f"unknown backend {backend!r}")

    rows = np.arange(n)
    rho = _distances_to(pts, rows, index)
    # canonical order: distance first, then neighbor index
    order = np.lexsort((index, rho), axis=1)
    rho = np.take_along_axis(rho, order, axis=1)
    index = np.take_along_axis(index, order, axis=1)

    dup = np.flatnonzero(rho[:, 0] == 0.0)
    if dup.size:
        raise DuplicatePoints(dup)
    logger.debug("knn_distances: n=%d d=%d k=%d backend=%s", n, d, k, backend)
    return NeighborDistances(rho=rho, index=index)
