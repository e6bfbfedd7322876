"""Distance and variance primitives shared by every lab module."""

from typing import Sequence, Tuple

import numpy as np

from ..models.features import Point
from .exceptions import DimensionMismatch, EmptyCluster


def euclidean_distance(a: Point, b: Point) -> float:
    """Return the Euclidean distance between two points.

    Raises:
        DimensionMismatch: If the points have different dimensions
    """
    if a.dim != b.dim:
        raise DimensionMismatch(
            "points have different dimensions", context={"left": a.dim, "right": b.dim}
        )
    diff = a.as_array() - b.as_array()
    return float(np.sqrt(np.dot(diff, diff)))


def centroid(points: Sequence[Point]) -> Point:
    """Weighted coordinate-wise mean of ``points``.

    The returned point carries the total weight of its members.

    Raises:
        EmptyCluster: If ``points`` is empty
        DimensionMismatch: If the points have different dimensions
    """
    if not points:
        raise EmptyCluster("centroid of an empty point set")
    X, w = points_to_arrays(points)
    mean = (w[:, None] * X).sum(axis=0) / w.sum()
    return Point(coords=tuple(mean.tolist()), weight=float(w.sum()))


def points_to_arrays(points: Sequence[Point]) -> Tuple[np.ndarray, np.ndarray]:
    """Stack points into an (N, d) coordinate array and an (N,) weight array."""
    dims = {p.dim for p in points}
    if len(dims) > 1:
        raise DimensionMismatch("points have mixed dimensions", context={"dims": sorted(dims)})
    X = np.array([p.coords for p in points], dtype=float)
    w = np.array([p.weight for p in points], dtype=float)
    return X, w


def pairwise_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """(N, K) Euclidean distances between rows of ``X`` and rows of ``C``."""
    diff = X[:, None, :] - C[None, :, :]
    return np.sqrt(np.einsum("nkd,nkd->nk", diff, diff))
