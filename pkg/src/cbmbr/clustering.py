"""k-means++ seeding and Lloyd iterations over pseudo-reference vectors."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import EmbeddingMatrix, RngHandle, as_rng
from .errors import DimensionMismatch, EmptySet, KTooLarge

MAX_NITER = 32


class Init(str, enum.Enum):
    KMEANS_PP = "kpp"
    RANDOM = "random"


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    niter: int = 1
    init: Init = Init.KMEANS_PP
    seed: int = 0

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError("k must be positive")
        if not 0 <= int(self.niter) <= MAX_NITER:
            raise ValueError(f"niter must be in [0, {MAX_NITER}]")
        object.__setattr__(self, "init", Init(self.init))


@dataclass
class Clustering:
    """Result of :func:`run_kmeans`.

    ``counts`` come from the final assignment, which is consistent with
    ``centroids``. ``member_counts[j]`` is the size of the point set whose
    mean produced ``centroids[j]`` in the last update step (equal to
    ``counts`` when no update ran). Count-weighted scoring uses the latter
    so that the weighted centroid sum is exactly the mean of all points.
    """

    centroids: np.ndarray
    assignments: np.ndarray
    counts: np.ndarray
    k: int
    member_counts: np.ndarray

    def weights(self) -> np.ndarray:
        return self.member_counts / self.member_counts.sum()


def _points64(points) -> np.ndarray:
    arr = points.data if isinstance(points, EmbeddingMatrix) else np.asarray(points)
    if arr.ndim != 2:
        raise DimensionMismatch(f"points must be 2-D, got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.float64)


def _check_k(k: int, n: int) -> None:
    if n == 0:
        raise EmptySet("no points to cluster")
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the number of points ({n})")


def kmeanspp_indices(points, k: int, rng: RngHandle | int | None = None,
                     first_index: int | None = None) -> np.ndarray:
    """Row indices picked by k-means++ seeding.

    The first row is uniform (or ``first_index``); each later row is drawn
    with probability proportional to its squared distance to the nearest
    row already picked. If every distance is zero, the draw is uniform over
    all rows.
    """
    x = _points64(points)
    n = x.shape[0]
    _check_k(k, n)
    gen = as_rng(rng).generator()
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = gen.integers(n) if first_index is None else int(first_index)
    d2 = np.full(n, np.inf)
    for c in range(1, k):
        _kernels.min_sq_dist_update(x, x[chosen[c - 1]], d2)
        cum = np.cumsum(d2)
        total = cum[-1]
        if total > 0.0:
            i = int(np.searchsorted(cum, gen.random() * total, side="right"))
            if i >= n:
                i = int(np.flatnonzero(d2 > 0.0)[-1])
        else:
            i = int(gen.integers(n))
        chosen[c] = i
    return chosen


def kmeanspp_init(points, k: int, rng: RngHandle | int | None = None,
                  first_index: int | None = None) -> np.ndarray:
    x = _points64(points)
    return x[kmeanspp_indices(x, k, rng, first_index)].copy()


def random_init(points, k: int, rng: RngHandle | int | None = None) -> np.ndarray:
    x = _points64(points)
    _check_k(k, x.shape[0])
    idx = as_rng(rng).generator().choice(x.shape[0], size=k, replace=False)
    return x[idx].copy()


def assign_step(points, centroids) -> np.ndarray:
    x = _points64(points)
    c = _points64(centroids)
    if c.shape[0] == 0:
        raise EmptySet("no centroids")
    if x.shape[1] != c.shape[1]:
        raise DimensionMismatch(f"points have {x.shape[1]} dims, centroids {c.shape[1]}")
    idx, _ = _kernels.nearest_centroid(x, c)
    return idx


def update_step(points, assignments, k: int, prev_centroids) -> np.ndarray:
    """Per-cluster means; an empty cluster keeps its previous centroid."""
    x = _points64(points)
    prev = _points64(prev_centroids)
    a = np.asarray(assignments, dtype=np.int64)
    if a.shape != (x.shape[0],):
        raise DimensionMismatch("one assignment per point required")
    if prev.shape != (k, x.shape[1]):
        raise DimensionMismatch(f"prev_centroids must be {k}x{x.shape[1]}, got {prev.shape}")
    if a.size and (a.min() < 0 or a.max() >= k):
        raise ValueError("assignment out of range")
    return _update(x, a, k, prev)[0]


def _update(x, a, k, prev):
    sums, counts = _kernels.cluster_sums(x, a, k)
    out = prev.copy()
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz, None]
    return out, counts


def mean_vector(points) -> np.ndarray:
    """Mean row, summed in ascending row order (same arithmetic as a k=1 update)."""
    x = _points64(points)
    if x.shape[0] == 0:
        raise EmptySet("mean of no points")
    sums, counts = _kernels.cluster_sums(x, np.zeros(x.shape[0], dtype=np.int64), 1)
    return sums[0] / counts[0]


def within_cluster_ss(points, centroids, assignments) -> float:
    x = _points64(points)
    diff = x - _points64(centroids)[np.asarray(assignments)]
    return float(np.einsum("ij,ij->", diff, diff))


def run_kmeans(points, cfg: KMeansConfig, rng: RngHandle | int | None = None) -> Clustering:
    """Seed, run ``cfg.niter`` Lloyd rounds, then re-assign once.

    ``k == 1`` short-circuits to the mean of all points for any ``niter``.
    """
    x = _points64(points)
    n = x.shape[0]
    k = int(cfg.k)
    _check_k(k, n)
    if k == 1:
        a = np.zeros(n, dtype=np.int64)
        cnt = np.array([n], dtype=np.int64)
        return Clustering(mean_vector(x)[None, :], a, cnt, 1, cnt.copy())

    rng = as_rng(rng, cfg.seed)
    if cfg.init is Init.KMEANS_PP:
        centroids = kmeanspp_init(x, k, rng)
    else:
        centroids = random_init(x, k, rng)

    member_counts = None
    for _ in range(cfg.niter):
        a, _ = _kernels.nearest_centroid(x, centroids)
        centroids, member_counts = _update(x, a, k, centroids)
    a, _ = _kernels.nearest_centroid(x, centroids)
    counts = np.bincount(a, minlength=k).astype(np.int64)
    if member_counts is None:
        member_counts = counts.copy()
    return Clustering(centroids, a, counts, k, member_counts)
