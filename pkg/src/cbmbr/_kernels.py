"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is picked from ``CBMBR_BACKEND`` (``numba`` or ``numpy``) at
import time and can be switched with :func:`set_backend`. Both paths
accumulate in float64. Reductions over points run in ascending index
order so results do not depend on the thread count.
"""
from __future__ import annotations

import contextlib
import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is too old for numba and only produces a warning
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def _initial_backend() -> str:
    name = os.environ.get("CBMBR_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"CBMBR_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


_backend = _initial_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    prev = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def default_threads() -> int:
    raw = os.environ.get("CBMBR_THREADS")
    return max(1, int(raw)) if raw else 1


@contextlib.contextmanager
def thread_limit(n: int | None = None):
    """Cap BLAS and numba threads for the duration of the block."""
    from threadpoolctl import threadpool_limits

    n = default_threads() if n is None else max(1, int(n))
    prev = None
    if HAVE_NUMBA:
        prev = numba.get_num_threads()
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    with threadpool_limits(limits=n):
        try:
            yield n
        finally:
            if prev is not None:
                numba.set_num_threads(prev)


# ---------------------------------------------------------------- numpy path


def _np_nearest(points, centroids):
    # expanded form with cached norms; clamp absorbs negative round-off
    pn = np.einsum("ij,ij->i", points, points)
    cn = np.einsum("ij,ij->i", centroids, centroids)
    d2 = pn[:, None] + cn[None, :] - 2.0 * (points @ centroids.T)
    np.maximum(d2, 0.0, out=d2)
    idx = np.argmin(d2, axis=1)
    return idx.astype(np.int64), d2[np.arange(points.shape[0]), idx]


def _np_min_sq_dist(points, centroid, d2):
    diff = points - centroid[None, :]
    np.minimum(d2, np.einsum("ij,ij->i", diff, diff), out=d2)
    return d2


def _np_cluster_sums(points, assignments, k):
    sums = np.zeros((k, points.shape[1]), dtype=np.float64)
    np.add.at(sums, assignments, points)
    counts = np.bincount(assignments, minlength=k).astype(np.int64)
    return sums, counts


def _np_mlp_pairs(base_h, base_r, hyps, refs, w_prod, w_abs, tail_w, tail_shapes, block=8):
    n, m = hyps.shape[0], refs.shape[0]
    layers = []
    off = 0
    for fi, fo in tail_shapes:
        layers.append(tail_w[off:off + fi * fo].reshape(fi, fo))
        off += fi * fo
    out = np.empty((n, m), dtype=np.float64)
    for i0 in range(0, n, block):
        h = hyps[i0:i0 + block, None, :]
        pre = (h * refs[None]) @ w_prod
        pre += np.abs(h - refs[None]) @ w_abs
        pre += base_h[i0:i0 + block, None, :]
        pre += base_r[None]
        act = np.tanh(pre)
        for li, w in enumerate(layers):
            act = act @ w
            if li + 1 < len(layers):
                act = np.tanh(act)
        out[i0:i0 + block] = act[..., 0]
    return out


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _nb_nearest(points, centroids):
        n, d = points.shape
        k = centroids.shape[0]
        idx = np.empty(n, dtype=np.int64)
        best = np.empty(n, dtype=np.float64)
        for i in prange(n):
            bi = 0
            bd = np.inf
            for j in range(k):
                s = 0.0
                for t in range(d):
                    diff = points[i, t] - centroids[j, t]
                    s += diff * diff
                if s < bd:
                    bd = s
                    bi = j
            idx[i] = bi
            best[i] = bd
        return idx, best

    @njit(cache=True, parallel=True)
    def _nb_min_sq_dist(points, centroid, d2):
        n, d = points.shape
        for i in prange(n):
            s = 0.0
            for t in range(d):
                diff = points[i, t] - centroid[t]
                s += diff * diff
            if s < d2[i]:
                d2[i] = s
        return d2

    @njit(cache=True)
    def _nb_cluster_sums(points, assignments, k):
        n, d = points.shape
        sums = np.zeros((k, d), dtype=np.float64)
        counts = np.zeros(k, dtype=np.int64)
        for i in range(n):
            j = assignments[i]
            counts[j] += 1
            for t in range(d):
                sums[j, t] += points[i, t]
        return sums, counts

    @njit(cache=True, parallel=True)
    def _nb_mlp_pairs(base_h, base_r, hyps, refs, w_prod, w_abs, tail_w, tail_shapes):
        n, d = hyps.shape
        m = refs.shape[0]
        h1 = w_prod.shape[1]
        widest = h1
        for li in range(tail_shapes.shape[0]):
            if tail_shapes[li, 1] > widest:
                widest = tail_shapes[li, 1]
        out = np.empty((n, m), dtype=np.float64)
        for i in prange(n):
            acc = np.empty(widest, dtype=np.float64)
            nxt = np.empty(widest, dtype=np.float64)
            for j in range(m):
                for u in range(h1):
                    acc[u] = base_h[i, u] + base_r[j, u]
                for t in range(d):
                    p = hyps[i, t] * refs[j, t]
                    a = abs(hyps[i, t] - refs[j, t])
                    for u in range(h1):
                        acc[u] += p * w_prod[t, u] + a * w_abs[t, u]
                for u in range(h1):
                    acc[u] = np.tanh(acc[u])
                off = 0
                nl = tail_shapes.shape[0]
                for li in range(nl):
                    fi = tail_shapes[li, 0]
                    fo = tail_shapes[li, 1]
                    for v in range(fo):
                        nxt[v] = 0.0
                    for u in range(fi):
                        x = acc[u]
                        for v in range(fo):
                            nxt[v] += x * tail_w[off + u * fo + v]
                    off += fi * fo
                    for v in range(fo):
                        acc[v] = np.tanh(nxt[v]) if li + 1 < nl else nxt[v]
                out[i, j] = acc[0]
        return out


# ---------------------------------------------------------------- dispatch


def _numba_active() -> bool:
    return _backend == "numba" and HAVE_NUMBA


def nearest_centroid(points: np.ndarray, centroids: np.ndarray):
    """Nearest centroid index per point (lowest index on ties) and its squared distance."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    if _numba_active():
        return _nb_nearest(points, centroids)
    return _np_nearest(points, centroids)


def min_sq_dist_update(points: np.ndarray, centroid: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """In-place ``d2 = min(d2, ||points - centroid||^2)``."""
    if _numba_active():
        return _nb_min_sq_dist(points, np.ascontiguousarray(centroid, dtype=np.float64), d2)
    return _np_min_sq_dist(points, centroid, d2)


def cluster_sums(points: np.ndarray, assignments: np.ndarray, k: int):
    points = np.ascontiguousarray(points, dtype=np.float64)
    assignments = np.ascontiguousarray(assignments, dtype=np.int64)
    if _numba_active():
        return _nb_cluster_sums(points, assignments, k)
    return _np_cluster_sums(points, assignments, k)


def mlp_pair_scores(base_h, base_r, hyps, refs, w_prod, w_abs, tail_w, tail_shapes) -> np.ndarray:
    """Forward pass of the surrogate over every (hyp, ref) pair.

    ``base_h``/``base_r`` hold the first-layer contributions that depend on
    one side only (source term folded into ``base_h``); the pair-dependent
    product and absolute-difference terms are formed inside the kernel.
    """
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (base_h, base_r, hyps, refs, w_prod, w_abs, tail_w)]
    tail_shapes = np.ascontiguousarray(tail_shapes, dtype=np.int64).reshape(-1, 2)
    if _numba_active():
        return _nb_mlp_pairs(*args, tail_shapes)
    return _np_mlp_pairs(*args, tail_shapes)


def warmup() -> None:
    """Trigger JIT compilation of every numba kernel on tiny inputs."""
    if not HAVE_NUMBA:
        return
    with use_backend("numba"):
        p = np.zeros((2, 2))
        nearest_centroid(p, p)
        min_sq_dist_update(p, p[0], np.full(2, np.inf))
        cluster_sums(p, np.zeros(2, dtype=np.int64), 1)
        mlp_pair_scores(np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)),
                        np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2), np.array([[2, 1]]))
