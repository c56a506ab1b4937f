"""Triplet utility functions s(src, hyp, ref) and their batched form.

Four kinds are provided:

* ``dot``     hyp.ref + src.ref, exactly affine in ``ref``
* ``cosine``  cos(hyp, ref)
* ``rbf``     exp(-gamma * ||hyp - ref||^2)
* ``mlp``     a fixed random tanh network over
              [src; hyp; ref; hyp*ref; |hyp-ref|], nonlinear in ``ref``

:func:`score` is the straightforward per-triplet path. :func:`score_matrix`
computes every (hyp, ref) pair at once and is what the decoders use.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import EmbeddingMatrix
from .errors import DimensionMismatch, NonFiniteValue, ZeroVector

DEFAULT_HIDDEN = (32, 16)


class UtilityKind(str, enum.Enum):
    DOT = "dot"
    COSINE = "cosine"
    RBF = "rbf"
    MLP = "mlp"


@dataclass(frozen=True)
class UtilityFn:
    kind: UtilityKind
    gamma: float = 1.0
    seed: int = 0
    hidden_dims: tuple[int, ...] = DEFAULT_HIDDEN
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", UtilityKind(self.kind))
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.kind is UtilityKind.RBF and not self.gamma > 0:
            raise ValueError("rbf gamma must be positive")
        if self.kind is UtilityKind.MLP and (not self.hidden_dims or min(self.hidden_dims) < 1):
            raise ValueError("mlp hidden_dims must be non-empty positive counts")

    @classmethod
    def dot(cls) -> "UtilityFn":
        return cls(UtilityKind.DOT)

    @classmethod
    def cosine(cls) -> "UtilityFn":
        return cls(UtilityKind.COSINE)

    @classmethod
    def rbf(cls, gamma: float = 1.0) -> "UtilityFn":
        return cls(UtilityKind.RBF, gamma=float(gamma))

    @classmethod
    def mlp(cls, seed: int = 0, hidden_dims=DEFAULT_HIDDEN) -> "UtilityFn":
        return cls(UtilityKind.MLP, seed=int(seed), hidden_dims=tuple(hidden_dims))

    @classmethod
    def parse(cls, text: str) -> "UtilityFn":
        """Parse ``dot``, ``cosine``, ``rbf:<gamma>`` or ``mlp:<seed>``."""
        name, _, arg = text.strip().partition(":")
        name = name.lower()
        try:
            if name == "dot" and not arg:
                return cls.dot()
            if name == "cosine" and not arg:
                return cls.cosine()
            if name == "rbf":
                return cls.rbf(float(arg) if arg else 1.0)
            if name == "mlp":
                return cls.mlp(int(arg) if arg else 0)
        except ValueError as exc:
            raise ValueError(f"bad utility spec {text!r}: {exc}") from None
        raise ValueError(f"unknown utility spec {text!r}")

    def shifted(self, const: float) -> "UtilityFn":
        return UtilityFn(self.kind, self.gamma, self.seed, self.hidden_dims, self.offset + const)

    @property
    def name(self) -> str:
        if self.kind is UtilityKind.RBF:
            base = f"rbf:{self.gamma:g}"
        elif self.kind is UtilityKind.MLP:
            base = f"mlp:{self.seed}"
        else:
            base = self.kind.value
        return base if self.offset == 0 else f"{base}{self.offset:+g}"


@dataclass
class ScoreMatrix:
    values: np.ndarray
    row_labels: np.ndarray = field(default=None)
    col_labels: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.row_labels is None:
            self.row_labels = np.arange(self.values.shape[0])
        if self.col_labels is None:
            self.col_labels = np.arange(self.values.shape[1])


@functools.lru_cache(maxsize=32)
def mlp_weights(seed: int, dims: int, hidden_dims: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    """Layer weight matrices (fan_in x fan_out) for an input of ``dims``.

    Entries are uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)),
    drawn layer by layer, row-major, from PCG64(seed). Biases are zero.
    """
    gen = np.random.Generator(np.random.PCG64(int(seed)))
    sizes = (5 * dims, *hidden_dims, 1)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        w = gen.uniform(-a, a, size=(fan_in, fan_out))
        w.flags.writeable = False
        layers.append(w)
    return tuple(layers)


def _vec(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.isfinite(v).all():
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return v


def score(u: UtilityFn, src, hyp, ref) -> float:
    src, hyp, ref = _vec(src, "src"), _vec(hyp, "hyp"), _vec(ref, "ref")
    if not (src.shape == hyp.shape == ref.shape):
        raise DimensionMismatch(f"lengths differ: {src.shape[0]}, {hyp.shape[0]}, {ref.shape[0]}")
    kind = u.kind
    if kind is UtilityKind.DOT:
        val = float(hyp @ ref + src @ ref)
    elif kind is UtilityKind.COSINE:
        nh, nr = np.linalg.norm(hyp), np.linalg.norm(ref)
        if nh == 0 or nr == 0:
            raise ZeroVector("cosine similarity of a zero vector")
        val = float(hyp @ ref / (nh * nr))
    elif kind is UtilityKind.RBF:
        diff = hyp - ref
        val = float(np.exp(-u.gamma * (diff @ diff)))
    else:
        layers = mlp_weights(u.seed, hyp.shape[0], u.hidden_dims)
        act = np.concatenate([src, hyp, ref, hyp * ref, np.abs(hyp - ref)])
        for i, w in enumerate(layers):
            act = act @ w
            if i + 1 < len(layers):
                act = np.tanh(act)
        val = float(act[0])
    return val + u.offset


def _mat(m, name: str) -> np.ndarray:
    arr = m.data if isinstance(m, EmbeddingMatrix) else np.asarray(m)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D")
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return arr


def score_matrix(u: UtilityFn, src, hyps, refs) -> ScoreMatrix:
    """``values[i, j] = score(u, src, hyps[i], refs[j])`` for all pairs."""
    src = _vec(src, "src")
    h = _mat(hyps, "hyps")
    r = _mat(refs, "refs")
    d = src.shape[0]
    if h.shape[1] != d or r.shape[1] != d:
        raise DimensionMismatch(f"dims disagree: src {d}, hyps {h.shape[1]}, refs {r.shape[1]}")
    kind = u.kind
    if kind is UtilityKind.DOT:
        vals = h @ r.T + (r @ src)[None, :]
    elif kind is UtilityKind.COSINE:
        nh = np.linalg.norm(h, axis=1)
        nr = np.linalg.norm(r, axis=1)
        if (nh == 0).any() or (nr == 0).any():
            raise ZeroVector("cosine similarity of a zero vector")
        vals = (h / nh[:, None]) @ (r / nr[:, None]).T
    elif kind is UtilityKind.RBF:
        hn = np.einsum("ij,ij->i", h, h)
        rn = np.einsum("ij,ij->i", r, r)
        d2 = hn[:, None] + rn[None, :] - 2.0 * (h @ r.T)
        np.maximum(d2, 0.0, out=d2)
        vals = np.exp(-u.gamma * d2)
    else:
        layers = mlp_weights(u.seed, d, u.hidden_dims)
        w1 = layers[0]
        w_src, w_h, w_r, w_p, w_a = (w1[i * d:(i + 1) * d] for i in range(5))
        base_h = h @ w_h + (src @ w_src)[None, :]
        base_r = r @ w_r
        tail = layers[1:]
        tail_w = np.concatenate([w.ravel() for w in tail])
        tail_shapes = np.array([w.shape for w in tail], dtype=np.int64)
        vals = _kernels.mlp_pair_scores(base_h, base_r, h, r, w_p, w_a, tail_w, tail_shapes)
    if u.offset:
        vals = vals + u.offset
    return ScoreMatrix(vals)
