"""Shared data model: embedding matrices, decoding instances, RNG, results."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DimensionMismatch, EmptySet, NonFiniteValue

RNG_ALGORITHM = "PCG64"


class EmbeddingMatrix:
    """Row-major ``rows x dims`` matrix of embedding vectors.

    Embeddings are stored as float32. Float64 input is kept as float64 so
    that derived matrices (centroids, means) do not lose precision. The
    wrapped array is read-only.
    """

    __slots__ = ("_data",)

    def __init__(self, data: Any, *, copy: bool = True):
        arr = np.asarray(data)
        if arr.ndim == 1 and arr.size == 0:
            raise DimensionMismatch("cannot infer dims from an empty 1-D array")
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D array, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise DimensionMismatch("dims must be >= 1")
        dtype = np.float64 if arr.dtype == np.float64 else np.float32
        arr = np.array(arr, dtype=dtype, order="C", copy=copy)
        if not np.isfinite(arr).all():
            raise NonFiniteValue("embedding matrix contains NaN or Inf")
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def zeros(cls, rows: int, dims: int) -> "EmbeddingMatrix":
        return cls(np.zeros((rows, dims), dtype=np.float32), copy=False)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def dims(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def as64(self) -> np.ndarray:
        return self._data.astype(np.float64)

    def __len__(self) -> int:
        return self.rows

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self._data.dtype == other._data.dtype and np.array_equal(self._data, other._data)

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(rows={self.rows}, dims={self.dims}, dtype={self._data.dtype})"


def as_matrix(m: EmbeddingMatrix | np.ndarray) -> EmbeddingMatrix:
    return m if isinstance(m, EmbeddingMatrix) else EmbeddingMatrix(m)


@dataclass(frozen=True, eq=False)
class CandidateInstance:
    """One decoding problem.

    When ``pseudo_refs`` is omitted the hypothesis set doubles as the
    pseudo-reference set and ``shares_refs_with_hyps`` is set.
    """

    source: np.ndarray
    hypotheses: EmbeddingMatrix
    pseudo_refs: EmbeddingMatrix = None  # type: ignore[assignment]
    shares_refs_with_hyps: bool = False

    def __post_init__(self):
        hyps = as_matrix(self.hypotheses)
        object.__setattr__(self, "hypotheses", hyps)
        if self.pseudo_refs is None or self.pseudo_refs is self.hypotheses:
            object.__setattr__(self, "pseudo_refs", hyps)
            object.__setattr__(self, "shares_refs_with_hyps", True)
        else:
            object.__setattr__(self, "pseudo_refs", as_matrix(self.pseudo_refs))
        src = np.array(self.source, dtype=np.float64 if np.asarray(self.source).dtype == np.float64 else np.float32)
        src = src.reshape(-1) if src.ndim == 2 and src.shape[0] == 1 else src
        src.flags.writeable = False
        object.__setattr__(self, "source", src)

    @classmethod
    def from_arrays(cls, source, hypotheses, pseudo_refs=None) -> "CandidateInstance":
        inst = cls(source, hypotheses, pseudo_refs)
        validate_instance(inst)
        return inst

    @property
    def dims(self) -> int:
        return self.hypotheses.dims

    @property
    def n_hyps(self) -> int:
        return self.hypotheses.rows

    @property
    def n_refs(self) -> int:
        return self.pseudo_refs.rows


def validate_instance(inst: CandidateInstance) -> None:
    """Raise if ``inst`` violates a CandidateInstance invariant."""
    src = np.asarray(inst.source)
    if src.ndim != 1:
        raise DimensionMismatch(f"source must be a vector, got shape {src.shape}")
    d = src.shape[0]
    if inst.hypotheses.dims != d or inst.pseudo_refs.dims != d:
        raise DimensionMismatch(
            f"dims disagree: source {d}, hypotheses {inst.hypotheses.dims}, "
            f"pseudo_refs {inst.pseudo_refs.dims}"
        )
    if inst.hypotheses.rows == 0:
        raise EmptySet("no hypotheses")
    if inst.pseudo_refs.rows == 0:
        raise EmptySet("no pseudo-references")
    if not np.isfinite(src).all():
        raise NonFiniteValue("source vector contains NaN or Inf")
    # matrices validate finiteness on construction, but data may be swapped in by subclasses
    if not (np.isfinite(inst.hypotheses.data).all() and np.isfinite(inst.pseudo_refs.data).all()):
        raise NonFiniteValue("candidate matrix contains NaN or Inf")
    if inst.shares_refs_with_hyps and inst.pseudo_refs is not inst.hypotheses:
        raise DimensionMismatch("shares_refs_with_hyps set but pseudo_refs is a different matrix")


def argmax_with_ties(values) -> int:
    """Index of the maximum; the lowest index wins ties."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptySet("argmax of an empty vector")
    if not np.isfinite(v).all():
        raise NonFiniteValue("argmax over non-finite values")
    # np.argmax returns the first occurrence
    return int(np.argmax(v))


@dataclass(frozen=True)
class RngHandle:
    """Seeded handle onto numpy's PCG64 bit generator.

    Each call to :meth:`generator` starts a fresh stream, so passing the
    same handle twice reproduces the same draws.
    """

    seed: int = 0
    algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(int(self.seed)))

    def child(self, *key: int) -> "RngHandle":
        """Derived handle for an independent sub-stream."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(k) for k in key))
        return RngHandle(int(ss.generate_state(1, dtype=np.uint64)[0]))


def as_rng(rng: RngHandle | int | None, default_seed: int = 0) -> RngHandle:
    if rng is None:
        return RngHandle(default_seed)
    if isinstance(rng, RngHandle):
        return rng
    return RngHandle(int(rng))


class Variant(str, enum.Enum):
    VANILLA = "vanilla"
    CBMBR = "cbmbr"
    CBMBR_CNT = "cbmbr-cnt"
    MEAN = "mean"
    ORACLE = "oracle"


@dataclass
class DecodeResult:
    selected_index: int
    expected_utilities: np.ndarray
    variant: Variant
    phase_timings: dict[str, int] = field(default_factory=dict)
    clustering: Any = None

    @property
    def selected_utility(self) -> float:
        return float(self.expected_utilities[self.selected_index])

    def to_dict(self, emit_utilities: bool = False) -> dict:
        out = {
            "variant": self.variant.value,
            "selected_index": int(self.selected_index),
            "selected_utility": self.selected_utility,
            "phase_timings_ns": {k: int(v) for k, v in self.phase_timings.items()},
        }
        if self.clustering is not None:
            out["k"] = int(self.clustering.k)
            out["cluster_counts"] = [int(c) for c in self.clustering.counts]
        if emit_utilities:
            out["expected_utilities"] = [float(x) for x in self.expected_utilities]
        return out
