"""Synthetic candidate sets made of isotropic Gaussian blobs.

``gen_diverse`` draws one blob (many samples from a single system);
``gen_multisystem`` concatenates several blobs of different sizes, the
setting where unweighted centroid scoring and sample averaging part ways.
Blob membership is returned next to the instance, never inside it.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import CandidateInstance, EmbeddingMatrix, validate_instance
from .errors import ScenarioError


class SourceMode(str, enum.Enum):
    ORIGIN = "origin"
    BLOB_MEAN = "blob_mean"


@dataclass(frozen=True)
class BlobSpec:
    center: tuple[float, ...]
    radius: float
    count: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if int(self.count) < 1:
            raise ScenarioError("blob count must be >= 1")
        if not float(self.radius) > 0:
            raise ScenarioError("blob radius must be > 0")


@dataclass(frozen=True)
class ScenarioSpec:
    dims: int
    blobs: tuple[BlobSpec, ...]
    source_mode: SourceMode = SourceMode.ORIGIN
    seed: int = 0
    name: str = "scenario"
    # decoding hints carried by committed scenario files; generators ignore them
    utility: str | None = None
    k: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "blobs", tuple(self.blobs))
        object.__setattr__(self, "source_mode", SourceMode(self.source_mode))
        if int(self.dims) < 1:
            raise ScenarioError("dims must be >= 1")
        if not self.blobs:
            raise ScenarioError("a scenario needs at least one blob")
        for b in self.blobs:
            if len(b.center) != self.dims:
                raise ScenarioError(f"blob center has {len(b.center)} coords, dims is {self.dims}")

    @property
    def total(self) -> int:
        return sum(b.count for b in self.blobs)

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return ScenarioSpec(self.dims, self.blobs, self.source_mode, int(seed), self.name,
                            self.utility, self.k, self.extra)


def gen_diverse(n: int, dims: int, seed: int = 0, radius: float = 1.0) -> CandidateInstance:
    """One blob of ``n`` samples around a random center; the source sits at the center."""
    if n < 1 or dims < 1:
        raise ValueError("n and dims must be >= 1")
    gen = np.random.Generator(np.random.PCG64(int(seed)))
    center = gen.standard_normal(dims)
    pts = center + radius * gen.standard_normal((n, dims))
    hyps = EmbeddingMatrix(pts.astype(np.float32), copy=False)
    inst = CandidateInstance(center.astype(np.float32), hyps)
    validate_instance(inst)
    return inst


def gen_multisystem(spec: ScenarioSpec) -> tuple[CandidateInstance, np.ndarray]:
    """Blob samples concatenated in blob order, plus per-row blob membership."""
    gen = np.random.Generator(np.random.PCG64(int(spec.seed)))
    parts, member = [], []
    for bi, b in enumerate(spec.blobs):
        c = np.asarray(b.center)
        parts.append(c + b.radius * gen.standard_normal((b.count, spec.dims)))
        member.append(np.full(b.count, bi, dtype=np.int64))
    if spec.source_mode is SourceMode.ORIGIN:
        src = np.zeros(spec.dims)
    else:
        src = np.mean([b.center for b in spec.blobs], axis=0)
    hyps = EmbeddingMatrix(np.concatenate(parts).astype(np.float32), copy=False)
    inst = CandidateInstance(src.astype(np.float32), hyps)
    validate_instance(inst)
    return inst, np.concatenate(member)


def diverse_spec(n: int, dims: int, seed: int = 0, radius: float = 1.0) -> ScenarioSpec:
    """A single-blob ScenarioSpec (center drawn from ``seed``), for CLI presets."""
    gen = np.random.Generator(np.random.PCG64(int(seed)))
    center = gen.standard_normal(dims)
    return ScenarioSpec(dims, (BlobSpec(center, radius, n),), SourceMode.BLOB_MEAN, seed, f"diverse-{n}x{dims}")
