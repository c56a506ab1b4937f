"""Embedding file format and scenario config files.

Embedding files are a 24-byte little-endian header followed by the
row-major float32 payload::

    offset  size  field
    0       8     magic  b"CBMBREMB"
    8       4     version (u32, currently 1)
    12      8     rows    (u64)
    20      4     dims    (u32)
    24      ...   rows * dims float32, little-endian

Scenario files are YAML mappings; see ``scenarios/*.yaml`` for examples.
"""
from __future__ import annotations

import os
import struct
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .core import EmbeddingMatrix, as_matrix
from .errors import (BadMagic, DimensionMismatch, ScenarioError, TrailingData, TruncatedFile,
                     VersionUnsupported)
from .synth import BlobSpec, ScenarioSpec

MAGIC = b"CBMBREMB"
VERSION = 1
_HEADER = struct.Struct("<8sIQI")


def encode_embeddings(m) -> bytes:
    m = as_matrix(m)
    payload = np.ascontiguousarray(m.data, dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, VERSION, m.rows, m.dims) + payload


def decode_embeddings(buf: bytes) -> EmbeddingMatrix:
    if len(buf) < _HEADER.size:
        if len(buf) >= 8 and buf[:8] != MAGIC:
            raise BadMagic(f"bad magic {buf[:8]!r}")
        raise TruncatedFile(f"header needs {_HEADER.size} bytes, got {len(buf)}")
    magic, version, rows, dims = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"version {version} (supported: {VERSION})")
    if dims < 1:
        raise DimensionMismatch("dims must be >= 1")
    need = rows * dims * 4
    have = len(buf) - _HEADER.size
    if have < need:
        raise TruncatedFile(f"payload needs {need} bytes, got {have}")
    if have > need:
        raise TrailingData(f"{have - need} unexpected bytes after payload")
    arr = np.frombuffer(buf, dtype="<f4", count=rows * dims, offset=_HEADER.size)
    return EmbeddingMatrix(arr.astype(np.float32).reshape(rows, dims), copy=False)


def write_embeddings(path, m) -> None:
    Path(path).write_bytes(encode_embeddings(m))


def read_embeddings(path) -> EmbeddingMatrix:
    return decode_embeddings(Path(path).read_bytes())


# ---------------------------------------------------------------- scenarios


def builtin_scenarios() -> list[str]:
    root = resources.files("cbmbr") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def _center(raw, dims: int, gen: np.random.Generator) -> np.ndarray:
    if isinstance(raw, dict):
        if "random" in raw:
            return float(raw["random"]) * gen.standard_normal(dims)
        if "axis" in raw:
            c = np.zeros(dims)
            c[int(raw["axis"])] = float(raw.get("value", 1.0))
            return c
        raise ScenarioError(f"unknown center form {raw!r}")
    if isinstance(raw, (int, float)):
        return np.full(dims, float(raw))
    return np.asarray(raw, dtype=np.float64)


def scenario_from_dict(d: dict, name: str = "scenario") -> ScenarioSpec:
    try:
        dims = int(d["dims"])
        seed = int(d.get("seed", 0))
        gen = np.random.Generator(np.random.PCG64(int(d.get("center_seed", seed))))
        blobs = []
        for b in d["blobs"]:
            repeat = int(b.get("repeat", 1))
            for _ in range(repeat):
                blobs.append(BlobSpec(_center(b.get("center", 0.0), dims, gen), float(b["radius"]), int(b["count"])))
        known = {"dims", "seed", "center_seed", "blobs", "source_mode", "name", "utility", "k"}
        return ScenarioSpec(
            dims=dims,
            blobs=tuple(blobs),
            source_mode=d.get("source_mode", "origin"),
            seed=seed,
            name=str(d.get("name", name)),
            utility=d.get("utility"),
            k=int(d["k"]) if d.get("k") is not None else None,
            extra={k: v for k, v in d.items() if k not in known},
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario: {exc!r}") from None


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    out = {
        "name": spec.name,
        "dims": spec.dims,
        "seed": spec.seed,
        "source_mode": spec.source_mode.value,
        "blobs": [{"count": b.count, "radius": b.radius, "center": list(b.center)} for b in spec.blobs],
    }
    if spec.utility is not None:
        out["utility"] = spec.utility
    if spec.k is not None:
        out["k"] = spec.k
    out.update(spec.extra)
    return out


def load_scenario(path_or_name) -> ScenarioSpec:
    """Load a scenario from a YAML path or a built-in name (e.g. ``planted``)."""
    p = Path(path_or_name)
    if p.suffix in (".yaml", ".yml", ".json") or p.exists():
        if not p.exists():
            raise FileNotFoundError(str(p))
        text = p.read_text()
        name = p.stem
    else:
        res = resources.files("cbmbr") / "scenarios" / f"{path_or_name}.yaml"
        if not res.is_file():
            raise ScenarioError(f"no scenario file or built-in named {str(path_or_name)!r}")
        text = res.read_text()
        name = str(path_or_name)
    raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ScenarioError("scenario file must hold a mapping")
    return scenario_from_dict(raw, name)


def dump_scenario(spec: ScenarioSpec, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(scenario_to_dict(spec), fh, sort_keys=False)


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
