"""MBR selection rules over a :class:`CandidateInstance`.

Each decoder returns a :class:`DecodeResult` whose ``phase_timings`` hold
nanoseconds for ``kmeans`` (centroid decoders only) and ``utility``
(scoring, expectation and argmax).
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .clustering import Clustering, KMeansConfig, mean_vector, run_kmeans
from .core import (CandidateInstance, DecodeResult, RngHandle, Variant, argmax_with_ties,
                   as_rng, validate_instance)
from .errors import DimensionMismatch, KTooLarge
from .utility import UtilityFn, score_matrix


@dataclass(frozen=True)
class DecoderConfig:
    variant: Variant
    utility: UtilityFn
    kmeans: KMeansConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant in (Variant.CBMBR, Variant.CBMBR_CNT) and self.kmeans is None:
            raise ValueError(f"{self.variant.value} needs a KMeansConfig")


def vanilla_mbr(inst: CandidateInstance, u: UtilityFn) -> DecodeResult:
    validate_instance(inst)
    t0 = time.perf_counter_ns()
    s = score_matrix(u, inst.source, inst.hypotheses, inst.pseudo_refs).values
    expected = s.mean(axis=1)
    idx = argmax_with_ties(expected)
    timings = {"utility": time.perf_counter_ns() - t0}
    return DecodeResult(idx, expected, Variant.VANILLA, timings)


def _clustered(inst, cfg, rng):
    validate_instance(inst)
    if cfg.kmeans.k > inst.n_refs:
        raise KTooLarge(f"k={cfg.kmeans.k} exceeds the number of pseudo-references ({inst.n_refs})")
    t0 = time.perf_counter_ns()
    cl = run_kmeans(inst.pseudo_refs, cfg.kmeans, as_rng(rng, cfg.kmeans.seed))
    return cl, time.perf_counter_ns() - t0


def cbmbr(inst: CandidateInstance, cfg: DecoderConfig, rng: RngHandle | int | None = None) -> DecodeResult:
    """Uniform expectation of the utility over the k-means centroids."""
    cl, t_km = _clustered(inst, cfg, rng)
    t0 = time.perf_counter_ns()
    s = score_matrix(cfg.utility, inst.source, inst.hypotheses, cl.centroids).values
    expected = s.mean(axis=1)
    idx = argmax_with_ties(expected)
    timings = {"kmeans": t_km, "utility": time.perf_counter_ns() - t0}
    return DecodeResult(idx, expected, Variant.CBMBR, timings, cl)


def cbmbr_cnt(inst: CandidateInstance, cfg: DecoderConfig, rng: RngHandle | int | None = None) -> DecodeResult:
    """Centroid scores weighted by each cluster's share of the pseudo-references."""
    cl, t_km = _clustered(inst, cfg, rng)
    t0 = time.perf_counter_ns()
    s = score_matrix(cfg.utility, inst.source, inst.hypotheses, cl.centroids).values
    expected = s @ cl.weights()
    idx = argmax_with_ties(expected)
    timings = {"kmeans": t_km, "utility": time.perf_counter_ns() - t0}
    return DecodeResult(idx, expected, Variant.CBMBR_CNT, timings, cl)


def mean_aggregate(inst: CandidateInstance, u: UtilityFn) -> DecodeResult:
    """Score every hypothesis against the single mean pseudo-reference."""
    validate_instance(inst)
    t0 = time.perf_counter_ns()
    c1 = mean_vector(inst.pseudo_refs)
    t_mean = time.perf_counter_ns() - t0
    t0 = time.perf_counter_ns()
    expected = score_matrix(u, inst.source, inst.hypotheses, c1[None, :]).values.mean(axis=1)
    idx = argmax_with_ties(expected)
    timings = {"mean": t_mean, "utility": time.perf_counter_ns() - t0}
    cl = Clustering(c1[None, :], np.zeros(inst.n_refs, dtype=np.int64),
                    np.array([inst.n_refs]), 1, np.array([inst.n_refs]))
    return DecodeResult(idx, expected, Variant.MEAN, timings, cl)


def oracle_select(inst: CandidateInstance, u: UtilityFn, gold_ref) -> DecodeResult:
    """Pick the hypothesis scoring best against a single gold reference."""
    validate_instance(inst)
    gold = np.asarray(gold_ref, dtype=np.float64).reshape(-1)
    if gold.shape[0] != inst.dims:
        raise DimensionMismatch(f"gold_ref has {gold.shape[0]} dims, instance {inst.dims}")
    t0 = time.perf_counter_ns()
    expected = score_matrix(u, inst.source, inst.hypotheses, gold[None, :]).values[:, 0]
    idx = argmax_with_ties(expected)
    return DecodeResult(idx, expected, Variant.ORACLE, {"utility": time.perf_counter_ns() - t0})


def decode(inst: CandidateInstance, cfg: DecoderConfig, rng: RngHandle | int | None = None) -> DecodeResult:
    """Dispatch on ``cfg.variant``."""
    v = cfg.variant
    if v is Variant.VANILLA:
        return vanilla_mbr(inst, cfg.utility)
    if v is Variant.MEAN:
        return mean_aggregate(inst, cfg.utility)
    if v is Variant.CBMBR:
        return cbmbr(inst, cfg, rng)
    if v is Variant.CBMBR_CNT:
        return cbmbr_cnt(inst, cfg, rng)
    raise ValueError(f"variant {v.value} cannot be decoded without a gold reference")
