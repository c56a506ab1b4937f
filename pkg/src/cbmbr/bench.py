"""Benchmark harness and quality sweep.

Timings use ``time.perf_counter_ns``. Each (variant, k) cell runs
``warmup`` untimed iterations, then ``repeats`` timed ones, and reports
the median of every phase separately:

``gen``      building the instance (stands in for sentence encoding)
``kmeans``   clustering; for ``mean`` this is the mean computation
``utility``  scoring, expectation and argmax
``e2e``      everything above plus bookkeeping
"""
from __future__ import annotations

import csv
import json
import platform
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .clustering import Init, KMeansConfig
from .core import Variant
from .decoders import DecoderConfig, cbmbr, cbmbr_cnt, decode, vanilla_mbr
from .errors import KTooLarge
from .synth import ScenarioSpec, gen_multisystem
from .utility import UtilityFn

CSV_FIELDS = (
    "variant", "n", "k", "d", "utility", "init", "niter", "threads", "backend",
    "repeats", "warmup", "gen_ns", "kmeans_ns", "utility_ns", "e2e_ns",
    "selected_index", "selected_utility", "vanilla_utility", "agrees_with_vanilla",
)

QUALITY_FIELDS = ("k", "seed", "init", "n", "regret_cbmbr", "regret_cbmbr_cnt",
                  "gap_cbmbr", "agree_cbmbr", "agree_cbmbr_cnt")


@dataclass
class BenchRecord:
    variant: str
    n: int
    k: int
    d: int
    utility: str
    init: str
    niter: int
    threads: int
    backend: str
    repeats: int
    warmup: int
    gen_ns: int
    kmeans_ns: int
    utility_ns: int
    e2e_ns: int
    selected_index: int
    selected_utility: float
    vanilla_utility: float
    agrees_with_vanilla: bool

    @property
    def decode_ns(self) -> int:
        return self.kmeans_ns + self.utility_ns


@dataclass
class BenchReport:
    records: list[BenchRecord]
    meta: dict = field(default_factory=dict)

    def find(self, variant: str, k: int | None = None) -> BenchRecord:
        for r in self.records:
            if r.variant == variant and (k is None or r.k == k):
                return r
        raise KeyError((variant, k))

    def speedups(self) -> list[dict]:
        """vanilla/variant time ratios for every centroid-based row."""
        try:
            van = self.find(Variant.VANILLA.value)
        except KeyError:
            return []
        out = []
        for r in self.records:
            if r.variant == van.variant:
                continue
            out.append({
                "variant": r.variant,
                "k": r.k,
                "utility_only": van.utility_ns / max(r.utility_ns, 1),
                "with_clustering": van.utility_ns / max(r.decode_ns, 1),
            })
        return out

    def to_dict(self) -> dict:
        return {"meta": self.meta, "records": [asdict(r) for r in self.records], "speedups": self.speedups()}

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jpath, cpath = out / "report.json", out / "report.csv"
        jpath.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        write_csv(cpath, CSV_FIELDS, [asdict(r) for r in self.records])
        return jpath, cpath


def write_csv(path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row[k]) for k in fields})


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def _median(xs) -> int:
    return int(round(statistics.median(xs)))


def time_cell(spec: ScenarioSpec, cfg: DecoderConfig, repeats: int, warmup: int, seed: int):
    """Run one (variant, k) cell; return median phase timings and the last result."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    phases = {"gen": [], "kmeans": [], "utility": [], "e2e": []}
    res = None
    for it in range(warmup + repeats):
        t0 = time.perf_counter_ns()
        inst, _ = gen_multisystem(spec)
        t1 = time.perf_counter_ns()
        res = decode(inst, cfg, seed)
        t2 = time.perf_counter_ns()
        if it < warmup:
            continue
        pt = res.phase_timings
        phases["gen"].append(t1 - t0)
        phases["kmeans"].append(pt.get("kmeans", pt.get("mean", 0)))
        phases["utility"].append(pt["utility"])
        phases["e2e"].append(t2 - t0)
    return {k: _median(v) for k, v in phases.items()}, res


def run_bench(spec: ScenarioSpec, utility: UtilityFn, variants=("vanilla", "cbmbr", "cbmbr-cnt", "mean"),
              k_sweep=(1, 4, 16, 64), repeats: int = 5, warmup: int = 3, seed: int = 0,
              threads: int | None = None, niter: int = 1, init: str = "kpp") -> BenchReport:
    variants = [Variant(v) for v in variants]
    n = spec.total
    for k in k_sweep:
        if k > n and any(v in (Variant.CBMBR, Variant.CBMBR_CNT) for v in variants):
            raise KTooLarge(f"k={k} exceeds the number of pseudo-references ({n})")
    init = Init(init)
    records = []
    with _kernels.thread_limit(threads) as nthreads:
        _kernels.warmup()
        inst, _ = gen_multisystem(spec)
        cells = []
        for v in variants:
            if v in (Variant.CBMBR, Variant.CBMBR_CNT):
                cells += [(v, k) for k in k_sweep]
            else:
                cells.append((v, n if v is Variant.VANILLA else 1))
        van_timed = None
        if Variant.VANILLA in variants:
            van_timed = time_cell(spec, DecoderConfig(Variant.VANILLA, utility), repeats, warmup, seed)
            reference = van_timed[1]
        else:
            reference = vanilla_mbr(inst, utility)
        e_van = reference.expected_utilities
        for v, k in cells:
            if v is Variant.VANILLA:
                med, res = van_timed
            else:
                km = KMeansConfig(k, niter=niter, init=init, seed=seed) if v in (Variant.CBMBR, Variant.CBMBR_CNT) else None
                med, res = time_cell(spec, DecoderConfig(v, utility, km), repeats, warmup, seed)
            records.append(BenchRecord(
                variant=v.value, n=n, k=k, d=spec.dims, utility=utility.name, init=init.value,
                niter=niter, threads=nthreads, backend=_kernels.get_backend(), repeats=repeats,
                warmup=warmup, gen_ns=med["gen"], kmeans_ns=med["kmeans"], utility_ns=med["utility"],
                e2e_ns=med["e2e"], selected_index=res.selected_index,
                selected_utility=res.selected_utility,
                vanilla_utility=float(e_van[res.selected_index]),
                agrees_with_vanilla=bool(res.selected_index == reference.selected_index),
            ))
    meta = {
        "scenario": spec.name, "n": n, "d": spec.dims, "seed": seed, "threads": nthreads,
        "backend": _kernels.get_backend(), "repeats": repeats, "warmup": warmup,
        "python": platform.python_version(), "numpy": np.__version__, "machine": platform.machine(),
        "clock": "perf_counter_ns (monotonic)", "statistic": "median",
        "e2e_note": "end-to-end covers instance generation, clustering and utility; no sentence encoding",
    }
    return BenchReport(records, meta)


def sweep_quality(spec: ScenarioSpec, utility: UtilityFn, ks=(1, 4, 16, 64), seeds=range(32),
                  inits=("kpp",), niter: int = 1, threads: int | None = None):
    """Selection regret of cbmbr / cbmbr-cnt against vanilla, per (k, seed, init).

    Regret is ``E[sel_vanilla] - E[sel_variant]`` under vanilla's own
    expected utilities, so it is >= 0 and zero when the selections agree.
    Seed ``s`` regenerates the instance with ``spec.seed + s`` and seeds
    clustering with ``s``.
    """
    rows = []
    with _kernels.thread_limit(threads):
        for s in seeds:
            inst, _ = gen_multisystem(spec.with_seed(spec.seed + s))
            if max(ks) > inst.n_refs:
                raise KTooLarge(f"k={max(ks)} exceeds the number of pseudo-references ({inst.n_refs})")
            van = vanilla_mbr(inst, utility)
            e = van.expected_utilities
            best = e[van.selected_index]
            for init in inits:
                for k in ks:
                    km = KMeansConfig(k, init=init, niter=niter, seed=s)
                    c = cbmbr(inst, DecoderConfig(Variant.CBMBR, utility, km), s)
                    w = cbmbr_cnt(inst, DecoderConfig(Variant.CBMBR_CNT, utility, km), s)
                    rows.append({
                        "k": k, "seed": s, "init": Init(init).value, "n": inst.n_refs,
                        "regret_cbmbr": float(best - e[c.selected_index]),
                        "regret_cbmbr_cnt": float(best - e[w.selected_index]),
                        "gap_cbmbr": float(np.abs(c.expected_utilities - e).mean()),
                        "agree_cbmbr": bool(c.selected_index == van.selected_index),
                        "agree_cbmbr_cnt": bool(w.selected_index == van.selected_index),
                    })
    return rows


def summarize_quality(rows) -> list[dict]:
    """Mean regret and gap per (init, k)."""
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r["init"], r["k"]), []).append(r)
    out = []
    for (init, k), rs in sorted(groups.items()):
        out.append({
            "init": init, "k": k, "seeds": len(rs),
            "mean_regret_cbmbr": float(np.mean([r["regret_cbmbr"] for r in rs])),
            "mean_regret_cbmbr_cnt": float(np.mean([r["regret_cbmbr_cnt"] for r in rs])),
            "mean_gap_cbmbr": float(np.mean([r["gap_cbmbr"] for r in rs])),
        })
    return out
