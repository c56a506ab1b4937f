"""Exit criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) and
asserts its own runtime budget. Timing budgets exclude one-time JIT
compilation, which the session fixture in conftest performs up front.
"""
import contextlib
import json
import time

import numpy as np
import pytest

from cbmbr.bench import run_bench, sweep_quality, summarize_quality
from cbmbr.cli import main
from cbmbr.clustering import (Init, KMeansConfig, assign_step, kmeanspp_indices, kmeanspp_init, run_kmeans,
                              update_step, within_cluster_ss)
from cbmbr.core import CandidateInstance
from cbmbr.decoders import DecoderConfig, cbmbr, cbmbr_cnt, mean_aggregate, vanilla_mbr
from cbmbr.errors import BadMagic, TruncatedFile, VersionUnsupported
from cbmbr.io import decode_embeddings, encode_embeddings, load_scenario, read_embeddings, write_embeddings
from cbmbr.synth import diverse_spec, gen_multisystem
from cbmbr.utility import UtilityFn

from .conftest import ACCEPTANCE_LINES, rel_dev

DOT = UtilityFn.dot()
ALL_KINDS = [UtilityFn.dot(), UtilityFn.cosine(), UtilityFn.rbf(0.5), UtilityFn.mlp(7)]


@contextlib.contextmanager
def criterion(num: int, title: str, budget_s: float):
    key = f"AC{num}"
    t0 = time.perf_counter()
    detail = {}
    try:
        yield detail
        elapsed = time.perf_counter() - t0
        assert elapsed < budget_s, f"runtime {elapsed:.1f}s exceeds {budget_s}s"
    except BaseException as exc:
        elapsed = time.perf_counter() - t0
        ACCEPTANCE_LINES[key] = f"FAIL {key} {title} ({elapsed:.1f}s): {str(exc).splitlines()[0][:160]}"
        raise
    info = " ".join(f"{k}={v}" for k, v in detail.items())
    ACCEPTANCE_LINES[key] = f"PASS {key} {title} ({elapsed:.1f}s) {info}".rstrip()


def km(variant, k, u=DOT, seed=0, init="kpp", niter=1):
    return DecoderConfig(variant, u, KMeansConfig(k, niter=niter, init=init, seed=seed))


def test_ac1_exactness_oracle():
    with criterion(1, "exactness under affine utility", 5.0) as d:
        worst = 0.0
        for i in range(200):
            g = np.random.default_rng(1000 + i)
            n, dims = int(g.integers(2, 65)), int(g.integers(2, 17))
            inst = CandidateInstance(g.standard_normal(dims).astype(np.float32),
                                     g.standard_normal((n, dims)).astype(np.float32))
            v = vanilla_mbr(inst, DOT)
            picks = {mean_aggregate(inst, DOT).selected_index, cbmbr(inst, km("cbmbr", 1, seed=i), i).selected_index}
            for k in sorted({1, 2, min(4, n), n}):
                w = cbmbr_cnt(inst, km("cbmbr-cnt", k, seed=i), i)
                worst = max(worst, rel_dev(w.expected_utilities, v.expected_utilities))
                picks.add(w.selected_index)
            assert picks == {v.selected_index}, f"instance {i}: {picks} vs {v.selected_index}"
        assert worst <= 1e-9, worst
        d["max_rel_dev"] = f"{worst:.1e}"


def test_ac2_singleton_clusters():
    with criterion(2, "k = N_r reproduces vanilla for every utility", 10.0) as d:
        worst = 0.0
        for i in range(50):
            g = np.random.default_rng(2000 + i)
            n, dims = int(g.integers(2, 49)), int(g.integers(2, 13))
            inst = CandidateInstance(g.standard_normal(dims).astype(np.float32),
                                     g.standard_normal((n, dims)).astype(np.float32))
            assert len(np.unique(inst.pseudo_refs.data, axis=0)) == n
            for u in ALL_KINDS:
                v = vanilla_mbr(inst, u)
                c = cbmbr(inst, km("cbmbr", n, u, seed=i), i)
                dev = rel_dev(c.expected_utilities, v.expected_utilities)
                worst = max(worst, dev)
                assert dev <= 1e-6, (i, u.name, dev)
        d["max_rel_dev"] = f"{worst:.1e}"


def test_ac3_speedup():
    with criterion(3, "utility-phase speedup at N=1024 k=64 D=256 (mlp, 1 thread)", 120.0) as d:
        report = run_bench(diverse_spec(1024, 256, seed=0), UtilityFn.mlp(0), variants=["vanilla", "cbmbr"],
                           k_sweep=[64], repeats=5, warmup=3, threads=1)
        van, cb = report.find("vanilla"), report.find("cbmbr", 64)
        with_km = van.utility_ns / (cb.kmeans_ns + cb.utility_ns)
        util_only = van.utility_ns / cb.utility_ns
        d.update(backend=report.meta["backend"], with_kmeans=f"{with_km:.1f}x", utility_only=f"{util_only:.1f}x")
        assert cb.threads == van.threads == 1
        assert with_km >= 4.0, f"speedup incl. k-means {with_km:.2f}x < 4x"
        assert util_only >= 8.0, f"utility-only speedup {util_only:.2f}x < 8x"


def test_ac4_kmeanspp_weight_law():
    with criterion(4, "k-means++ second-pick frequencies", 10.0) as d:
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]])
        d2 = np.array([min(((p - pts[0]) ** 2).sum(), np.inf) for p in pts])
        expected = d2 / d2.sum()
        assert np.allclose(expected, [0, 1 / 17, 16 / 17])
        trials = 100_000
        picks = np.zeros(3, dtype=np.int64)
        for s in range(trials):
            picks[kmeanspp_indices(pts, 2, s, first_index=0)[1]] += 1
        l1 = float(np.abs(picks / trials - expected).sum())
        d["l1"] = f"{l1:.4f}"
        assert l1 <= 0.01


def test_ac5_clustering_invariants():
    with criterion(5, "Lloyd monotonicity, consistency, counts, empty clusters", 30.0) as d:
        empties = 0
        for i in range(500):
            g = np.random.default_rng(5000 + i)
            n, dims = int(g.integers(1, 65)), int(g.integers(1, 9))
            if i % 2:
                # few distinct rows force coincident seeds and empty clusters
                pool = g.standard_normal((int(g.integers(1, 4)), dims))
                pts = pool[g.integers(0, len(pool), size=n)]
            else:
                pts = g.standard_normal((n, dims))
            k = int(g.integers(1, n + 1))
            init = Init.KMEANS_PP if i % 3 else Init.RANDOM
            cents = kmeanspp_init(pts, k, i) if init is Init.KMEANS_PP else pts[g.choice(n, k, replace=False)]
            prev_ss = np.inf
            for _ in range(3):
                a = assign_step(pts, cents)
                ss_a = within_cluster_ss(pts, cents, a)
                new = update_step(pts, a, k, cents)
                ss_u = within_cluster_ss(pts, new, a)
                tol = 1e-9 * (1 + ss_a)
                assert ss_a <= prev_ss + tol and ss_u <= ss_a + tol, i
                empty = np.setdiff1d(np.arange(k), a)
                empties += len(empty)
                assert np.array_equal(new[empty], cents[empty]), i
                cents, prev_ss = new, ss_u
            cl = run_kmeans(pts, KMeansConfig(k, niter=int(g.integers(0, 4)), init=init), i)
            assert cl.counts.sum() == n
            assert np.array_equal(cl.counts, np.bincount(cl.assignments, minlength=k))
            dist = ((pts[:, None, :] - cl.centroids[None]) ** 2).sum(-1)
            own = dist[np.arange(n), cl.assignments]
            assert np.all(own <= dist.min(axis=1) + 1e-9 * (1 + dist.min(axis=1))), i
        d["empty_cluster_events"] = empties
        assert empties > 0


def test_ac6_quality_trend():
    with criterion(6, "regret falls with k; k-means++ <= random at k=64", 120.0) as d:
        spec = load_scenario("multimodal")
        rows = sweep_quality(spec, UtilityFn.parse(spec.utility), ks=(1, 64), seeds=range(32),
                             inits=("kpp", "random"))
        s = {(r["init"], r["k"]): r for r in summarize_quality(rows)}
        r1, r64 = s[("kpp", 1)]["mean_regret_cbmbr"], s[("kpp", 64)]["mean_regret_cbmbr"]
        rr64 = s[("random", 64)]["mean_regret_cbmbr"]
        d.update(regret_k1=f"{r1:.4f}", regret_k64=f"{r64:.4f}", regret_k64_random=f"{rr64:.4f}",
                 cnt_k64_kpp=f"{s[('kpp', 64)]['mean_regret_cbmbr_cnt']:.4f}",
                 cnt_k64_random=f"{s[('random', 64)]['mean_regret_cbmbr_cnt']:.4f}")
        assert r64 < r1, f"mean regret at k=64 ({r64:.4f}) not below k=1 ({r1:.4f})"
        assert r64 <= rr64, (f"k-means++ regret at k=64 ({r64:.4f}) exceeds random init ({rr64:.4f}); "
                             f"cbmbr-cnt: kpp {d['cnt_k64_kpp']} random {d['cnt_k64_random']}")


def test_ac7_multimodal_planted():
    with criterion(7, "unweighted cbmbr picks the planted minority blob", 5.0) as d:
        spec = load_scenario("planted")
        inst, member = gen_multisystem(spec)
        u = UtilityFn.parse(spec.utility)
        majority = int(np.argmax(np.bincount(member)))
        v = vanilla_mbr(inst, u)
        picks = []
        for _ in range(2):
            c = cbmbr(inst, km("cbmbr", spec.k, u, seed=spec.seed), spec.seed)
            w = cbmbr_cnt(inst, km("cbmbr-cnt", spec.k, u, seed=spec.seed), spec.seed)
            picks.append((c.selected_index, w.selected_index))
        assert picks[0] == picks[1]
        c_idx, w_idx = picks[0]
        d.update(cbmbr_blob=int(member[c_idx]), cnt_blob=int(member[w_idx]), vanilla_blob=int(member[v.selected_index]))
        assert member[c_idx] != majority
        assert member[w_idx] == majority
        assert member[v.selected_index] == majority


def test_ac8_format_and_cli(tmp_path, capsys):
    with criterion(8, "embedding format round trip, error codes, CLI determinism", 5.0):
        m = np.random.default_rng(8).standard_normal((33, 7)).astype(np.float32)
        write_embeddings(tmp_path / "h.emb", m)
        assert read_embeddings(tmp_path / "h.emb").data.tobytes() == m.tobytes()
        buf = encode_embeddings(m)
        cases = [(b"XXXXXXXX" + buf[8:], BadMagic), (buf[:-4], TruncatedFile),
                 (buf[:8] + (7).to_bytes(4, "little") + buf[12:], VersionUnsupported)]
        for bad, err in cases:
            with pytest.raises(err):
                decode_embeddings(bad)
        (tmp_path / "bad.emb").write_bytes(cases[0][0])
        write_embeddings(tmp_path / "s.emb", m[:1])
        outs = []
        for _ in range(2):
            assert main(["decode", "--hyps", str(tmp_path / "h.emb"), "--src", str(tmp_path / "s.emb"),
                         "--variant", "cbmbr", "--k", "4", "--utility", "mlp:2", "--seed", "5",
                         "--emit-utilities"]) == 0
            out = json.loads(capsys.readouterr().out)
            out.pop("phase_timings_ns")
            outs.append(out)
        assert outs[0] == outs[1]
        assert main(["decode", "--hyps", str(tmp_path / "bad.emb"), "--src", str(tmp_path / "s.emb")]) == 1
        assert json.loads(capsys.readouterr().err)["error"] == "BadMagic"
