"""Time each hot kernel and each decoder under the numba and numpy backends.

    python benchmarks/compare_backends.py --n 1024 --d 256 --k 64 --repeats 5
"""
import argparse
import json
import time

import numpy as np

from cbmbr import _kernels
from cbmbr.clustering import KMeansConfig, run_kmeans
from cbmbr.decoders import DecoderConfig, decode
from cbmbr.synth import gen_diverse
from cbmbr.utility import UtilityFn, score_matrix


def median_ms(fn, repeats, warmup):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return 1e3 * float(np.median(times))


def cases(args):
    inst = gen_diverse(args.n, args.d, seed=0)
    pts = inst.pseudo_refs.as64()
    g = np.random.default_rng(1)
    cents = pts[g.choice(args.n, args.k, replace=False)]
    assign = g.integers(0, args.k, size=args.n)
    src = np.asarray(inst.source, dtype=np.float64).reshape(-1)
    mlp = UtilityFn.mlp(0)
    yield "nearest_centroid", lambda: _kernels.nearest_centroid(pts, cents)
    yield "min_sq_dist_update", lambda: _kernels.min_sq_dist_update(pts, pts[0], np.full(args.n, np.inf))
    yield "cluster_sums", lambda: _kernels.cluster_sums(pts, assign, args.k)
    yield "kmeans", lambda: run_kmeans(pts, KMeansConfig(args.k, niter=args.niter), 0)
    yield "mlp_scores_vs_centroids", lambda: score_matrix(mlp, src, pts, cents)
    for variant in ("cbmbr", "cbmbr-cnt", "mean"):
        cfg = DecoderConfig(variant, mlp, KMeansConfig(args.k, niter=args.niter) if variant != "mean" else None)
        yield f"decode_{variant}", lambda cfg=cfg: decode(inst, cfg, 0)
    if not args.skip_vanilla:
        yield "decode_vanilla", lambda: decode(inst, DecoderConfig("vanilla", mlp), 0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--d", type=int, default=256)
    ap.add_argument("--k", type=int, default=64)
    ap.add_argument("--niter", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--warmup", type=int, default=2)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--skip-vanilla", action="store_true", help="skip the O(N^2) vanilla decode")
    ap.add_argument("--json", action="store_true", help="print JSON instead of a table")
    args = ap.parse_args(argv)

    _kernels.warmup()
    rows = []
    with _kernels.thread_limit(args.threads) as nthreads:
        for name, fn in cases(args):
            row = {"case": name}
            for be in _kernels.BACKENDS:
                with _kernels.use_backend(be):
                    row[be] = median_ms(fn, args.repeats, args.warmup)
            row["numpy_over_numba"] = row["numpy"] / row["numba"]
            rows.append(row)
    if args.json:
        print(json.dumps({"threads": nthreads, "n": args.n, "d": args.d, "k": args.k, "rows": rows}, indent=2))
        return
    print(f"n={args.n} d={args.d} k={args.k} threads={nthreads} (median ms)")
    print(f"{'case':<26}{'numba':>12}{'numpy':>12}{'ratio':>8}")
    for r in rows:
        print(f"{r['case']:<26}{r['numba']:>12.2f}{r['numpy']:>12.2f}{r['numpy_over_numba']:>8.2f}")


if __name__ == "__main__":
    main()
