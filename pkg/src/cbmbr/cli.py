"""Command line interface.

    cbmbr decode         select one hypothesis from embedding files
    cbmbr bench          time decoders and write report.json / report.csv
    cbmbr sweep-quality  selection regret versus k over many seeds
    cbmbr gen            write a synthetic scenario as embedding files

Exit codes: 0 success, 1 data error, 2 bad flags. Errors are printed to
stderr as a JSON object with ``error`` and ``message`` keys.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .bench import QUALITY_FIELDS, run_bench, summarize_quality, sweep_quality, write_csv
from .clustering import Init, KMeansConfig
from .core import CandidateInstance, Variant
from .decoders import DecoderConfig, decode
from .errors import CbmbrError, DimensionMismatch
from .io import load_scenario, read_embeddings, write_embeddings
from .synth import diverse_spec, gen_multisystem
from .utility import UtilityFn

EXIT_DATA = 1
EXIT_USAGE = 2

VARIANTS = [v.value for v in Variant if v is not Variant.ORACLE]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        sys.exit(EXIT_USAGE)


def _emit_error(code: str, message: str) -> None:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 0:
        raise argparse.ArgumentTypeError(f"expected non-negative integers, got {text!r}")
    return vals


def _variant_list(text: str) -> list[str]:
    vals = [x.strip() for x in text.split(",") if x.strip()]
    bad = [v for v in vals if v not in VARIANTS]
    if bad or not vals:
        raise argparse.ArgumentTypeError(f"unknown variant(s) {bad}; choose from {VARIANTS}")
    return vals


def _utility(text: str) -> UtilityFn:
    try:
        return UtilityFn.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _add_common(p, *, default_utility="dot"):
    p.add_argument("--utility", type=_utility, default=None if default_utility is None else UtilityFn.parse(default_utility),
                   help="dot | cosine | rbf:<gamma> | mlp:<seed>")
    p.add_argument("--niter", type=_nonneg, default=1, help="Lloyd iterations after seeding (default 1)")
    p.add_argument("--init", choices=[i.value for i in Init], default="kpp")
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--threads", type=_positive, default=None,
                   help="thread count (default: $CBMBR_THREADS or 1)")


def _add_scenario(p):
    p.add_argument("--scenario", default=None, help="scenario YAML path or built-in name")
    p.add_argument("--n", type=_positive, default=None, help="single-blob preset: number of candidates")
    p.add_argument("--d", type=_positive, default=None, help="single-blob preset: embedding dims")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cbmbr", description="Minimum Bayes risk selection over embedding vectors.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decode", help="select a hypothesis from embedding files")
    p.add_argument("--hyps", required=True, help="hypothesis embedding file")
    p.add_argument("--refs", default=None, help="pseudo-reference file (default: reuse --hyps)")
    p.add_argument("--src", required=True, help="source embedding file with one row")
    p.add_argument("--variant", choices=VARIANTS, default="cbmbr")
    p.add_argument("--k", type=_positive, default=64)
    p.add_argument("--emit-utilities", action="store_true")
    _add_common(p)

    p = sub.add_parser("bench", help="time decoders, write report.json and report.csv")
    _add_scenario(p)
    p.add_argument("--variants", type=_variant_list, default=["vanilla", "cbmbr", "cbmbr-cnt", "mean"])
    p.add_argument("--k-sweep", type=_int_list, default=[1, 4, 16, 64])
    p.add_argument("--repeats", type=_positive, default=5)
    p.add_argument("--warmup", type=_nonneg, default=3)
    p.add_argument("--backend", choices=list(_kernels.BACKENDS), default=None)
    p.add_argument("--out", default="bench-out")
    _add_common(p, default_utility=None)

    p = sub.add_parser("sweep-quality", help="selection regret of centroid decoders versus k")
    _add_scenario(p)
    p.add_argument("--k", dest="ks", type=_int_list, default=[1, 4, 16, 64])
    p.add_argument("--seeds", default="32", help="seed count N (uses 0..N-1) or comma-separated seeds")
    p.add_argument("--inits", default="kpp", help="comma-separated init methods (kpp,random)")
    p.add_argument("--out", default="sweep-out")
    _add_common(p, default_utility=None)

    p = sub.add_parser("gen", help="write a synthetic scenario as embedding files")
    _add_scenario(p)
    p.add_argument("--seed", type=_nonneg, default=None)
    p.add_argument("--out", required=True)
    return parser


def _scenario(args, parser):
    if args.scenario is not None:
        spec = load_scenario(args.scenario)
    elif args.n is not None and args.d is not None:
        spec = diverse_spec(args.n, args.d, seed=getattr(args, "seed", None) or 0)
    else:
        parser.error("give --scenario or both --n and --d")
    return spec


def _scenario_utility(args, spec) -> UtilityFn:
    if args.utility is not None:
        return args.utility
    return UtilityFn.parse(spec.utility) if spec.utility else UtilityFn.mlp(0)


def cmd_decode(args, parser) -> int:
    hyps = read_embeddings(args.hyps)
    refs = read_embeddings(args.refs) if args.refs else None
    src = read_embeddings(args.src)
    if src.rows != 1:
        raise DimensionMismatch(f"--src must hold exactly one row, found {src.rows}")
    inst = CandidateInstance(src.data[0], hyps, refs)
    variant = Variant(args.variant)
    km = None
    if variant in (Variant.CBMBR, Variant.CBMBR_CNT):
        km = KMeansConfig(args.k, niter=args.niter, init=args.init, seed=args.seed)
    with _kernels.thread_limit(args.threads) as n:
        _kernels.warmup()
        res = decode(inst, DecoderConfig(variant, args.utility, km), args.seed)
    out = res.to_dict(emit_utilities=args.emit_utilities)
    out.update({"utility": args.utility.name, "n_hyps": inst.n_hyps, "n_refs": inst.n_refs,
                "dims": inst.dims, "threads": n})
    print(json.dumps(out))
    return 0


def cmd_bench(args, parser) -> int:
    spec = _scenario(args, parser)
    if args.backend:
        _kernels.set_backend(args.backend)
    report = run_bench(spec, _scenario_utility(args, spec), variants=args.variants, k_sweep=args.k_sweep,
                       repeats=args.repeats, warmup=args.warmup, seed=args.seed, threads=args.threads,
                       niter=args.niter, init=args.init)
    jpath, cpath = report.write(args.out)
    print(json.dumps({"report_json": str(jpath), "report_csv": str(cpath), "speedups": report.speedups()}))
    return 0


def _seed_list(text: str, parser) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        parser.error(f"--seeds: expected a count or comma-separated integers, got {text!r}")
    if not vals or min(vals) < 0:
        parser.error("--seeds: expected non-negative integers")
    return list(range(vals[0])) if len(vals) == 1 else vals


def cmd_sweep(args, parser) -> int:
    spec = _scenario(args, parser)
    seeds = _seed_list(args.seeds, parser)
    inits = [x.strip() for x in args.inits.split(",") if x.strip()]
    for i in inits:
        if i not in [m.value for m in Init]:
            parser.error(f"--inits: unknown init {i!r}")
    rows = sweep_quality(spec, _scenario_utility(args, spec), ks=args.ks, seeds=seeds, inits=inits,
                         niter=args.niter, threads=args.threads)
    summary = summarize_quality(rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "quality.csv", QUALITY_FIELDS, rows)
    write_csv(out / "quality_summary.csv", list(summary[0].keys()), summary)
    print(json.dumps({"scenario": spec.name, "summary": summary}))
    return 0


def cmd_gen(args, parser) -> int:
    spec = _scenario(args, parser)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    inst, member = gen_multisystem(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_embeddings(out / "hyps.emb", inst.hypotheses)
    write_embeddings(out / "src.emb", np.asarray(inst.source)[None, :])
    (out / "membership.json").write_text(json.dumps([int(m) for m in member]) + "\n")
    print(json.dumps({"hyps": str(out / "hyps.emb"), "src": str(out / "src.emb"),
                      "rows": inst.n_hyps, "dims": inst.dims, "scenario": spec.name}))
    return 0


COMMANDS = {"decode": cmd_decode, "bench": cmd_bench, "sweep-quality": cmd_sweep, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, parser)
    except CbmbrError as exc:
        _emit_error(exc.code, str(exc))
        return EXIT_DATA
    except FileNotFoundError as exc:
        _emit_error("FileNotFound", str(exc))
        return EXIT_DATA
    except ValueError as exc:
        _emit_error("ValueError", str(exc))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
