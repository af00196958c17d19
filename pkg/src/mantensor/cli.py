"""Command-line interface: ``mantensor <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
import warnings

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import MantensorError, NumericalError, ValidationError
from .experiments import (
    METHODS,
    SweepReport,
    SweepRow,
    _as_rank,
    approximate,
    barycentre,
    benchmark,
    evaluate_factors,
    gen_spd_1d,
    gen_spd_2d,
    gen_sphere_1d,
    nearest_data_barycentre,
    run_rank_sweep,
)
from .io import format_rank, ingest_spd_image, read_mvt, report_to_csv, write_mvt, write_report_csv
from .manifold import ManifoldPoint
from .mvtensor import MvTensor
from .tucker import thosvd

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3
THREADS_ENV = "MANTENSOR_THREADS"


def parse_rank_arg(text, T: MvTensor, p: ManifoldPoint):
    """"3" or "3,2" or "full" (all detected tangent directions per mode)."""
    if text == "full":
        return tuple(u.shape[1] for u in thosvd(p, T).factors)
    try:
        r = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"bad rank {text!r}") from None
    if len(r) not in (1, T.order):
        raise ValidationError(f"rank needs 1 or {T.order} values, got {len(r)}")
    return _as_rank(r, T.order)


def parse_rank_list(text):
    """"a..b[:step]" or a comma list of integers."""
    try:
        if ".." in text:
            lo, rest = text.split("..", 1)
            hi, _, step = rest.partition(":")
            step = int(step) if step else 1
            if step < 1:
                raise ValueError
            return list(range(int(lo), int(hi) + 1, step))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError(f"bad rank list {text!r}; use a..b[:step] or a,b,c") from None


def resolve_base(T: MvTensor, spec) -> ManifoldPoint:
    if spec == "frechet":
        return barycentre(T)
    if spec == "nearest":
        return nearest_data_barycentre(T)
    B = read_mvt(spec)
    if B.size != 1 or B.descriptor != T.descriptor:
        raise ValidationError(f"base-point file {spec} must hold a single point of {T.descriptor}")
    return ManifoldPoint(B.descriptor, B.coords.reshape(-1))


def _mc_options(args):
    tau = args.tau
    if tau not in (None, "auto"):
        try:
            tau = float(tau)
        except ValueError:
            raise ValidationError(f"bad step size {tau!r}") from None
    return {"tau": tau, "max_iter": args.max_iter, "grad_tol_rel": args.grad_tol}


def cmd_generate(args):
    if args.kind == "sphere1d":
        T = gen_sphere_1d(args.n, args.noise_var, args.seed)
    elif args.kind == "spd1d":
        T = gen_spd_1d(args.n, args.tau_var, args.noise_var, args.seed)
    else:
        T = gen_spd_2d((args.n, args.n), args.tau_var, args.noise_var, args.seed)
    write_mvt(args.out, T)
    print(f"wrote {args.out}: {T.descriptor} tensor of shape {T.shape}")


def cmd_barycentre(args):
    T = read_mvt(args.file)
    p = nearest_data_barycentre(T) if args.nearest_data else barycentre(T)
    print(" ".join("%.17g" % x for x in p.coords))
    if args.out:
        write_mvt(args.out, MvTensor(p.descriptor, p.coords[None, :]))


def cmd_approximate(args):
    T = read_mvt(args.file)
    p = resolve_base(T, args.base)
    r = parse_rank_arg(args.rank, T, p)
    t0 = time.perf_counter()
    f, iters = approximate(args.method, p, T, r, **_mc_options(args))
    wall = time.perf_counter() - t0
    row = evaluate_factors(args.method, T, p, f, wall, iters)
    if args.out_core:
        arrays = {
            "core": f.core.coords,
            "core_coefficients": f.coefficients(),
            "base": p.coords,
            "kind": np.array(p.descriptor.kind),
            "intrinsic_dim": np.array(p.descriptor.intrinsic_dim),
            "embedding_dim": np.array(p.descriptor.embedding_dim),
        }
        for k, u in enumerate(f.factors):
            arrays[f"factor_{k}"] = u
        np.savez(args.out_core, **arrays)
    _emit(SweepReport([row], {"base": args.base}), args.out_report, args.with_timing)


def _emit(report, path, with_timing):
    if path:
        write_report_csv(path, report, with_timing)
    else:
        sys.stdout.write(report_to_csv(report, with_timing))


def cmd_sweep(args):
    T = read_mvt(args.file)
    p = resolve_base(T, args.base)
    ranks = parse_rank_list(args.ranks)
    report = run_rank_sweep(args.method, T, p, ranks, _mc_options(args), {"base": args.base})
    _emit(report, args.out, args.with_timing)
    failed = [r for r in report.rows if r.error]
    for r in failed:
        print(f"rank {format_rank(r.rank)} failed: {r.error}", file=sys.stderr)


def cmd_bench(args):
    T = read_mvt(args.file)
    p = resolve_base(T, args.base)
    opts = _mc_options(args)
    sweep = run_rank_sweep(args.method, T, p, parse_rank_list(args.ranks), opts, {"base": args.base})
    rows = []
    for row in sweep.rows:
        if row.error:
            rows.append(row)
            continue
        stats = benchmark(args.method, T, p, row.rank, repeats=args.repeats, mc_options=opts)
        rows.append(SweepRow(row.method, row.rank, row.eps_rel, row.delta_rel, row.lower_bound, stats.median, row.iterations))
    _emit(SweepReport(rows, sweep.metadata), args.out, True)


def cmd_ingest(args):
    try:
        dims = tuple(int(x) for x in args.dims.split(","))
    except ValueError:
        raise ValidationError(f"bad dims {args.dims!r}") from None
    T = ingest_spd_image(args.raw, dims, args.crop, args.clamp_rel)
    write_mvt(args.out, T)
    print(f"wrote {args.out}: {T.descriptor} tensor of shape {T.shape}")


def build_parser():
    parser = argparse.ArgumentParser(prog="mantensor", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None, help=f"BLAS thread cap (default ${THREADS_ENV})")
    # also accepted after the subcommand without clobbering the top-level value
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic data set")
    g.add_argument("kind", choices=["sphere1d", "spd1d", "spd2d"])
    g.add_argument("--n", type=int, default=100, help="length (spd2d: side of the square)")
    g.add_argument("--noise-var", type=float, default=0.05)
    g.add_argument("--tau-var", type=float, default=2.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("barycentre", parents=[common], help="Frechet mean of a tensor file")
    b.add_argument("file")
    b.add_argument("--nearest-data", action="store_true")
    b.add_argument("--out")
    b.set_defaults(func=cmd_barycentre)

    def method_args(sp):
        sp.add_argument("file")
        sp.add_argument("--method", choices=METHODS, required=True)
        sp.add_argument("--base", default="frechet", help="frechet, nearest or an MVT file with one point")
        sp.add_argument("--tau", default="auto", help="MC step size or 'auto'")
        sp.add_argument("--max-iter", type=int, default=1000)
        sp.add_argument("--grad-tol", type=float, default=1e-2)

    a = sub.add_parser("approximate", parents=[common], help="one low-rank approximation")
    method_args(a)
    a.add_argument("--rank", required=True, help="r1[,r2,...] or full")
    a.add_argument("--out-core")
    a.add_argument("--out-report")
    a.add_argument("--with-timing", action="store_true")
    a.set_defaults(func=cmd_approximate)

    s = sub.add_parser("sweep", parents=[common], help="rank sweep to CSV")
    method_args(s)
    s.add_argument("--ranks", required=True, help="a..b[:step] or a,b,c")
    s.add_argument("--out")
    s.add_argument("--with-timing", action="store_true", help="fill time_s (makes output run-dependent)")
    s.set_defaults(func=cmd_sweep)

    k = sub.add_parser("bench", parents=[common], help="median timings per rank")
    method_args(k)
    k.add_argument("--ranks", required=True)
    k.add_argument("--repeats", type=int, default=10)
    k.add_argument("--out")
    k.set_defaults(func=cmd_bench)

    i = sub.add_parser("ingest-spd", parents=[common], help="raw 3x3 matrix field to MVT1")
    i.add_argument("raw")
    i.add_argument("--dims", required=True, help="X,Y,Z")
    i.add_argument("--crop", help="x0:x1,y0:y1,z (0-based, half-open)")
    i.add_argument("--clamp-rel", type=float, default=1e-6)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_ingest)
    return parser


def _threads(args):
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get(THREADS_ENV)
        if not env:
            return None
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if n < 1:
        raise ValidationError("thread count must be at least 1")
    return n


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        n = _threads(args)
        with threadpool_limits(limits=n), warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MantensorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
