"""Command-line entry point: ``gammalisa {lisa,gisa,simulate,compare,lag}``.

Exit codes: 0 success, 2 input error, 3 numeric failure (a covariance or
metric matrix that is not positive definite).

Every output file gets a ``<out>.manifest.json`` sidecar recording the
command, its result-affecting parameters, input digests, seed and package
version.  Worker-thread counts are deliberately left out: they never change
results.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .agreement import AgreementTable, mcc, rand_index
from .fdr import significance_table
from .gamma import KERNEL_NAMES, KernelError, MetricNotPositiveDefinite, kernel_from_name, lisa
from .graph import GraphError, GridSpec, lag_matrix
from .io import InputError, file_digest, fmt, read_edge_list, read_matrix, read_panel, write_edge_list
from .permutation import mc_global_pvalue, mc_local_pvalues
from .pvalue import global_pvalue, local_pvalues
from .simulation import NotPositiveDefinite, SimConfig, power_curve

EXIT_INPUT = 2
EXIT_NUMERIC = 3

LISA_COLUMNS = ["region", "statistic", "centered_deviation", "sign", "p_raw", "p_mc", "p_adj", "sig_05", "sig_01"]
GISA_COLUMNS = ["statistic", "center", "centered_deviation", "upsilon_sq", "p", "p_mc"]


def _write_manifest(out: Path, command: str, params: dict, inputs: dict) -> None:
    manifest = {
        "command": command,
        "parameters": params,
        "inputs": {k: {"name": Path(v).name, "sha256": file_digest(v)} for k, v in inputs.items()},
        "version": __version__,
    }
    Path(f"{out}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load(args):
    if args.lag < 1:
        raise InputError("--lag must be >= 1")
    y = read_panel(args.panel)
    g = read_edge_list(args.graph, n=y.shape[1])
    if args.lag != 1:
        g = lag_matrix(g, args.lag)
    metric = read_matrix(args.metric_matrix) if args.metric_matrix else None
    kernel = kernel_from_name(args.stat, metric)
    if metric is not None and metric.shape[0] != y.shape[0]:
        raise InputError(f"metric matrix is {metric.shape[0]}x{metric.shape[0]} but panel has T={y.shape[0]}")
    return y, g, kernel


def _inputs(args):
    d = {"graph": args.graph, "panel": args.panel}
    if args.metric_matrix:
        d["metric_matrix"] = args.metric_matrix
    return d


def cmd_lisa(args) -> int:
    y, g, kernel = _load(args)
    lv = lisa(kernel, y, g)
    rep = local_pvalues(lv, g)
    p_mc = None
    if args.mc:
        p_mc = mc_local_pvalues(kernel, y, g, args.mc, seed=args.seed, threads=args.threads)
    table = significance_table(rep.p_raw, rep.sign, method=args.fdr, g=g)
    rows = []
    for i in range(g.n):
        rows.append([
            i,
            fmt(lv.gamma[i]),
            fmt(rep.deviation[i]),
            int(rep.sign[i]),
            fmt(rep.p_raw[i]),
            fmt(p_mc[i]) if p_mc is not None else "",
            fmt(table.p_adj[i]),
            int(table.p_adj[i] < 0.05),
            int(table.p_adj[i] < 0.01),
        ])
    Path(args.out).write_text(_csv_text(LISA_COLUMNS, rows))
    params = {"stat": args.stat, "lag": args.lag, "fdr": args.fdr, "alpha": args.alpha,
              "mc": args.mc, "seed": args.seed}
    _write_manifest(args.out, "lisa", params, _inputs(args))
    n_sig = int(np.sum(table.p_adj < args.alpha))
    print(f"{n_sig}/{g.n} regions significant at {args.alpha} ({args.fdr} FDR)")
    return 0


def cmd_gisa(args) -> int:
    y, g, kernel = _load(args)
    lv = lisa(kernel, y, g)
    rep = global_pvalue(lv, g)
    p_mc = mc_global_pvalue(kernel, y, g, args.mc, seed=args.seed, threads=args.threads) if args.mc else None
    row = [fmt(rep.statistic), fmt(rep.center), fmt(rep.deviation), fmt(rep.upsilon_sq), fmt(rep.p), fmt(p_mc)]
    Path(args.out).write_text(_csv_text(GISA_COLUMNS, [row]))
    params = {"stat": args.stat, "lag": args.lag, "mc": args.mc, "seed": args.seed}
    _write_manifest(args.out, "gisa", params, _inputs(args))
    print(f"global {args.stat}: p = {rep.p:.6g}")
    return 0


def _float_list(s):
    try:
        return tuple(float(v) for v in s.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def cmd_simulate(args) -> int:
    stats = tuple(args.stats.split(",")) if args.stats else KERNEL_NAMES
    cfg = SimConfig(
        grid=GridSpec(args.rows, args.cols),
        T=args.t,
        c_values=args.c_list,
        replicates=args.replicates,
        alpha=args.alpha,
        seed=args.seed,
        kernels=stats,
        threads=args.threads,
    )
    pc = power_curve(cfg, args.mode)
    Path(args.out).write_text(pc.to_csv())
    params = {"rows": args.rows, "cols": args.cols, "t": args.t, "c_list": list(args.c_list),
              "replicates": args.replicates, "alpha": args.alpha, "mode": args.mode,
              "seed": args.seed, "stats": list(stats)}
    _write_manifest(args.out, "simulate", params, {})
    return 0


def _read_significance(path, column):
    flags = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "region" not in reader.fieldnames or column not in reader.fieldnames:
            raise InputError(f"{path}: needs 'region' and '{column}' columns")
        for lineno, row in enumerate(reader, start=2):
            try:
                flags[int(row["region"])] = bool(int(row[column]))
            except (TypeError, ValueError):
                raise InputError(f"{path}:{lineno}: bad region or {column} value") from None
    return flags


def cmd_compare(args) -> int:
    col = args.column
    a = _read_significance(args.sig_a, col)
    b = _read_significance(args.sig_b, col)
    if set(a) != set(b):
        raise InputError("the two significance files cover different regions")
    keys = sorted(a)
    t = AgreementTable.from_labels([a[k] for k in keys], [b[k] for k in keys])
    row = [t.TP, t.FP, t.FN, t.TN, fmt(mcc(t)), fmt(rand_index(t))]
    Path(args.out).write_text(_csv_text(["TP", "FP", "FN", "TN", "mcc", "rand"], [row]))
    _write_manifest(args.out, "compare", {"column": col}, {"sig_a": args.sig_a, "sig_b": args.sig_b})
    print(f"MCC {mcc(t):.4f}  Rand {rand_index(t):.4f}")
    return 0


def cmd_lag(args) -> int:
    g = read_edge_list(args.graph, n=args.n)
    if args.k < 1:
        raise InputError("--k must be >= 1")
    write_edge_list(lag_matrix(g, args.k), args.out)
    _write_manifest(args.out, "lag", {"k": args.k, "n": g.n}, {"graph": args.graph})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gammalisa",
        description="Local and global spatial association tests with analytic permutation p-values.",
        epilog="exit codes: 0 success, 2 input error, 3 numeric failure (matrix not positive definite)",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("graph", help="edge-list CSV with header src,dst")
        p.add_argument("panel", help="panel CSV, wide (one column per region) or long (region,time,value)")
        p.add_argument("--stat", choices=KERNEL_NAMES, default="moran")
        p.add_argument("--lag", type=int, default=1, help="use the distance-k neighbour graph (k >= 1)")
        p.add_argument("--metric-matrix", help="T x T SPD matrix for the moran inner product")
        p.add_argument("--mc", type=int, default=0, metavar="B", help="also report Monte Carlo p-values from B permutations")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", required=True)

    p = sub.add_parser("lisa", help="per-region tests", epilog=ap.epilog)
    common(p)
    p.add_argument("--fdr", choices=["global", "spatial", "none"], default="spatial")
    p.add_argument("--alpha", type=float, default=0.05, help="level for the printed summary")
    p.set_defaults(func=cmd_lisa)

    p = sub.add_parser("gisa", help="network-wide test", epilog=ap.epilog)
    common(p)
    p.set_defaults(func=cmd_gisa)

    p = sub.add_parser("simulate", help="lattice power study", epilog=ap.epilog)
    p.add_argument("--rows", type=int, default=50)
    p.add_argument("--cols", type=int, default=60)
    p.add_argument("--t", type=int, default=5)
    p.add_argument("--c-list", type=_float_list, default=(-0.25, -0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2, 0.25))
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mode", choices=["lisa", "gisa"], default="lisa")
    p.add_argument("--stats", help="comma-separated subset of " + ",".join(KERNEL_NAMES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="MCC and Rand index between two lisa outputs")
    p.add_argument("sig_a")
    p.add_argument("sig_b")
    p.add_argument("--column", default="sig_05", choices=["sig_05", "sig_01"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("lag", help="write the distance-k neighbour graph")
    p.add_argument("graph")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, help="vertex count (default: max id + 1)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lag)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NotPositiveDefinite, MetricNotPositiveDefinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, GraphError, KernelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
