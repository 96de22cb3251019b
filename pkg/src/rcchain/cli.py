"""Command-line entry point: detect, reduce, simulate, sweep, compare, tabulate-fg.

Exit status is 0 on success, 1 on any error and 2 when ``sweep --assert``
finds a point above the error threshold.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import harness
from .chain_detect import build_graph, chain_stats, chains_csv, detect_chains, time_constant
from .models import ChainParams
from .netlist import parse_value, parse_waveform, read, write
from .reducer import ReducerConfig, classify, parse_time, reduce_netlist, report_csv
from .spectral import SpectralParams, fn_gn
from .transim import SimConfig, simulate_full, simulate_reduced

EXIT_OK, EXIT_ERROR, EXIT_ASSERT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for --assert
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _value(text: str) -> float:
    try:
        return parse_value(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_detect(args) -> int:
    nl = read(args.netlist)
    chains = [c for c in detect_chains(build_graph(nl), args.rel_tol) if c.n >= args.min_chain_len]
    stats = chain_stats(nl, chains)
    regimes = None
    if args.step is not None and args.duration is not None:
        cfg = ReducerConfig(args.step, args.duration, alpha=args.alpha)
        regimes = [str(classify(time_constant(c), cfg)) for c in chains]
    header = (
        "# N counts distinct non-ground nodes declared by R/C/V/M elements; "
        "simulator-internal auxiliary nodes are not included\n"
        f"# N={stats.total_nodes_N} chains={stats.chain_count} max_len={stats.max_len} "
        f"N_tot={stats.N_tot} split_ratio={stats.split_ratio:.6f}\n"
    )
    _emit(header + chains_csv(chains, regimes), args.output)
    return EXIT_OK


def cmd_reduce(args) -> int:
    nl = read(args.netlist)
    cfg = ReducerConfig(
        step_s=args.step, sim_duration_T=args.duration, alpha=args.alpha,
        halve_threshold=args.halve_threshold, enable_recurrence=args.enable_recurrence,
        min_chain_len=args.min_chain_len, halve_resistance=args.halve_resistance,
    )
    res = reduce_netlist(nl, cfg)
    write(res.netlist, args.output)
    report = args.report or str(args.output) + ".report.csv"
    _emit(report_csv(res.rows), report)
    removed = sum(r.nodes_removed for r in res.rows)
    print(f"{len(res.rows)} chains, {removed} nodes removed -> {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    chain = ChainParams(args.n, args.R, args.C)
    source = parse_waveform(args.wave)
    sim = SimConfig(args.step, args.duration)
    if args.model == "full":
        trace = simulate_full(chain, source, sim)
    else:
        model, _ = harness.select_model(args.n, args.R, args.C, args.step, args.duration, args.model)
        trace = simulate_reduced(model, source, sim)
    _emit(trace.to_csv(), args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    waves = ["sin", "pulse", "exp"] if args.wave == "all" else [args.wave]
    tables = []
    violations = 0
    for wave in waves:
        cfg = harness.ExperimentConfig(args.st, args.R, args.C, wave, tuple(args.n),
                                       strategy=args.strategy, alpha=args.alpha,
                                       halve_threshold=args.halve_threshold)
        table = harness.run_sweep(cfg, jobs=args.jobs)
        tables.append(table)
        for row in table.rows:
            print(f"{wave},{row.n},{row.E_abs:.17g},{row.E_rel:.17g},{row.model},{row.regime}")
            if args.assert_ and row.E_rel > args.max_rel:
                violations += 1
                print(f"# violation: {wave} n={row.n} E_rel={row.E_rel:.3e} > {args.max_rel:g}",
                      file=sys.stderr)
    if args.plot_dir:
        harness.emit_plot_data(tables, args.plot_dir)
    return EXIT_ASSERT if violations else EXIT_OK


def cmd_compare(args) -> int:
    traces = tuple(args.traces) if args.traces else None
    rep = harness.compare_netlists(args.ann, args.simp, traces, args.nodes)
    print("E_abs,E_rel,points")
    print(f"{rep.E_abs:.17g},{rep.E_rel:.17g},{rep.point_count}")
    return EXIT_OK


def cmd_tabulate_fg(args) -> int:
    rows = []
    for n in args.n:
        p = SpectralParams(n, args.R, args.C, args.M, args.step) if args.M is not None \
            else SpectralParams.with_default_m(n, args.R, args.C, args.step)
        fg = fn_gn(p)
        rows.append([n, f"{fg.F:.17g}", f"{fg.F_err_abs:.17g}", f"{fg.G:.17g}", f"{fg.G_err_abs:.17g}"])
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["n", "F", "F_err_abs", "G", "G_err_abs"])
    writer.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    jobs = argparse.ArgumentParser(add_help=False)
    jobs.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                      help="parallel worker processes for sweeps")

    p = _Parser(prog="rcchain", description=__doc__.splitlines()[0], parents=[jobs])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("detect", help="list RC long chains in a netlist", parents=[jobs])
    d.add_argument("netlist")
    d.add_argument("-o", "--output", default="-")
    d.add_argument("--rel-tol", type=float, default=1e-9)
    d.add_argument("--min-chain-len", type=int, default=1)
    d.add_argument("--step", type=_value, help="classify regimes for this step")
    d.add_argument("--duration", type=_value)
    d.add_argument("--alpha", type=float, default=10.0)
    d.set_defaults(func=cmd_detect)

    r = sub.add_parser("reduce", help="rewrite chains with reduced models", parents=[jobs])
    r.add_argument("netlist")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--step", type=parse_time, default=1e-12)
    r.add_argument("--duration", type=parse_time, default=1e-9)
    r.add_argument("--alpha", type=float, default=10.0)
    r.add_argument("--enable-recurrence", action="store_true")
    r.add_argument("--min-chain-len", type=int, default=3)
    r.add_argument("--halve-threshold", type=int, default=64)
    r.add_argument("--halve-resistance", choices=("moment", "keep"), default="moment")
    r.add_argument("--report", help="reduction report CSV (default: <output>.report.csv)")
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("simulate", help="transient run of one chain", parents=[jobs])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--R", type=_value, default=1.0)
    s.add_argument("--C", type=_value, default=1e-15)
    s.add_argument("--wave", default="SIN(0 1 1G 0 0 90)")
    s.add_argument("--step", type=parse_time, default=1e-12)
    s.add_argument("--duration", type=parse_time, default=1e-9)
    s.add_argument("--model", choices=("full",) + harness.STRATEGIES, default="full")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="function-driven error sweep", parents=[jobs])
    w.add_argument("--wave", choices=("sin", "pulse", "exp", "all"), default="all")
    w.add_argument("--st", choices=sorted(harness.STEP_PAIRS), default="1ps/1ns")
    w.add_argument("--R", type=_value, default=1.0)
    w.add_argument("--C", type=_value, default=1e-15)
    w.add_argument("--n", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64, 128],
                   help="comma list, ranges as a..b")
    w.add_argument("--strategy", choices=harness.STRATEGIES, default="auto")
    w.add_argument("--alpha", type=float, default=10.0)
    w.add_argument("--halve-threshold", type=int, default=64)
    w.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 2 if any E_rel exceeds --max-rel")
    w.add_argument("--max-rel", type=float, default=1e-2)
    w.add_argument("--plot-dir", help="write err_<wave>_<C>_<sT>.csv files here")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="weighted error between original and reduced netlists",
                       parents=[jobs])
    c.add_argument("ann")
    c.add_argument("simp")
    c.add_argument("--traces", nargs=2, metavar=("REF_CSV", "OUR_CSV"))
    c.add_argument("--nodes", nargs="+", help="trace columns to compare (default: all shared)")
    c.set_defaults(func=cmd_compare)

    f = sub.add_parser("tabulate-fg", help="F_n(s), G_n(s) table", parents=[jobs])
    f.add_argument("--n", type=_int_list, default=list(range(1, 11)))
    f.add_argument("--R", type=_value, default=1.0)
    f.add_argument("--C", type=_value, default=1.0)
    f.add_argument("--step", type=parse_time, default=1e-12)
    f.add_argument("--M", type=_value, default=None, help="damping rate (default 1e-8/s)")
    f.set_defaults(func=cmd_tabulate_fg)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "jobs"):
        args.jobs = 1
    try:
        return args.func(args)
    except (OSError, ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"rcchain {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
