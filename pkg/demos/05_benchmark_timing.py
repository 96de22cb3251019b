"""Structural statistics and optional wall-clock timing on benchmark decks.

Usage: python 05_benchmark_timing.py DECK_ann.net [...]

For each annotated deck this prints the chain statistics and writes the
reduced deck next to it as DECK_simp.net.  If an ngspice binary is on PATH
both decks are run in batch mode (3 warmup runs, then 10 timed runs) and
the geometric mean of the timings is reported.  Nothing here is needed by
the test suite.
"""

import shutil
import subprocess
import sys
import time
from pathlib import Path

from scipy.stats import gmean

from rcchain import ReducerConfig, build_graph, detect_chains, emit
from rcchain.chain_detect import chain_stats
from rcchain.harness import _tran_params
from rcchain.netlist import read
from rcchain.reducer import reduce_netlist

WARMUP, NRUN = 3, 10


def timed(binary, deck):
    for _ in range(WARMUP):
        subprocess.run([binary, "-b", str(deck)], capture_output=True, check=True)
    runs = []
    for _ in range(NRUN):
        t0 = time.perf_counter()
        subprocess.run([binary, "-b", str(deck)], capture_output=True, check=True)
        runs.append(time.perf_counter() - t0)
    return gmean(runs)


if len(sys.argv) < 2:
    sys.exit(__doc__)

ngspice = shutil.which("ngspice")
if ngspice is None:
    print("ngspice not found; reporting structure only")

for path in map(Path, sys.argv[1:]):
    ann = read(path)
    stats = chain_stats(ann, detect_chains(build_graph(ann)))
    print(f"{path.name}: N={stats.total_nodes_N} chains={stats.chain_count} "
          f"max_len={stats.max_len} N_tot={stats.N_tot} split={stats.split_ratio:.2%}")

    step, duration = _tran_params(ann)
    simp_path = path.with_name(path.name.replace("_ann", "_simp"))
    if simp_path == path:
        simp_path = path.with_suffix(".simp.net")
    simp_path.write_text(emit(reduce_netlist(ann, ReducerConfig(step, duration)).netlist))

    if ngspice:
        t_ann, t_simp = timed(ngspice, path), timed(ngspice, simp_path)
        print(f"  geomean {t_ann:.3f} s -> {t_simp:.3f} s  speedup {t_ann / t_simp - 1:+.1%}")
