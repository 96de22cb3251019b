"""Error of the reduced chain models against a full transient run.

Every sweep drives a chain of length n with one of the three standard
sources and compares the port current of the reduced model with the full
backward-Euler solution.  The plot-data files land in ./sweep_plots.
"""

import sys

import numpy as np

from rcchain import ExperimentConfig, emit_plot_data, run_sweep

N = (1, 2, 4, 8, 16, 32, 64, 128)
jobs = int(sys.argv[1]) if len(sys.argv) > 1 else 1

tables = []
for C in (1e-15, 1e-7):
    for wave in ("sin", "pulse", "exp"):
        table = run_sweep(ExperimentConfig("1ps/1ns", 1.0, C, wave, N), jobs=jobs)
        tables.append(table)
        e = table.column("E_rel")
        models = sorted(set(table.column("model")))
        print(f"C={C:g} {wave:5s} E_rel in [{e.min():.2e}, {e.max():.2e}]  models: {', '.join(models)}")

# a femtofarad EXP input has larger relative error at small n but its
# absolute error stays near the SIN case
sin_abs = tables[0].column("E_abs")
exp_abs = tables[2].column("E_abs")
print("EXP/SIN E_abs by n:", np.round(exp_abs / sin_abs, 2))

written = emit_plot_data(tables, "sweep_plots")
print(f"wrote {len(written)} files, e.g. {written[0]}")
