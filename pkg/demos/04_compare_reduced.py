"""Check a reduced deck against the original.

Both decks are simulated by this package alone: each detected chain port is
driven by the deck's source and the port currents are compared with the
weighted error metric.  Traces from an external simulator can be compared
the same way with compare_traces.
"""

import tempfile
from pathlib import Path

import numpy as np

from rcchain import ReducerConfig, compare_netlists, parse, weighted_errors
from rcchain.harness import compare_traces
from rcchain.reducer import reduce_netlist
from rcchain.synth import planted_netlist

for lengths, C in (([5, 12, 40], "1f"), ([90], "1f"), ([6, 20], "100n")):
    ann = parse(planted_netlist(lengths, C=C))
    simp = reduce_netlist(ann, ReducerConfig(1e-12, 1e-9)).netlist
    rep = compare_netlists(ann, simp)
    print(f"chains {lengths} C={C:5s}  E_abs={rep.E_abs:.3e}  E_rel={rep.E_rel:.3e}  "
          f"({rep.point_count} points)")

# the metric weights each point by |ref| + |ours|
print(weighted_errors([1e-3, 1e-7], [1.01e-3, 1e-10]))

# external traces: CSV with a time column, nearest-time alignment
with tempfile.TemporaryDirectory() as tmp:
    t = np.arange(100) * 1e-12
    ref, ours = Path(tmp, "ref.csv"), Path(tmp, "ours.csv")
    ref.write_text("t,v(out)\n" + "".join(f"{x:.17g},{np.sin(1e10 * x):.17g}\n" for x in t))
    ours.write_text("t,v(out)\n" + "".join(f"{x:.17g},{1.001 * np.sin(1e10 * x):.17g}\n" for x in t))
    print(compare_traces(ref, ours))
