"""Find RC long chains in a small synthetic deck and rewrite them.

Three chains of length 2, 10 and 70 hang off a MOSFET core.  The short one
stays (below the minimum length), the 10-node chain collapses into one
lumped capacitor and the 70-node chain is halved to 35 sections.
"""

from rcchain import ReducerConfig, build_graph, detect_chains, emit, parse
from rcchain.chain_detect import chain_stats, time_constant
from rcchain.reducer import reduce_netlist, report_csv
from rcchain.synth import planted_netlist

deck = planted_netlist([2, 10, 70]).replace(".end", ".print tran v(c2_70)\n.end")
netlist = parse(deck)
print(f"{len(netlist.node_names())} nodes, {len(netlist.elements)} elements")

chains = detect_chains(build_graph(netlist))
for c in chains:
    print(f"  port {c.port:4s} n={c.n:3d} R={c.R:g} C={c.C:g} tau_c={time_constant(c):.3e} s")

stats = chain_stats(netlist, chains)
print(f"max chain length {stats.max_len}, {stats.N_tot} nodes in chains, "
      f"split ratio {stats.split_ratio:.1%}")

# small tau_c at s = 1 ps: the criterion picks lumped or halved models
result = reduce_netlist(netlist, ReducerConfig(step_s=1e-12, sim_duration_T=1e-9))
print()
print(report_csv(result.rows))

reduced = emit(result.netlist)
print(f"reduced deck: {len(result.netlist.node_names())} nodes")
# the output node inside the halved chain now points at a surviving node
print([ln for ln in reduced.splitlines() if ln.startswith(".print")])
