"""Detection of uniform RC long chains in a parsed netlist.

A long chain is a path ``port - v1 - ... - vn`` of equal series resistors in
which every node carries one grounded capacitor of a common value, the far
end ``vn`` is closed (touches nothing but its chain resistor and capacitor),
and only the port connects to the rest of the circuit.

Detection works on *eligible* nodes: non-core nodes whose only connections
are one grounded capacitor and one or two resistors to distinct non-ground
neighbours.  Eligible nodes form paths and cycles; every path with a closed
end is walked from that end, split wherever the resistor or capacitor value
breaks uniformity, and capped with a port.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field

from .netlist import GROUND, Kind, Netlist

DEFAULT_REL_TOL = 1e-9


@dataclass
class CircuitGraph:
    """Element-level view of a netlist used for chain detection.

    ``edges`` holds one ``(a, b, name)`` entry per two-terminal element except
    grounded capacitors, which live in ``grounded_caps``.  ``core`` lists nodes
    touched by MOSFETs, sources or uninterpreted elements.
    """

    nodes: set[str] = field(default_factory=set)
    edges: list[tuple[str, str, str]] = field(default_factory=list)
    grounded_caps: dict[str, list[str]] = field(default_factory=lambda: defaultdict(list))
    core: set[str] = field(default_factory=set)
    values: dict[str, float] = field(default_factory=dict)
    kinds: dict[str, Kind] = field(default_factory=dict)

    def incident(self) -> dict[str, list[tuple[str, str]]]:
        """node -> [(neighbour, element name)] over ``edges``."""
        adj: dict[str, list[tuple[str, str]]] = defaultdict(list)
        for a, b, name in self.edges:
            adj[a].append((b, name))
            if b != a:
                adj[b].append((a, name))
        return adj


@dataclass(frozen=True)
class Chain:
    """A detected chain; ``interior`` runs from the port's neighbour to the terminal.

    ``resistors[k]`` joins chain node k and k+1 (node 0 being the port) and
    ``capacitors[k]`` is the grounded capacitor of chain node k.  ``closed`` is
    False for a fragment split off by a value mismatch, whose far end still
    connects to the rest of the path.
    """

    port: str
    interior: tuple[str, ...]
    R: float
    C: float
    resistors: tuple[str, ...]
    capacitors: tuple[str, ...]
    closed: bool = True

    @property
    def n(self) -> int:
        return len(self.interior)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.port, *self.interior)

    @property
    def terminal(self) -> str:
        return self.interior[-1]


@dataclass(frozen=True)
class ChainStats:
    total_nodes_N: int
    chain_count: int
    max_len: int
    N_tot: int
    split_ratio: float


def build_graph(netlist: Netlist) -> CircuitGraph:
    g = CircuitGraph()
    for el in netlist.elements:
        g.kinds[el.name] = el.kind
        if el.kind in (Kind.RESISTOR, Kind.CAPACITOR):
            a, b = el.nodes
            g.values[el.name] = el.value
            g.nodes.update(x for x in (a, b) if x != GROUND)
            if el.kind is Kind.CAPACITOR and (a == GROUND) != (b == GROUND):
                g.grounded_caps[b if a == GROUND else a].append(el.name)
            else:
                g.edges.append((a, b, el.name))
        else:
            g.nodes.update(x for x in el.nodes if x != GROUND)
            g.core.update(x for x in el.nodes if x != GROUND)
    return g


def _close(x: float, y: float, rel_tol: float) -> bool:
    return math.isclose(x, y, rel_tol=rel_tol, abs_tol=0.0)


def _eligible(graph: CircuitGraph, adj) -> set[str]:
    ok = set()
    for node in graph.nodes:
        if node in graph.core or len(graph.grounded_caps.get(node, ())) != 1:
            continue
        links = adj.get(node, [])
        if not 1 <= len(links) <= 2:
            continue
        if any(graph.kinds[name] is not Kind.RESISTOR or nb in (GROUND, node) for nb, name in links):
            continue
        if len(links) == 2 and links[0][0] == links[1][0]:
            continue
        ok.add(node)
    return ok


def _components(eligible: set[str], adj):
    """Yield (ordered nodes, resistor names between them, end attachments) per path.

    Attachments are ``(neighbour, resistor)`` for an end linked to a
    non-eligible node, else None.  Cycles are dropped.
    """
    seen: set[str] = set()
    for start in sorted(eligible):
        if start in seen:
            continue
        # find a path end by walking away from start
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v, _ in adj[u]:
                if v in eligible and v not in comp:
                    comp.add(v)
                    stack.append(v)
        seen |= comp
        ends = [u for u in comp if sum(v in eligible for v, _ in adj[u]) < 2]
        if not ends:
            continue  # cycle
        first = min(ends)
        order, rs = [first], []
        prev = None
        while True:
            u = order[-1]
            step = [(v, r) for v, r in adj[u] if v in eligible and v != prev]
            if not step:
                break
            v, r = step[0]
            prev = u
            order.append(v)
            rs.append(r)
        ext_a = [(v, r) for v, r in adj[order[0]] if v not in eligible]
        if len(order) == 1:
            # a lone node: its (at most two) external links are the two ends
            ext_a, ext_b = ext_a[:1], ext_a[1:]
        else:
            ext_b = [(v, r) for v, r in adj[order[-1]] if v not in eligible]
        yield order, rs, (ext_a[0] if ext_a else None), (ext_b[0] if ext_b else None)


def _runs(graph, nodes, rs, rel_tol):
    """Split a path (walked from its terminal) into maximal uniform runs.

    Returns lists of (nodes, resistors, R, C) with len(resistors) = len(nodes)-1.
    """
    cap = {u: graph.grounded_caps[u][0] for u in nodes}
    runs = []
    cur_nodes, cur_rs, R = [nodes[0]], [], None
    C = graph.values[cap[nodes[0]]]
    for v, r in zip(nodes[1:], rs):
        rv, cv = graph.values[r], graph.values[cap[v]]
        if _close(cv, C, rel_tol) and (R is None or _close(rv, R, rel_tol)):
            R = rv if R is None else R
            cur_nodes.append(v)
            cur_rs.append(r)
            continue
        runs.append((cur_nodes, cur_rs, R, C))
        cur_nodes, cur_rs, R, C = [v], [], None, cv
    runs.append((cur_nodes, cur_rs, R, C))
    return runs


def detect_chains(graph: CircuitGraph, rel_tol: float = DEFAULT_REL_TOL) -> list[Chain]:
    """All maximal uniform RC chains, node-disjoint, sorted by port name."""
    if not 0 < rel_tol <= 1e-3:
        raise ValueError("rel_tol must lie in (0, 1e-3]")
    adj = graph.incident()
    eligible = _eligible(graph, adj)

    # candidate chains: (runs walked from terminal, external attachment at the port end)
    candidates = []
    for order, rs, att_a, att_b in _components(eligible, adj):
        if att_a is not None and att_b is not None:
            continue  # both ends lead into the circuit: not a long chain
        if att_a is None and att_b is None:
            # isolated path: the lexicographically smaller end is the port
            if order[0] < order[-1]:
                order, rs = order[::-1], rs[::-1]
            candidates.append((_runs(graph, order, rs, rel_tol), None))
            continue
        if att_b is None:
            order, rs, att = order[::-1], rs[::-1], att_a
        else:
            att = att_b
        candidates.append((_runs(graph, order, rs, rel_tol), att))

    # ports outside the eligible set may be claimed by several chains
    claims: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for ci, (runs, att) in enumerate(candidates):
        if att is None:
            continue
        x, r = att
        nodes, rs_, R, C = runs[-1]
        caps = graph.grounded_caps.get(x, [])
        if len(caps) != 1 or not _close(graph.values[caps[0]], C, rel_tol):
            continue
        if graph.kinds[r] is not Kind.RESISTOR or (R is not None and not _close(graph.values[r], R, rel_tol)):
            continue
        claims[x].append((ci, len(nodes)))
    winner = {}
    for x, lst in claims.items():
        best = max(lst, key=lambda t: (t[1], -t[0]))
        winner[best[0]] = x

    chains = []
    for ci, (runs, att) in enumerate(candidates):
        for k, (nodes, rs_, R, C) in enumerate(runs):
            path, rpath = nodes[::-1], rs_[::-1]  # port end first
            last = k == len(runs) - 1
            if last and ci in winner:
                x, r = att
                path = [x, *path]
                rpath = [r, *rpath]
                R = graph.values[r] if R is None else R
            if len(path) < 2:
                continue
            chains.append(Chain(
                port=path[0],
                interior=tuple(path[1:]),
                R=R,
                C=C,
                resistors=tuple(rpath),
                capacitors=tuple(graph.grounded_caps[u][0] for u in path),
                closed=k == 0,
            ))
    chains.sort(key=lambda c: (c.port, c.interior))
    return chains


def chain_stats(netlist: Netlist, chains: list[Chain]) -> ChainStats:
    """Split statistics; N counts the distinct non-ground nodes the netlist declares."""
    N = len(netlist.node_names())
    n_tot = sum(c.n for c in chains)
    return ChainStats(
        total_nodes_N=N,
        chain_count=len(chains),
        max_len=max((c.n for c in chains), default=0),
        N_tot=n_tot,
        split_ratio=n_tot / N if N else 0.0,
    )


def time_constant(chain: Chain) -> float:
    """Regime time constant tau_c = R*C."""
    return chain.R * chain.C


def ticer_time_constant(chain: Chain) -> float:
    """Interior-node time constant R*C/2 (two resistors, one capacitor), for reference."""
    return chain.R * chain.C / 2.0


def chains_csv(chains: list[Chain], regimes: list[str] | None = None) -> str:
    """Chain report with columns port, n, R, C, tau_c, regime."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["port", "n", "R", "C", "tau_c", "regime"])
    for i, c in enumerate(chains):
        regime = regimes[i] if regimes is not None else ""
        w.writerow([c.port, c.n, f"{c.R:.17g}", f"{c.C:.17g}", f"{time_constant(c):.17g}", regime])
    return buf.getvalue()
