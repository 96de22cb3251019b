import os
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcchain.chain_detect import (build_graph, chain_stats, chains_csv, detect_chains,
                                  ticer_time_constant, time_constant)
from rcchain.netlist import Kind, parse, read
from rcchain.synth import chain_lines, planted_netlist


def _detect(text, **kw):
    nl = parse(text)
    return nl, detect_chains(build_graph(nl), **kw)


def test_build_graph_simple_rc():
    g = build_graph(parse("t\nR1 a b 1\nC1 a 0 1f\nC2 b 0 1f\n"))
    assert g.nodes == {"a", "b"}
    assert g.edges == [("a", "b", "R1")]
    assert dict(g.grounded_caps) == {"a": ["C1"], "b": ["C2"]}
    assert g.core == set()


def test_build_graph_source_only():
    g = build_graph(parse("t\nV1 in 0 DC 1\n"))
    assert g.nodes == {"in"}
    assert g.edges == []
    assert detect_chains(g) == []


def test_build_graph_marks_mosfet_core():
    g = build_graph(parse("t\nM1 x g 0 0 nch\nR1 x y 1\n"))
    assert {"x", "g"} <= g.core
    assert "y" not in g.core


def test_planted_78_chain_matches_benchmark_values():
    nl, chains = _detect(planted_netlist([78]))
    assert len(chains) == 1
    (c,) = chains
    assert (c.port, c.n, c.R, c.C) == ("p0", 78, 0.953316, 0.891774e-15)
    assert c.terminal == "c0_78"
    assert c.closed
    assert time_constant(c) == pytest.approx(8.5014e-16, rel=1e-5)
    assert ticer_time_constant(c) == time_constant(c) / 2


def test_no_resistors_no_chains():
    text = "t\nM1 a b 0 0 nch\nC1 a 0 1f\nC2 b 0 1f\n"
    nl, chains = _detect(text)
    assert chains == []
    stats = chain_stats(nl, chains)
    assert (stats.chain_count, stats.N_tot, stats.max_len, stats.split_ratio) == (0, 0, 0, 0.0)


@pytest.mark.parametrize("lengths", [[], [1], [78], [139], [5, 17, 3, 78], list(range(1, 33))])
def test_planted_chains_recovered(lengths):
    nl, chains = _detect(planted_netlist(lengths))
    got = sorted((c.port, c.n) for c in chains)
    assert got == sorted((f"p{k}", n) for k, n in enumerate(lengths))
    assert all(c.closed for c in chains)
    stats = chain_stats(nl, chains)
    assert stats.N_tot == sum(lengths)
    assert stats.max_len == max(lengths, default=0)


def test_stats_split_ratio_arithmetic():
    # vdd, in, p0, ten interior nodes and 87 core-only nodes: 100 in all
    nl, chains = _detect(planted_netlist([10], extra_core=87))
    stats = chain_stats(nl, chains)
    assert stats.total_nodes_N == 100
    assert stats.N_tot == 10
    assert stats.split_ratio == pytest.approx(0.10)


@pytest.mark.parametrize("R, C, tau", [(1.0, 1e-15, 1e-15), (1.0, 1e-7, 1e-7)])
def test_time_constant_products(R, C, tau):
    (c,) = _detect("t\nM1 p g 0 0 n\n" + "\n".join(chain_lines("p", "h", 3, R, C)) + "\n")[1]
    assert time_constant(c) == pytest.approx(tau, rel=1e-15)


def test_ports_and_isolated_paths():
    # isolated path: the lexicographically smaller end is the port
    (c,) = _detect("t\n" + "\n".join(chain_lines("zz", "a", 2, 1, 1)) + "\n")[1]
    assert c.port == "a2"
    assert c.terminal == "zz"


def test_both_ends_attached_is_not_a_chain():
    text = "t\nM1 p g 0 0 n\nM2 q g 0 0 n\n" + "\n".join(chain_lines("p", "h", 3, 1, 1)) \
        + "\nRx h3 q 1\nCq q 0 1\n"
    assert _detect(text)[1] == []


def test_node_with_two_grounded_caps_breaks_chain():
    lines = chain_lines("p", "h", 4, 1, 1) + ["Cextra h2 0 1"]
    chains = _detect("t\nM1 p g 0 0 n\n" + "\n".join(lines) + "\n")[1]
    assert all("h2" not in c.nodes for c in chains)


def test_rel_tol_validated():
    g = build_graph(parse(planted_netlist([3])))
    for bad in (0.0, -1.0, 2e-3):
        with pytest.raises(ValueError):
            detect_chains(g, bad)


def test_rel_tol_absorbs_formatting_noise():
    lines = chain_lines("p", "h", 6, 1.0, 1.0, r_overrides={3: 1.0 + 1e-12})
    (c,) = _detect("t\nM1 p g 0 0 n\n" + "\n".join(lines) + "\n")[1]
    assert c.n == 6


# -- perturbation split against a brute-force oracle ----------------------------

def _oracle_partition(rvals):
    """Maximal uniform runs on a path port=0..n, chosen greedily from the terminal.

    Enumerates every contiguous resistor window, keeps the uniform ones, and
    from the terminal end repeatedly takes the longest uniform window ending
    at the current node; the mismatched resistor between windows is dropped.
    Returns node-index tuples (port end first).
    """
    n = len(rvals)
    windows = {(i, j) for i in range(n + 1) for j in range(i + 1, n + 1)
               if len(set(rvals[i:j])) == 1}
    out, end = [], n
    while end > 0:
        start = min(i for i, j in windows if j == end)
        out.append(tuple(range(start, end + 1)))
        end = start - 1
    return out


def _path_netlist(rvals):
    names = ["p"] + [f"h{k}" for k in range(1, len(rvals) + 1)]
    lines = ["t", "M1 p g 0 0 n"]
    lines += [f"R{k} {names[k]} {names[k + 1]} {r!r}" for k, r in enumerate(rvals)]
    lines += [f"C{k} {nm} 0 1f" for k, nm in enumerate(names)]
    return "\n".join(lines) + "\n", names


def test_perturbed_resistor_splits_chain():
    rvals = [1.0] * 10
    rvals[5] *= 1 + 1e-3
    text, names = _path_netlist(rvals)
    chains = _detect(text)[1]
    assert len(chains) == 2
    expected = {tuple(names[i] for i in part) for part in _oracle_partition(rvals)}
    assert {c.nodes for c in chains} == expected
    by_port = {c.port: c for c in chains}
    assert by_port["p"].n == 5 and not by_port["p"].closed
    assert by_port["h6"].n == 4 and by_port["h6"].closed


@given(st.lists(st.sampled_from([1.0, 2.0]), min_size=1, max_size=25))
@settings(max_examples=200, deadline=None)
def test_split_matches_oracle(rvals):
    text, names = _path_netlist(rvals)
    chains = _detect(text)[1]
    expected = {tuple(names[i] for i in part) for part in _oracle_partition(rvals) if len(part) > 1}
    assert {c.nodes for c in chains} == expected


# -- invariants on random planted netlists -----------------------------------------

@st.composite
def chain_netlists(draw):
    lengths = draw(st.lists(st.integers(1, 12), max_size=6))
    lines = ["random"]
    for k, n in enumerate(lengths):
        lines.append(f"M{k} p{k} in 0 0 nch")
        overrides = draw(st.dictionaries(st.integers(0, n - 1), st.sampled_from([2.0, 3.0]), max_size=2))
        lines += chain_lines(f"p{k}", f"c{k}_", n, 1.0, "1f", r_overrides=overrides)
    # a couple of plain RC branches that join two core nodes
    lines += ["Rb1 p0x in 5", "Cb1 p0x 0 1f", "Mb p0x in 0 0 nch"]
    return "\n".join(lines) + "\n"


@given(chain_netlists())
@settings(max_examples=100, deadline=None)
def test_chain_invariants(text):
    nl = parse(text)
    chains = detect_chains(build_graph(nl))
    seen = set()
    by_name = {e.name: e for e in nl.elements}
    for c in chains:
        assert c.n >= 1
        assert not (set(c.nodes) & seen), "chains must be node-disjoint"
        seen |= set(c.nodes)
        assert len(c.resistors) == c.n and len(c.capacitors) == c.n + 1
        for k, r in enumerate(c.resistors):
            el = by_name[r]
            assert el.kind is Kind.RESISTOR and el.value == pytest.approx(c.R, rel=1e-9)
            assert set(el.nodes) == {c.nodes[k], c.nodes[k + 1]}
        for node, cap in zip(c.nodes, c.capacitors):
            el = by_name[cap]
            assert el.kind is Kind.CAPACITOR and set(el.nodes) == {node, "0"}
            assert el.value == pytest.approx(c.C, rel=1e-9)
        # reconstruction: induced subgraph has n resistors and n+1 grounded caps
        inside = set(c.nodes) | {"0"}
        induced = [e for e in nl.elements if set(e.nodes) <= inside]
        assert sum(e.kind is Kind.RESISTOR for e in induced) == c.n
        assert sum(e.kind is Kind.CAPACITOR for e in induced) == c.n + 1
        # interior nodes are touched only by chain elements
        # interior nodes are touched only by chain elements; an open fragment's
        # far end also keeps the mismatched resistor it was split at
        own = set(c.resistors) | set(c.capacitors)
        for node in c.interior:
            foreign = {e.name for e in nl.elements if node in e.nodes} - own
            if c.closed or node != c.terminal:
                assert not foreign
            else:
                assert len(foreign) == 1 and by_name[foreign.pop()].kind is Kind.RESISTOR
    assert chains == detect_chains(build_graph(parse(text)))
    assert [c.port for c in chains] == sorted(c.port for c in chains)


def test_chains_csv_format():
    chains = _detect(planted_netlist([2]))[1]
    text = chains_csv(chains, ["SmallTau"])
    header, row = text.strip().splitlines()
    assert header == "port,n,R,C,tau_c,regime"
    port, n, R, C, tau, regime = row.split(",")
    assert (port, int(n), float(R), float(C), regime) == ("p0", 2, 0.953316, 0.891774e-15, "SmallTau")
    assert float(tau) == 0.953316 * 0.891774e-15


_C1355 = os.environ.get("RCCHAIN_C1355")


@pytest.mark.skipif(not _C1355 or not Path(_C1355).is_file(),
                    reason="set RCCHAIN_C1355 to an annotated c1355 netlist to run")
def test_c1355_benchmark_statistics():
    nl = read(_C1355)
    stats = chain_stats(nl, detect_chains(build_graph(nl)))
    assert stats.N_tot == 1380
    assert stats.max_len == 78
    assert stats.split_ratio == pytest.approx(0.0932, abs=5e-4)
