import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcchain.chain_detect import build_graph, detect_chains
from rcchain.harness import (STANDARD_WAVEFORMS, STEP_PAIRS, ExperimentConfig, MetricError, SweepRow,
                             SweepTable, align_nearest, compare_netlists, compare_traces,
                             emit_plot_data, plot_file_name, read_plot_data, read_wave_table,
                             run_sweep, select_model, table_csv, weighted_errors)
from rcchain.models import HalvedChain, Lumped, PortCurrent, Recurrence, SmallTauCurrent
from rcchain.netlist import emit, parse
from rcchain.reducer import ReducerConfig, reduce_netlist
from rcchain.synth import driven_chain_netlist, planted_netlist
from rcchain.transim import SimConfig, TransientTrace


# -- metric ---------------------------------------------------------------------------

def test_golden_value():
    rep = weighted_errors([1e-3, 1e-7], [1.01e-3, 1e-10])
    assert rep.E_rel == pytest.approx(5.02e-3, abs=1e-5)
    assert rep.E_abs == pytest.approx((1e-5 + (1e-7 - 1e-10)) / 2)
    assert rep.point_count == 2


def test_identical_traces():
    rep = weighted_errors([1.0, -2.0, 3.0], [1.0, -2.0, 3.0])
    assert (rep.E_abs, rep.E_rel) == (0.0, 0.0)


def test_disjoint_support_is_maximal():
    assert weighted_errors([2.0], [0.0]).E_rel == 1.0


def test_both_zero_is_zero():
    assert weighted_errors(np.zeros(5), np.zeros(5)).E_rel == 0.0


def test_length_and_grid_mismatch():
    with pytest.raises(MetricError):
        weighted_errors([1.0, 2.0], [1.0])
    with pytest.raises(MetricError):
        weighted_errors([], [])
    a = TransientTrace(np.array([0.0, 1.0]), np.zeros(2), np.ones(2))
    b = TransientTrace(np.array([0.0, 2.0]), np.zeros(2), np.ones(2))
    with pytest.raises(MetricError, match="grid"):
        weighted_errors(a, b)


def test_report_helpers():
    rep = weighted_errors([1.0, -1.0], [0.5, 1.0])
    assert np.array_equal(rep.deltas(), [0.5, 2.0])
    assert np.array_equal(rep.weights(), [1.5, 2.0])


_traces = st.integers(1, 60).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(-1e3, 1e3, allow_subnormal=False)),
    arrays(float, n, elements=st.floats(-1e3, 1e3, allow_subnormal=False)),
))


@given(_traces, st.floats(1e-6, 1e6))
@settings(max_examples=1000, deadline=None)
def test_metric_properties(pair, lam):
    a, b = pair
    ab, ba = weighted_errors(a, b), weighted_errors(b, a)
    assert ab.E_abs == ba.E_abs and ab.E_rel == ba.E_rel
    assert 0.0 <= ab.E_rel <= 1.0
    scaled = weighted_errors(lam * a, lam * b)
    # scaling rounds the operands, which can move a tiny difference by a few ULPs
    ulps = 8 * np.finfo(float).eps * lam * np.mean(np.abs(a) + np.abs(b))
    assert abs(scaled.E_abs - lam * ab.E_abs) <= 1e-12 * lam * ab.E_abs + ulps
    assert scaled.E_rel == pytest.approx(ab.E_rel, rel=1e-12, abs=1e-15)


# -- sweeps ------------------------------------------------------------------------------

def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig("1ps/2ns", 1.0, 1e-15, "sin", (1,))
    with pytest.raises(ValueError):
        ExperimentConfig("1ps/1ns", 1.0, 1e-15, "sin", ())
    with pytest.raises(ValueError):
        ExperimentConfig("1ps/1ns", 1.0, 1e-15, "sin", (1,), strategy="magic")


def test_experiment_sources():
    cfg = ExperimentConfig("1ns/100ns", 1.0, 1e-7, "PULSE", (1,))
    assert cfg.sim_config == SimConfig(1e-9, 1e-7)
    assert cfg.wave_name == "pulse"
    assert cfg.source().per == pytest.approx(1e-7)
    custom = ExperimentConfig("1ps/1ns", 1.0, 1e-15, "SIN(0 2 1G 0 0 0)", (1,))
    assert custom.wave_name == "custom"
    assert custom.source().va == 2


@pytest.mark.parametrize("n, C, strategy, cls", [
    (8, 1e-15, "auto", SmallTauCurrent),
    (100, 1e-15, "auto", HalvedChain),
    (8, 1e-7, "auto", PortCurrent),
    (4, 1e-12, "auto", Recurrence),
    (8, 1e-15, "lumped", Lumped),
    (1, 1e-15, "halved", SmallTauCurrent),
])
def test_select_model(n, C, strategy, cls):
    model, regime = select_model(n, 1.0, C, 1e-12, 1e-9, strategy)
    assert isinstance(model, cls)


def test_halved_keep_r_strategy():
    model, _ = select_model(100, 2.0, 1e-15, 1e-12, 1e-9, "halved-keep-r")
    assert model == HalvedChain(50, 2.0, 101 * 1e-15 / 51)


def test_sweep_is_deterministic_and_ordered():
    cfg = ExperimentConfig("1ps/1ns", 1.0, 1e-15, "pulse", (8, 1, 70))
    a, b = run_sweep(cfg), run_sweep(cfg, jobs=2)
    assert table_csv(a) == table_csv(b)
    assert [r.n for r in a.rows] == [8, 1, 70]
    assert list(a.column("model")) == ["small-tau", "small-tau", "halved"]
    assert np.all(a.column("E_rel") <= 1e-2)


def _table(wave, C, s_T, rows=((1, 1e-3, 2e-3),)):
    cfg = ExperimentConfig(s_T, 1.0, C, wave, tuple(r[0] for r in rows))
    return SweepTable(cfg, [SweepRow(n, a, r, "small-tau", "SmallTau") for n, a, r in rows])


def test_emit_plot_data_twelve_files(tmp_path):
    tables = [_table(w, c, st) for w, c, st in itertools.product(["sin", "pulse", "exp"],
                                                                 [1e-15, 1e-7], sorted(STEP_PAIRS))]
    written = emit_plot_data(tables, tmp_path / "plots")
    assert len(written) == 12
    assert len({p.name for p in written}) == 12
    assert (tmp_path / "plots" / "err_sin_1e-15_1ps-1ns.csv").exists()
    assert (tmp_path / "plots" / "err_exp_1e-07_1ns-100ns.csv").exists()


def test_emit_plot_data_round_trip(tmp_path):
    rows = ((1, 0.1 + 0.2, 1 / 3), (2, 1e-300, np.nextafter(1.0, 0)))
    (path,) = emit_plot_data(_table("sin", 1e-15, "1ps/1ns", rows), tmp_path)
    assert read_plot_data(path) == [(n, a, r) for n, a, r in rows]
    assert path.read_text().splitlines()[0] == "n,E_abs,E_rel"


def test_emit_plot_data_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_plot_data([], tmp_path)
    cfg = ExperimentConfig("1ps/1ns", 1.0, 1e-15, "sin", (1,))
    with pytest.raises(ValueError):
        emit_plot_data(SweepTable(cfg, []), tmp_path)


def test_plot_file_name():
    assert plot_file_name(ExperimentConfig("1ns/100ns", 1.0, 1e-7, "exp", (1,))) == \
        "err_exp_1e-07_1ns-100ns.csv"


def test_standard_waveforms_cover_both_grids():
    assert set(STANDARD_WAVEFORMS) == set(STEP_PAIRS)
    for table in STANDARD_WAVEFORMS.values():
        assert set(table) == {"sin", "pulse", "exp"}


# -- netlist comparison ------------------------------------------------------------------

def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_compare_identical_files(tmp_path):
    p = _write(tmp_path, "a.cir", planted_netlist([5, 12]))
    rep = compare_netlists(p, p)
    assert rep.E_rel == 0.0 and rep.E_abs == 0.0


def test_compare_without_chains_is_zero(tmp_path):
    p = _write(tmp_path, "a.cir", "t\nM1 a b 0 0 nch\nC1 a 0 1f\n.tran 1p 1n\n.end\n")
    assert compare_netlists(p, p).E_rel == 0.0


@pytest.mark.parametrize("lengths, C", [([5, 12], "1f"), ([80], "1f"), ([6], "100n")])
def test_compare_reduced_netlist(tmp_path, lengths, C):
    ann = planted_netlist(lengths, C=C)
    simp = emit(reduce_netlist(parse(ann), ReducerConfig(1e-12, 1e-9)).netlist)
    rep = compare_netlists(parse(ann), parse(simp))
    assert 0.0 < rep.E_rel <= 1e-2


def test_compare_missing_port_is_an_error():
    ann = parse(planted_netlist([5]))
    simp = parse("t\nM0 q in 0 0 nch\n.tran 1p 1n\n.end\n")
    with pytest.raises(MetricError, match="counterpart"):
        compare_netlists(ann, simp)


def test_external_csv_traces(tmp_path):
    t = np.arange(5) * 1e-12
    ref = _write(tmp_path, "ref.csv", "t,v(a),v(b)\n" + "".join(
        f"{x:.17g},{1.0},{2.0}\n" for x in t))
    # slightly jittered grid, one extra column
    our = _write(tmp_path, "our.csv", "time,v(b),v(a),v(c)\n" + "".join(
        f"{x + 1e-15:.17g},{2.0},{1.1},{9}\n" for x in t))
    rep = compare_netlists(None, None, (ref, our))
    assert rep.point_count == 10
    # only v(a) differs (0.1 at 5 points); weights are 5*(1 + 1.1) + 5*(2 + 2)
    assert rep.E_rel == pytest.approx(0.5 / 30.5, rel=1e-12)
    only_b = compare_traces(ref, our, ["v(b)"])
    assert only_b.E_rel == 0.0


def test_external_wrdata_pairs(tmp_path):
    rows = "".join(f"{k}e-12 {k * 0.1} {k}e-12 {k * 0.2}\n" for k in range(4))
    ref = _write(tmp_path, "ref.txt", rows)
    tables = read_wave_table(ref)
    assert list(tables) == ["col0", "col1"]
    assert compare_traces(ref, ref).E_rel == 0.0


def test_external_traces_without_common_columns(tmp_path):
    a = _write(tmp_path, "a.csv", "t,x\n0,1\n")
    b = _write(tmp_path, "b.csv", "t,y\n0,1\n")
    with pytest.raises(MetricError, match="no common"):
        compare_traces(a, b)


def test_alignment_rejects_distant_grids():
    t = np.arange(10) * 1e-12
    assert np.array_equal(align_nearest(t, t + 5e-14, np.arange(10.0), 1e-12), np.arange(10.0))
    with pytest.raises(MetricError, match="0.1 step"):
        align_nearest(t, t + 3e-13, np.arange(10.0), 1e-12)


def test_driven_chain_netlist_detects_source_port():
    nl = parse(driven_chain_netlist(6, outputs=["n6"]))
    (c,) = detect_chains(build_graph(nl))
    assert c.port == "vin" and c.n == 6
