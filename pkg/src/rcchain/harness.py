"""Error metrics, function-driven sweeps and netlist comparison.

The weighted errors between a reference current trace and a model trace are

    E_abs = mean_k |I_ref[k] - I_our[k]|
    E_rel = sum_k |I_ref[k] - I_our[k]| / sum_k (|I_ref[k]| + |I_our[k]|)

E_rel stays meaningful when the current crosses zero and is defined as 0 when
both traces vanish identically.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chain_detect import build_graph, detect_chains
from .models import ChainParams, HalvedChain, Lumped, PortCurrent, SmallTauCurrent
from .netlist import GROUND, Kind, Netlist, Sin, WaveformSpec, parse_value, parse_waveform, read
from .reducer import (ReducerConfig, RegimeKind, classify, default_calibration, halved_chain,
                      read_markers)
from .transim import (SimConfig, TransientTrace, fit_recurrence, simulate_full,
                      simulate_reduced)

STEP_PAIRS = {"1ps/1ns": (1e-12, 1e-9), "1ns/100ns": (1e-9, 1e-7)}

STANDARD_WAVEFORMS = {
    "1ps/1ns": {
        "sin": "SIN(0 1 1G 0 0 90)",
        "pulse": "PULSE(-1 1 2PS 200PS 200PS 500PS 1NS)",
        "exp": "EXP(-4 -1 20PS 300PS 600PS 400PS)",
    },
    "1ns/100ns": {
        "sin": "SIN(0 1 100MEG 0 0 90)",
        "pulse": "PULSE(-1 1 2NS 2NS 2NS 50NS 100NS)",
        "exp": "EXP(-4 -1 2NS 30NS 60NS 40NS)",
    },
}

STRATEGIES = ("auto", "small-tau", "lumped", "halved", "halved-keep-r", "port-current", "recurrence")


class MetricError(ValueError):
    pass


# -- metrics -----------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorReport:
    E_abs: float
    E_rel: float
    point_count: int
    ref: np.ndarray = field(repr=False)
    our: np.ndarray = field(repr=False)

    def deltas(self) -> np.ndarray:
        return np.abs(self.ref - self.our)

    def weights(self) -> np.ndarray:
        return np.abs(self.ref) + np.abs(self.our)


def _currents(trace):
    if isinstance(trace, TransientTrace):
        return np.asarray(trace.current, dtype=float), np.asarray(trace.times, dtype=float)
    return np.asarray(trace, dtype=float), None


def weighted_errors(ref_trace, our_trace) -> ErrorReport:
    """Weighted absolute and relative error; accepts traces or plain current arrays."""
    ref, t_ref = _currents(ref_trace)
    our, t_our = _currents(our_trace)
    if ref.shape != our.shape or ref.ndim != 1:
        raise MetricError(f"trace lengths differ: {ref.shape} vs {our.shape}")
    if ref.size == 0:
        raise MetricError("empty traces")
    if t_ref is not None and t_our is not None:
        span = max(abs(t_ref[-1] - t_ref[0]), 1e-300)
        if not np.allclose(t_ref, t_our, rtol=0.0, atol=1e-9 * span):
            raise MetricError("traces are sampled on different time grids")
    delta = np.abs(ref - our)
    total = delta.sum()
    weight = (np.abs(ref) + np.abs(our)).sum()
    e_rel = float(total / weight) if weight > 0 else 0.0
    return ErrorReport(float(delta.mean()), e_rel, int(ref.size), ref, our)


# -- function-driven sweeps --------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One curve of the function-driven study.

    ``waveform`` is a standard name (sin, pulse, exp) or an explicit source
    description; ``s_T`` is a key of ``STEP_PAIRS``.
    """

    s_T: str
    R: float
    C: float
    waveform: str
    n_sweep: tuple[int, ...]
    strategy: str = "auto"
    alpha: float = 10.0
    halve_threshold: int = 64
    recurrence_order_m: int = 8

    def __post_init__(self):
        if self.s_T not in STEP_PAIRS:
            raise ValueError(f"s_T must be one of {sorted(STEP_PAIRS)}")
        if not self.n_sweep or min(self.n_sweep) < 1:
            raise ValueError("n_sweep must be nonempty with values >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        object.__setattr__(self, "n_sweep", tuple(int(n) for n in self.n_sweep))

    @property
    def sim_config(self) -> SimConfig:
        return SimConfig(*STEP_PAIRS[self.s_T])

    @property
    def wave_name(self) -> str:
        return self.waveform.lower() if self.waveform.lower() in STANDARD_WAVEFORMS[self.s_T] else "custom"

    def source(self) -> WaveformSpec:
        table = STANDARD_WAVEFORMS[self.s_T]
        return parse_waveform(table.get(self.waveform.lower(), self.waveform))


@dataclass(frozen=True)
class SweepRow:
    n: int
    E_abs: float
    E_rel: float
    model: str
    regime: str


@dataclass
class SweepTable:
    config: ExperimentConfig
    rows: list[SweepRow]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def select_model(n: int, R: float, C: float, step_s: float, duration_T: float,
                 strategy: str = "auto", alpha: float = 10.0, halve_threshold: int = 64,
                 recurrence_order_m: int = 8):
    """Reduced model for one chain, and its regime, under a named strategy.

    ``auto`` follows the regime: the two-term small time-constant current for
    n <= halve_threshold, a halved chain above it, the port-current model for
    large time constants and a fitted recurrence in between.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    rc = ReducerConfig(step_s, duration_T, alpha=alpha, halve_threshold=halve_threshold,
                       recurrence_order_m=recurrence_order_m)
    regime = classify(R * C, rc)
    if strategy == "auto":
        strategy = {
            RegimeKind.SMALL_TAU: "small-tau" if n <= halve_threshold else "halved",
            RegimeKind.LARGE_TAU: "port-current",
            RegimeKind.SAME_ORDER: "recurrence",
        }[regime.kind]
    if strategy in ("halved", "halved-keep-r") and n < 2:
        strategy = "small-tau"
    if strategy == "small-tau":
        model = SmallTauCurrent(n, R, C)
    elif strategy == "lumped":
        model = Lumped((n + 1) * C)
    elif strategy == "halved":
        model = halved_chain(n, R, C, "moment")
    elif strategy == "halved-keep-r":
        model = halved_chain(n, R, C, "keep")
    elif strategy == "port-current":
        model = PortCurrent(R, C)
    else:
        m = min(n, recurrence_order_m)
        model = fit_recurrence(ChainParams(n, R, C), default_calibration(step_s),
                               SimConfig(step_s, max(duration_T, 1000 * step_s)), m, strict=False)
    return model, regime


def sweep_model(config: ExperimentConfig, n: int):
    s, T = STEP_PAIRS[config.s_T]
    return select_model(n, config.R, config.C, s, T, config.strategy, config.alpha,
                        config.halve_threshold, config.recurrence_order_m)


def sweep_point(config: ExperimentConfig, n: int) -> SweepRow:
    sim = config.sim_config
    src = config.source()
    ref = simulate_full(ChainParams(n, config.R, config.C), src, sim)
    model, regime = sweep_model(config, n)
    ours = simulate_reduced(model, src, sim)
    rep = weighted_errors(ref, ours)
    return SweepRow(n, rep.E_abs, rep.E_rel, model.name, str(regime))


def _point(args):
    return sweep_point(*args)


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> SweepTable:
    """Reference vs reduced model for every n; rows follow ``n_sweep`` order."""
    tasks = [(config, n) for n in config.n_sweep]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_point, tasks))
    else:
        rows = [_point(t) for t in tasks]
    return SweepTable(config, rows)


def table_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "E_abs", "E_rel", "model", "regime"])
    for r in table.rows:
        w.writerow([r.n, f"{r.E_abs:.17g}", f"{r.E_rel:.17g}", r.model, r.regime])
    return buf.getvalue()


def plot_file_name(config: ExperimentConfig) -> str:
    c = format(config.C, "g")
    st = config.s_T.replace("/", "-")
    return f"err_{config.wave_name}_{c}_{st}.csv"


def emit_plot_data(tables, path) -> list[Path]:
    """Write one ``err_<wave>_<C>_<sT>.csv`` (n, E_abs, E_rel) per sweep table into ``path``."""
    if isinstance(tables, SweepTable):
        tables = [tables]
    tables = list(tables)
    if not tables or any(not t.rows for t in tables):
        raise ValueError("nothing to write: empty sweep table")
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for t in tables:
        target = out_dir / plot_file_name(t.config)
        with open(target, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "E_abs", "E_rel"])
            for r in t.rows:
                w.writerow([r.n, f"{r.E_abs:.17g}", f"{r.E_rel:.17g}"])
        written.append(target)
    return written


def read_plot_data(path) -> list[tuple[int, float, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [(int(n), float(a), float(r)) for n, a, r in rows[1:]]


# -- netlist comparison ------------------------------------------------------------

def read_wave_table(path) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Load a trace file as {column: (times, values)}.

    Accepts comma-separated files whose header starts with ``t`` (or
    ``time``) and whitespace-separated ``wrdata`` output, which repeats a
    time column before every vector; wrdata columns are named by position.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError(f"{path}: no data")
    first = lines[0]
    if "," in first and not _is_number(first.split(",")[0]):
        header = [h.strip() for h in first.split(",")]
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]], dtype=float)
        t = data[:, 0]
        return {name: (t, data[:, j]) for j, name in enumerate(header) if j > 0}
    data = np.array([[float(x) for x in ln.split()] for ln in lines], dtype=float)
    if data.shape[1] % 2:
        raise ValueError(f"{path}: wrdata files hold (time, value) column pairs")
    return {f"col{j // 2}": (data[:, j], data[:, j + 1]) for j in range(0, data.shape[1], 2)}


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def align_nearest(t_ref: np.ndarray, t_other: np.ndarray, values: np.ndarray, step: float) -> np.ndarray:
    """Sample ``values`` at the ``t_other`` point nearest each ``t_ref``; reject gaps > 0.1*step."""
    idx = np.clip(np.searchsorted(t_other, t_ref), 1, len(t_other) - 1)
    left = t_other[idx - 1]
    right = t_other[idx]
    idx = np.where(np.abs(t_ref - left) <= np.abs(right - t_ref), idx - 1, idx)
    gap = np.abs(t_other[idx] - t_ref)
    if np.any(gap > 0.1 * step):
        worst = float(gap.max())
        raise MetricError(f"time grids disagree by {worst:g} s (> 0.1 step)")
    return values[idx]


def compare_traces(ref_path, our_path, columns: list[str] | None = None) -> ErrorReport:
    """Weighted errors over the columns two external trace files share."""
    ref = read_wave_table(ref_path)
    our = read_wave_table(our_path)
    common = [c for c in ref if c in our] if columns is None else [c for c in columns if c in ref and c in our]
    if not common:
        raise MetricError("no common output nodes between the two trace files")
    ref_all, our_all = [], []
    for name in common:
        t_ref, v_ref = ref[name]
        t_our, v_our = our[name]
        step = float(np.median(np.diff(t_ref))) if len(t_ref) > 1 else math.inf
        ref_all.append(v_ref)
        our_all.append(align_nearest(t_ref, t_our, v_our, step))
    return weighted_errors(np.concatenate(ref_all), np.concatenate(our_all))


def _tran_params(netlist: Netlist) -> tuple[float, float]:
    for d in netlist.directives:
        tok = d.text.split()
        if tok and tok[0].lower() == ".tran" and len(tok) >= 3:
            return parse_value(tok[1]), parse_value(tok[2])
    return STEP_PAIRS["1ps/1ns"]


def compare_netlists(ann, simp, external_traces=None, columns=None) -> ErrorReport:
    """Compare an original netlist with its reduced counterpart.

    With ``external_traces=(ref_csv, our_csv)`` the traces written by another
    simulator are compared directly.  Otherwise every chain of ``ann`` is
    simulated in full and the structure left at its port in ``simp`` (a
    halved chain, a recorded model or just the port capacitor) is simulated
    under the same cosine drive; the port currents of all chains are pooled.
    """
    if external_traces is not None:
        ref_path, our_path = external_traces
        return compare_traces(ref_path, our_path, columns)
    ann_nl = ann if isinstance(ann, Netlist) else read(ann)
    simp_nl = simp if isinstance(simp, Netlist) else read(simp)
    step, stop = _tran_params(ann_nl)
    cfg = SimConfig(step, stop)
    src = Sin(0.0, 1.0, 1.0 / stop, 0.0, 0.0, 90.0)

    simp_chains = {c.port: c for c in detect_chains(build_graph(simp_nl))}
    markers = {port: model for port, model, _ in read_markers(simp_nl)}
    simp_caps = {}
    for el in simp_nl.elements:
        if el.kind is Kind.CAPACITOR and GROUND in el.nodes:
            node = el.nodes[0] if el.nodes[1] == GROUND else el.nodes[1]
            simp_caps.setdefault(node, []).append(el.value)

    ref_all, our_all = [], []
    for chain in detect_chains(build_graph(ann_nl)):
        if not chain.closed:
            continue
        ref = simulate_full(chain, src, cfg)
        if chain.port in markers:
            model = markers[chain.port]
        elif chain.port in simp_chains and simp_chains[chain.port].closed:
            other = simp_chains[chain.port]
            model = HalvedChain(other.n, other.R, other.C)
        elif chain.port in simp_caps:
            model = Lumped(sum(simp_caps[chain.port]))
        else:
            raise MetricError(f"port {chain.port} of a chain has no counterpart in the reduced netlist")
        ours = simulate_reduced(model, src, cfg)
        ref_all.append(ref.current)
        our_all.append(ours.current)
    if not ref_all:
        return weighted_errors(np.zeros(1), np.zeros(1))
    return weighted_errors(np.concatenate(ref_all), np.concatenate(our_all))


def default_jobs() -> int:
    return max(1, min(8, os.cpu_count() or 1))

