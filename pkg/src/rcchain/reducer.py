"""Regime classification and netlist rewriting for detected chains.

A chain's time constant tau_c = RC is compared against the step s and the
simulated span d:

    tau_c <  s/alpha              SmallTau   lump into the port, or halve long chains
    s/alpha <= tau_c <= alpha*d   SameOrder  fitted recurrence (experimental, opt-in)
    tau_c >  alpha*d              LargeTau   port-current model

The rewrite is static, so d is the full simulated duration T.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import re
from dataclasses import dataclass, field

from .chain_detect import Chain, build_graph, detect_chains, time_constant
from .models import HalvedChain, Lumped, PortCurrent, Recurrence, ReducedModel
from .netlist import (GROUND, Directive, Element, Kind, Netlist, Pulse, WaveformSpec,
                      format_value, parse_value, remap_output_nodes)
from .transim import SimConfig, fit_recurrence

MARKER = "*RCRED"


class RewriteError(ValueError):
    pass


@dataclass(frozen=True)
class ReducerConfig:
    """Knobs for classification and model choice.

    ``halve_resistance`` selects the series resistance of a halved chain:
    ``"moment"`` (default) rescales R so the halved chain keeps the original
    chain's second admittance moment, ``"keep"`` reuses R unchanged.
    """

    step_s: float
    sim_duration_T: float
    alpha: float = 10.0
    halve_threshold: int = 64
    recurrence_order_m: int = 8
    enable_recurrence: bool = False
    min_chain_len: int = 3
    halve_resistance: str = "moment"
    calibration_source: WaveformSpec | None = None

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if not self.step_s > 0:
            raise ValueError("step_s must be positive")
        if not self.sim_duration_T >= self.step_s:
            raise ValueError("sim_duration_T must be >= step_s")
        if self.recurrence_order_m < 1:
            raise ValueError("recurrence order must be >= 1")
        if self.halve_resistance not in ("moment", "keep"):
            raise ValueError("halve_resistance must be 'moment' or 'keep'")


class RegimeKind(enum.Enum):
    SMALL_TAU = "SmallTau"
    SAME_ORDER = "SameOrder"
    LARGE_TAU = "LargeTau"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    tau_c: float
    d: float

    def __str__(self) -> str:
        return self.kind.value


def classify(tau_c: float, config: ReducerConfig, d: float | None = None) -> Regime:
    """Regime of a chain with time constant ``tau_c``; boundaries count as SameOrder."""
    d = config.sim_duration_T if d is None else d
    if not (tau_c > 0 and d > 0):
        raise ValueError("tau_c and d must be positive")
    if tau_c < config.step_s / config.alpha:
        kind = RegimeKind.SMALL_TAU
    elif tau_c > config.alpha * d:
        kind = RegimeKind.LARGE_TAU
    else:
        kind = RegimeKind.SAME_ORDER
    return Regime(kind, tau_c, d)


def halved_chain(n: int, R: float, C: float, resistance: str = "moment") -> HalvedChain:
    """m = floor(n/2) sections with the total capacitance (n+1)C shared equally.

    With ``resistance="moment"`` the section resistance is chosen so that
    sum_k R_k (capacitance beyond resistor k)^2, the s^2 coefficient of the
    port admittance, equals that of the original chain.
    """
    m = n // 2
    if m < 1:
        raise ValueError("halving needs n >= 2")
    c_each = (n + 1) * C / (m + 1)
    if resistance == "keep":
        r = R
    else:
        r = R * (n * (2 * n + 1) * (m + 1)) / (m * (2 * m + 1) * (n + 1))
    return HalvedChain(m, r, c_each)


def default_calibration(step_s: float) -> Pulse:
    """Trapezoidal pulse train used to fit recurrences; its corners excite every lag."""
    return Pulse(0.0, 1.0, step_s, 10 * step_s, 10 * step_s, 30 * step_s, 100 * step_s)


def choose_model(chain, regime: Regime, config: ReducerConfig) -> ReducedModel:
    n, R, C = chain.n, chain.R, chain.C
    if regime.kind is RegimeKind.SMALL_TAU:
        if n <= config.halve_threshold:
            return Lumped((n + 1) * C)
        return halved_chain(n, R, C, config.halve_resistance)
    if regime.kind is RegimeKind.LARGE_TAU:
        return PortCurrent(R, C)
    m = min(n, config.recurrence_order_m)
    source = config.calibration_source or default_calibration(config.step_s)
    span = max(config.sim_duration_T, 1000 * config.step_s)
    # the rank check is relaxed: smooth calibration inputs make lags collinear
    return fit_recurrence(chain, source, SimConfig(config.step_s, span), m, strict=False)


# -- rewriting -------------------------------------------------------------------

def _unique(name: str, taken: set[str]) -> str:
    cand, k = name, 1
    while cand.lower() in taken:
        cand = f"{name}_{k}"
        k += 1
    taken.add(cand.lower())
    return cand


def _marker(chain: Chain, model) -> str:
    fields = [MARKER]
    if isinstance(model, PortCurrent):
        fields.append("MODEL=PORTCURRENT")
    else:
        fields.append("MODEL=RECURRENCE EXPERIMENTAL=1")
    fields += [f"PORT={chain.port}", f"N={chain.n}", f"R={format_value(chain.R)}",
               f"C={format_value(chain.C)}", f"PORTCAP={chain.capacitors[0]}"]
    if isinstance(model, PortCurrent):
        fields.append(f"T0={format_value(model.t0)}")
    else:
        fields += [f"M={model.m}",
                   "GAMMA=" + ",".join(format_value(g) for g in model.gamma),
                   "BETA=" + ",".join(format_value(b) for b in model.beta),
                   f"RESIDUAL={format_value(model.residual)}"]
    return " ".join(fields)


def read_markers(netlist: Netlist) -> list[tuple[str, PortCurrent | Recurrence, dict]]:
    """Models recorded by ``rewrite`` as ``*RCRED`` comments: (port, model, raw fields)."""
    out = []
    for d in netlist.directives:
        text = d.text.strip()
        if not text.upper().startswith(MARKER):
            continue
        kv = dict(re.findall(r"(\w+)=(\S+)", text))
        kv = {k.upper(): v for k, v in kv.items()}
        if kv.get("MODEL", "").upper() == "PORTCURRENT":
            model = PortCurrent(float(kv["R"]), float(kv["C"]), float(kv.get("T0", 0.0)))
        else:
            gamma = tuple(float(x) for x in kv["GAMMA"].split(","))
            beta = tuple(float(x) for x in kv["BETA"].split(","))
            model = Recurrence(int(kv["M"]), gamma, beta, residual=float(kv.get("RESIDUAL", "nan")))
        out.append((kv["PORT"], model, kv))
    return out


def _check_chain(netlist: Netlist, chain: Chain, index: dict[str, Element]) -> None:
    path = chain.nodes
    for k, name in enumerate(chain.resistors):
        el = index.get(name.lower())
        if el is None or el.kind is not Kind.RESISTOR or set(el.nodes) != {path[k], path[k + 1]}:
            raise RewriteError(f"chain at {chain.port}: resistor {name} not found between "
                               f"{path[k]} and {path[k + 1]}")
    for node, name in zip(path, chain.capacitors):
        el = index.get(name.lower())
        if el is None or el.kind is not Kind.CAPACITOR or set(el.nodes) != {node, GROUND}:
            raise RewriteError(f"chain at {chain.port}: grounded capacitor {name} not found at {node}")


def rewrite(netlist: Netlist, plan: list[tuple[Chain, ReducedModel]]) -> tuple[Netlist, dict[str, str]]:
    """Apply reduced models to a copy of ``netlist``; returns it with the node mapping.

    Every deleted interior node maps to its chain's port and output
    directives are remapped accordingly.
    """
    if not plan:
        return netlist.copy(), {}
    seen: dict[str, str] = {}
    for chain, _ in plan:
        if not chain.closed:
            raise RewriteError(f"chain at {chain.port} is an open fragment and cannot be removed")
        for node in chain.nodes:
            if node in seen:
                raise RewriteError(f"chains at {seen[node]} and {chain.port} overlap at node {node}")
            seen[node] = chain.port

    out = netlist.copy()
    index = {el.name.lower(): el for el in out.elements}
    taken = set(index)
    for chain, _ in plan:
        _check_chain(out, chain, index)

    drop: set[str] = set()
    inserts: dict[str, list] = {}  # element name -> items placed right after it
    mapping: dict[str, str] = {}
    for chain, model in plan:
        port_cap = index[chain.capacitors[0].lower()]
        drop.update(n.lower() for n in chain.resistors)
        drop.update(n.lower() for n in chain.capacitors[1:])
        for node in chain.interior:
            mapping[node] = chain.port
        added: list = []
        if isinstance(model, Lumped):
            port_cap.value = model.C_total
            port_cap.raw = None
        elif isinstance(model, HalvedChain):
            port_cap.value = model.C_each
            port_cap.raw = None
            nodes = [chain.port] + [f"{chain.port}_rch{k}" for k in range(1, model.m + 1)]
            for k in range(model.m):
                added.append(Element(Kind.RESISTOR, _unique(f"Rrch_{chain.port}_{k + 1}", taken),
                                     [nodes[k], nodes[k + 1]], model.R))
            for k in range(1, model.m + 1):
                added.append(Element(Kind.CAPACITOR, _unique(f"Crch_{chain.port}_{k}", taken),
                                     [nodes[k], GROUND], model.C_each))
        elif isinstance(model, (PortCurrent, Recurrence)):
            added.append(Directive(_marker(chain, model) + out.newline))
        else:
            raise RewriteError(f"unsupported model {model!r}")
        inserts[port_cap.name.lower()] = added

    items = []
    for it in out.items:
        if isinstance(it, Element):
            key = it.name.lower()
            if key in drop:
                continue
            items.append(it)
            items.extend(inserts.get(key, ()))
        else:
            items.append(it)
    out.items = items
    out = remap_output_nodes(out, mapping, deleted=mapping.keys())
    return out, mapping


# -- one-call pipeline -----------------------------------------------------------

@dataclass
class ReductionRow:
    port: str
    n: int
    regime: str
    model: str
    nodes_removed: int
    tau_c: float
    note: str = ""


@dataclass
class ReductionResult:
    netlist: Netlist
    mapping: dict[str, str]
    rows: list[ReductionRow] = field(default_factory=list)
    chains: list[Chain] = field(default_factory=list)


def reduce_netlist(netlist: Netlist, config: ReducerConfig, rel_tol: float = 1e-9) -> ReductionResult:
    """Detect, classify and rewrite every eligible chain of ``netlist``."""
    chains = detect_chains(build_graph(netlist), rel_tol)
    plan, rows = [], []
    for chain in chains:
        tau = time_constant(chain)
        regime = classify(tau, config)
        row = ReductionRow(chain.port, chain.n, str(regime), "none", 0, tau)
        rows.append(row)
        if not chain.closed:
            row.note = "open fragment"
            continue
        if chain.n < config.min_chain_len:
            row.note = "below min-chain-len"
            continue
        if regime.kind is RegimeKind.SAME_ORDER and not config.enable_recurrence:
            row.note = "recurrence disabled"
            continue
        model = choose_model(chain, regime, config)
        row.model = model.name
        row.nodes_removed = chain.n - (model.m if isinstance(model, HalvedChain) else 0)
        if isinstance(model, Recurrence):
            row.note = "experimental"
        plan.append((chain, model))
    new, mapping = rewrite(netlist, plan)
    return ReductionResult(new, mapping, rows, chains)


def report_csv(rows: list[ReductionRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["port", "n", "regime", "model", "nodes_removed", "tau_c", "note"])
    for r in rows:
        w.writerow([r.port, r.n, r.regime, r.model, r.nodes_removed, f"{r.tau_c:.17g}", r.note])
    return buf.getvalue()


def parse_time(text: str) -> float:
    """Parse a SPICE-style duration such as ``1ps`` or ``100NS``."""
    v = parse_value(text)
    if not (v > 0 and math.isfinite(v)):
        raise ValueError(f"time must be positive: {text!r}")
    return v
