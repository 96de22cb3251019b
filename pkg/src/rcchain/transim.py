"""Transient simulation of full chains and evaluation of reduced current models.

Every run starts from rest: all chain nodes sit at the source value at t=0,
the current at t=0 is zero, and derivative stencils that reach before t=0
reuse the t=0 sample.  Voltages are referred to that starting value as
Vhat = V0 - V0(0) wherever a model needs it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .models import (ChainParams, HalvedChain, Lumped, PortCurrent, Recurrence,
                     ReducedModel, SmallTauCurrent)
from .netlist import Dc, Exp, Pulse, Sin, WaveformSpec
from .tridiag import TridiagonalLU

CURRENT_CLAMP = 1e6


@dataclass(frozen=True)
class SimConfig:
    step_s: float
    duration_T: float
    t0_offset: float = 0.0

    def __post_init__(self):
        if not 0 < self.step_s <= self.duration_T:
            raise ValueError("need 0 < step_s <= duration_T")
        if self.t0_offset < 0:
            raise ValueError("t0_offset must be >= 0")

    @property
    def samples(self) -> int:
        # tolerate T/s landing a hair under an integer
        return int(math.floor(self.duration_T / self.step_s * (1 + 1e-12))) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.samples) * self.step_s


@dataclass
class TransientTrace:
    times: np.ndarray
    v0: np.ndarray
    current: np.ndarray
    node_voltages: np.ndarray | None = None
    diverged: bool = False

    def __post_init__(self):
        if not len(self.times) == len(self.v0) == len(self.current):
            raise ValueError("trace columns differ in length")

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "v0", "current"])
        for row in zip(self.times, self.v0, self.current):
            w.writerow([f"{x:.17g}" for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TransientTrace":
        rows = list(csv.reader(io.StringIO(text)))
        header = [h.strip().lower() for h in rows[0]]
        if header[:3] != ["t", "v0", "current"]:
            raise ValueError(f"expected header t,v0,current, got {rows[0]}")
        data = np.array([[float(x) for x in r[:3]] for r in rows[1:] if r], dtype=float).reshape(-1, 3)
        return cls(data[:, 0], data[:, 1], data[:, 2])


# -- sources -----------------------------------------------------------------

def eval_waveform(spec: WaveformSpec, t):
    """Source voltage at time(s) ``t`` (scalar or array)."""
    tt = np.asarray(t, dtype=float)
    if isinstance(spec, Dc):
        out = np.full(tt.shape, float(spec.level))
    elif isinstance(spec, Sin):
        tau = tt - spec.td
        on = spec.vo + spec.va * np.exp(-np.maximum(tau, 0.0) * spec.theta) \
            * np.sin(2 * np.pi * spec.freq * tau + np.deg2rad(spec.phase))
        out = np.where(tau < 0, spec.vo, on)
    elif isinstance(spec, Pulse):
        out = _pulse(spec, tt)
    elif isinstance(spec, Exp):
        out = np.full(tt.shape, float(spec.v1))
        rise = tt >= spec.td1
        out = out + np.where(rise, (spec.v2 - spec.v1) * -np.expm1(-(tt - spec.td1) / spec.tau1), 0.0)
        fall = tt >= spec.td2
        if math.isfinite(spec.td2):
            out = out + np.where(fall, (spec.v1 - spec.v2) * -np.expm1(-(tt - spec.td2) / spec.tau2), 0.0)
    else:
        raise TypeError(f"unsupported waveform {spec!r}")
    return float(out) if np.ndim(t) == 0 else out


def _pulse(p: Pulse, t):
    local = t - p.td
    if math.isfinite(p.per) and p.per > 0:
        local = np.where(local >= 0, np.fmod(local, p.per), local)
    out = np.full(t.shape, float(p.v1))
    with np.errstate(divide="ignore", invalid="ignore"):
        rising = (local >= 0) & (local < p.tr)
        out = np.where(rising, p.v1 + (p.v2 - p.v1) * local / p.tr, out)
        high = (local >= p.tr) & (local < p.tr + p.pw)
        out = np.where(high, p.v2, out)
        fl = local - p.tr - p.pw
        falling = (fl >= 0) & (fl < p.tf)
        out = np.where(falling, p.v2 + (p.v1 - p.v2) * fl / p.tf, out)
    return out


# -- full chain ----------------------------------------------------------------

def _as_params(chain) -> ChainParams:
    return chain if isinstance(chain, ChainParams) else ChainParams(chain.n, chain.R, chain.C)


def simulate_chain(n: int, R: float, C: float, v0: np.ndarray, step_s: float,
                   record_nodes: bool = False):
    """Backward Euler on the chain driven by the sampled port voltage ``v0``.

    The unknowns each step are the increments dV_1..dV_n, which satisfy
    (kappa*I + L) dV = dV_0 e_1 - L V_old (kappa = RC/s, L the path Laplacian
    with a free far end).  Solving for increments keeps the current accurate
    when RC << s and every node tracks the port almost exactly.
    Returns (current, node voltages or None).
    """
    v0 = np.asarray(v0, dtype=float)
    kappa = R * C / step_s
    diag = np.full(n, 2.0 + kappa)
    diag[-1] = 1.0 + kappa
    off = np.full(n - 1, -1.0)
    lu = TridiagonalLU(off, diag, off)

    steps = v0.size
    current = np.zeros(steps)
    nodes = np.empty((steps, n + 1)) if record_nodes else None
    v = np.full(n + 1, v0[0])
    if record_nodes:
        nodes[0] = v
    scale = C / step_s
    rhs = np.empty(n)
    for k in range(1, steps):
        d0 = v0[k] - v0[k - 1]
        # rhs = -L V_old restricted to the interior, plus the port increment
        rhs[:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
        rhs[-1] = v[-2] - v[-1]
        rhs[0] += d0
        dv = lu.solve(rhs)
        v[0] = v0[k]
        v[1:] += dv
        current[k] = scale * (d0 + dv.sum())
        if record_nodes:
            nodes[k] = v
    return current, nodes


def simulate_full(chain, source: WaveformSpec, config: SimConfig,
                  record_nodes: bool = False) -> TransientTrace:
    """Reference trace of the complete chain (the ground truth for every model)."""
    p = _as_params(chain)
    t = config.times()
    v0 = eval_waveform(source, t)
    current, nodes = simulate_chain(p.n, p.R, p.C, v0, config.step_s, record_nodes)
    return TransientTrace(t, v0, current, nodes)


# -- reduced current models ---------------------------------------------------

def reduced_current_small(v0_history, n: int, R: float, C: float, s: float) -> float:
    """Small time-constant current from the last three port samples (oldest first).

    Shorter histories are padded at the front with their first sample.
    """
    h = list(v0_history)[-3:]
    if not h:
        raise ValueError("need at least one sample")
    while len(h) < 3:
        h.insert(0, h[0])
    v2, v1, v = h
    d1 = (v - v1) / s
    d2 = (v - 2.0 * v1 + v2) / (s * s)
    return (n + 1) * C * d1 - 0.5 * n * (n + 1) * R * C * C * d2


def small_tau_current(v0: np.ndarray, n: int, R: float, C: float, s: float) -> np.ndarray:
    """Vectorised ``reduced_current_small`` over a whole trace."""
    v0 = np.asarray(v0, dtype=float)
    pad = np.concatenate([[v0[0], v0[0]], v0])
    d1 = (pad[2:] - pad[1:-1]) / s
    d2 = (pad[2:] - 2.0 * pad[1:-1] + pad[:-2]) / (s * s)
    return (n + 1) * C * d1 - 0.5 * n * (n + 1) * R * C * C * d2


class RunningIntegral:
    """O(1) update of the integral of Vhat, accumulated with right-endpoint sums.

    The right-endpoint rule matches what backward Euler does to the node next
    to the port, so the large time-constant model and the reference share
    their discretisation of the slow term.
    """

    def __init__(self, step_s: float, t0: float = 0.0):
        self.step_s = step_s
        self.t0 = t0
        self.total = 0.0
        self.count = 0

    def push(self, vhat: float) -> None:
        if self.count:
            self.total += vhat * self.step_s
        self.count += 1

    def mean(self) -> float:
        """Time average of Vhat over [-t0, t], Vhat being 0 before t = 0."""
        d = (self.count - 1) * self.step_s + self.t0
        return self.total / d if d > 0 else 0.0

    @property
    def elapsed(self) -> float:
        return (self.count - 1) * self.step_s + self.t0


def reduced_current_large(v0_history, R: float, C: float, s: float, d: float | None = None) -> float:
    """Large time-constant current at the last sample of the full prefix ``v0_history``.

    ``d`` is the elapsed time the mean is taken over; the default is the
    prefix length, i.e. t0 = 0.
    """
    h = np.asarray(v0_history, dtype=float)
    vhat = h - h[0]
    dv = (h[-1] - h[-2]) / s if h.size > 1 else 0.0
    if d is None:
        d = (h.size - 1) * s
    integral = s * vhat[1:].sum()
    mean = integral / d if d > 0 else 0.0
    return C * dv + vhat[-1] / R - d / (R * R * C) * mean


def large_tau_current(v0: np.ndarray, R: float, C: float, s: float, t0: float = 0.0) -> np.ndarray:
    """Vectorised ``reduced_current_large``; the mean runs over [-t0, t]."""
    v0 = np.asarray(v0, dtype=float)
    vhat = v0 - v0[0]
    dv = np.diff(v0, prepend=v0[0]) / s
    integral = s * np.cumsum(vhat)  # vhat[0] = 0, so this is the right-endpoint sum
    # d * mean(Vhat over [-t0, t]) is the integral itself; t0 only sets d
    return C * dv + vhat / R - integral / (R * R * C)


# -- fitted recurrence (experimental) -----------------------------------------

class RankDeficientError(np.linalg.LinAlgError):
    pass


def _lagged(x: np.ndarray, lags: range) -> np.ndarray:
    m = max(lags)
    pad = np.concatenate([np.zeros(m), x])
    n = x.size
    return np.column_stack([pad[m - k: m - k + n] for k in lags])


def fit_recurrence_trace(v0: np.ndarray, current: np.ndarray, m: int,
                         strict: bool = True, rcond: float = 1e-10) -> Recurrence:
    """Least-squares recurrence coefficients for a calibration trace.

    Pre-history is zero for both I and Vhat, as in the rollout.  Columns are
    normalised before the solve; with ``strict`` a numerically rank-deficient
    design raises, otherwise the minimum-norm solution is returned.
    """
    if m < 1:
        raise ValueError("recurrence order m must be >= 1")
    v0 = np.asarray(v0, dtype=float)
    current = np.asarray(current, dtype=float)
    if v0.size < 2 * m + 2:
        raise ValueError(f"calibration trace too short for order {m}")
    vhat = v0 - v0[0]
    A = np.hstack([_lagged(current, range(1, m + 1)), _lagged(vhat, range(0, m + 1))])
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    sol, _, rank, sv = np.linalg.lstsq(A / norms, current, rcond=rcond)
    if rank == 0:
        raise RankDeficientError("calibration trace carries no signal; use a non-constant source")
    if strict and rank < A.shape[1]:
        raise RankDeficientError(
            f"design matrix has rank {rank} < {A.shape[1]}; try a smaller order m "
            f"or a richer calibration waveform")
    coef = sol / norms
    resid = current - A @ coef
    return Recurrence(m, tuple(coef[:m]), tuple(coef[m:]),
                      residual=float(np.sqrt(np.mean(resid ** 2))), rank=int(rank))


def fit_recurrence(chain, source_class: WaveformSpec, config: SimConfig, m: int,
                   strict: bool = True) -> Recurrence:
    """Calibrate the recurrence against ``simulate_full`` on ``source_class``."""
    if m < 1:
        raise ValueError("recurrence order m must be >= 1")
    p = _as_params(chain)
    if m > p.n:
        raise ValueError(f"order m={m} exceeds chain length n={p.n}")
    ref = simulate_full(p, source_class, config)
    return fit_recurrence_trace(ref.v0, ref.current, m, strict=strict)


def rollout_recurrence(model: Recurrence, v0: np.ndarray):
    """Run the recurrence from zero history; returns (current, diverged)."""
    v0 = np.asarray(v0, dtype=float)
    vhat = v0 - v0[0]
    m = model.m
    # reversed so the dot products pair lag k with coefficient k
    gamma = np.asarray(model.gamma)[::-1]
    beta = np.asarray(model.beta)[::-1]
    ip = np.zeros(v0.size + m)
    vp = np.concatenate([np.zeros(m), vhat])
    diverged = False
    for k in range(v0.size):
        j = k + m
        val = gamma @ ip[j - m: j] + beta @ vp[j - m: j + 1]
        if not abs(val) <= CURRENT_CLAMP:
            diverged = True
            val = math.copysign(CURRENT_CLAMP, val) if not math.isnan(val) else 0.0
        ip[j] = val
    return ip[m:], diverged


# -- dispatch -------------------------------------------------------------------

def simulate_reduced(model: ReducedModel, source: WaveformSpec, config: SimConfig) -> TransientTrace:
    t = config.times()
    v0 = eval_waveform(source, t)
    s = config.step_s
    diverged = False
    if isinstance(model, Lumped):
        current = model.C_total * np.diff(v0, prepend=v0[0]) / s
    elif isinstance(model, HalvedChain):
        current, _ = simulate_chain(model.m, model.R, model.C_each, v0, s)
    elif isinstance(model, SmallTauCurrent):
        current = small_tau_current(v0, model.n, model.R, model.C, s)
    elif isinstance(model, PortCurrent):
        current = large_tau_current(v0, model.R, model.C, s, model.t0 or config.t0_offset)
    elif isinstance(model, Recurrence):
        current, diverged = rollout_recurrence(model, v0)
    else:
        raise TypeError(f"unsupported model {model!r}")
    return TransientTrace(t, v0, current, diverged=diverged)
