"""Reduced chain models shared by the reducer and the transient evaluators."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ChainParams:
    """Bare electrical description of a uniform chain: n resistors, n+1 capacitors."""

    n: int
    R: float
    C: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("chain needs n >= 1")
        if not (self.R > 0 and self.C > 0):
            raise ValueError("R and C must be positive")


@dataclass(frozen=True)
class Lumped:
    """Whole chain folded into the port capacitor."""

    C_total: float
    name: str = field(default="lumped", init=False, repr=False)


@dataclass(frozen=True)
class HalvedChain:
    """Chain of m resistors R and m+1 capacitors C_each with the same total capacitance."""

    m: int
    R: float
    C_each: float
    name: str = field(default="halved", init=False, repr=False)


@dataclass(frozen=True)
class SmallTauCurrent:
    """Two-term small time-constant current model, evaluated numerically."""

    n: int
    R: float
    C: float
    name: str = field(default="small-tau", init=False, repr=False)


@dataclass(frozen=True)
class PortCurrent:
    """Large time-constant model driven by the port capacitor and its neighbour."""

    R: float
    C: float
    t0: float = 0.0
    name: str = field(default="port-current", init=False, repr=False)


@dataclass(frozen=True)
class Recurrence:
    """Fitted linear recurrence; experimental.

    I(t) = sum_k gamma[k-1] I(t-ks) + sum_k beta[k] Vhat(t-ks), k = 1..m and
    0..m respectively, with Vhat = V0 - V0(0).
    """

    m: int
    gamma: tuple[float, ...]
    beta: tuple[float, ...]
    residual: float = float("nan")
    rank: int = -1
    name: str = field(default="recurrence", init=False, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("recurrence order m must be >= 1")
        if len(self.gamma) != self.m or len(self.beta) != self.m + 1:
            raise ValueError("need m gamma and m+1 beta coefficients")


RecurrenceModel = Recurrence

ReducedModel = Lumped | HalvedChain | SmallTauCurrent | PortCurrent | Recurrence
