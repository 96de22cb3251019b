"""Synthetic netlists with planted RC chains, for tests and demonstrations."""

from __future__ import annotations

from collections.abc import Sequence


def chain_lines(port: str, prefix: str, n: int, R: str | float = "0.953316",
                C: str | float = "0.891774f", r_overrides: dict[int, float] | None = None,
                port_cap: bool = True) -> list[str]:
    """Element lines of a chain port - <prefix>1 - ... - <prefix>n.

    ``r_overrides`` maps a resistor index (0 = the one at the port) to a
    replacement value.  With ``port_cap=False`` the port gets no capacitor.
    """
    nodes = [port] + [f"{prefix}{k}" for k in range(1, n + 1)]
    r_overrides = r_overrides or {}
    lines = [f"R{prefix}{k} {nodes[k]} {nodes[k + 1]} {r_overrides.get(k, R)!s}" for k in range(n)]
    first = 0 if port_cap else 1
    lines += [f"C{prefix}{k} {nodes[k]} 0 {C}" for k in range(first, n + 1)]
    return lines


def planted_netlist(lengths: Sequence[int], R: str | float = "0.953316",
                    C: str | float = "0.891774f", extra_core: int = 0,
                    title: str = "planted chains") -> str:
    """A small MOSFET core with one chain of each requested length hanging off it.

    Chain k starts at core node ``p<k>`` (which gets its own grounded
    capacitor, so it becomes the chain port); interior nodes are ``c<k>_<j>``.
    ``extra_core`` adds that many core-only nodes to dilute the split ratio.
    """
    lines = [title, "VDD vdd 0 DC 1", "VIN in 0 SIN(0 1 1G 0 0 90)"]
    for k, n in enumerate(lengths):
        port = f"p{k}"
        lines.append(f"M{k} {port} in 0 0 nch W=1u L=0.1u")
        lines.extend(chain_lines(port, f"c{k}_", n, R, C))
    for j in range(extra_core):
        lines.append(f"Mx{j} x{j} in vdd vdd pch")
    lines += [".tran 1p 1n", ".end"]
    return "\n".join(lines) + "\n"


def driven_chain_netlist(n: int, R: str | float = 1, C: str | float = "1f",
                         source: str = "SIN(0 1 1G 0 0 90)", outputs: Sequence[str] = ()) -> str:
    """One chain driven directly by a voltage source at its port ``vin``."""
    lines = ["driven chain", f"V1 vin 0 {source}"]
    lines.extend(chain_lines("vin", "n", n, R, C))
    lines.append(".tran 1p 1n")
    if outputs:
        lines += [".control", "run", "wrdata out.txt " + " ".join(f"v({o})" for o in outputs), ".endc"]
    lines.append(".end")
    return "\n".join(lines) + "\n"
