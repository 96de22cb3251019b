"""SPICE-subset netlist parsing and emission.

Only R, C, V and M element lines are interpreted.  Everything else (dot
directives, control blocks, comments, subcircuit instances, ...) is kept as
opaque text so that ``emit(parse(text)) == text`` for untouched input.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Mapping, Union

GROUND = "0"

_SCALE_EXP = {"t": 12, "g": 9, "meg": 6, "k": 3, "m": -3, "u": -6, "n": -9, "p": -12, "f": -15}
_NUMBER_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|mil|[tgkmunpf])?[a-z]*$",
    re.IGNORECASE,
)
_VREF_RE = re.compile(r"\b([vV])(\s*\(\s*)([^(),\s]+)(\s*(?:,\s*([^(),\s]+)\s*)?\))")


class ParseError(ValueError):
    """Malformed netlist input; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class RemapError(ValueError):
    pass


def parse_value(token: str) -> float:
    """Decode a SPICE number such as ``1k``, ``0.891774f``, ``100MEG`` or ``2PS``.

    Decoding goes through :class:`decimal.Decimal` so the result is the
    correctly rounded float of the decimal value (``parse_value("1f") == 1e-15``).
    """
    m = _NUMBER_RE.match(token.strip())
    if m is None:
        raise ValueError(f"not a SPICE number: {token!r}")
    mantissa, suffix = m.group(1), m.group(2)
    try:
        value = Decimal(mantissa)
    except InvalidOperation as exc:  # pragma: no cover - regex guarantees syntax
        raise ValueError(f"not a SPICE number: {token!r}") from exc
    if suffix:
        suffix = suffix.lower()
        if suffix == "mil":
            value *= Decimal("25.4e-6")
        else:
            value = value.scaleb(_SCALE_EXP[suffix])
    return float(value)


def format_value(value: float) -> str:
    return f"{value:.17g}"


# -- waveforms ---------------------------------------------------------------

@dataclass(frozen=True)
class Sin:
    vo: float
    va: float
    freq: float
    td: float = 0.0
    theta: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.freq > 0:
            raise ValueError("SIN frequency must be > 0")
        if self.td < 0:
            raise ValueError("SIN delay must be >= 0")


@dataclass(frozen=True)
class Pulse:
    v1: float
    v2: float
    td: float = 0.0
    tr: float = 0.0
    tf: float = 0.0
    pw: float = math.inf
    per: float = math.inf

    def __post_init__(self):
        for name in ("td", "tr", "tf", "pw", "per"):
            if getattr(self, name) < 0:
                raise ValueError(f"PULSE {name} must be >= 0")


@dataclass(frozen=True)
class Exp:
    v1: float
    v2: float
    td1: float
    tau1: float
    td2: float = math.inf
    tau2: float | None = None

    def __post_init__(self):
        if self.tau2 is None:
            object.__setattr__(self, "tau2", self.tau1)
        if self.td1 < 0 or self.td2 < 0:
            raise ValueError("EXP delays must be >= 0")
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise ValueError("EXP time constants must be > 0")


@dataclass(frozen=True)
class Dc:
    level: float


WaveformSpec = Union[Sin, Pulse, Exp, Dc]

_WAVE_RE = re.compile(r"^\s*(sin|pulse|exp)\s*\((.*)\)\s*$", re.IGNORECASE | re.DOTALL)


def parse_waveform(text: str) -> WaveformSpec:
    """Parse ``SIN(...)``, ``PULSE(...)``, ``EXP(...)``, ``DC v`` or a bare level."""
    m = _WAVE_RE.match(text)
    if m is None:
        tokens = text.split()
        if tokens and tokens[0].lower() == "dc":
            tokens = tokens[1:]
        if len(tokens) != 1:
            raise ValueError(f"unrecognised source description: {text!r}")
        return Dc(parse_value(tokens[0]))
    kind = m.group(1).lower()
    args = [parse_value(tok) for tok in m.group(2).replace(",", " ").split()]
    if kind == "sin":
        if len(args) < 3:
            raise ValueError("SIN needs at least VO VA FREQ")
        return Sin(*args[:6])
    if kind == "pulse":
        if len(args) < 2:
            raise ValueError("PULSE needs at least V1 V2")
        return Pulse(*args[:7])
    if len(args) < 4:
        raise ValueError("EXP needs at least V1 V2 TD1 TAU1")
    return Exp(*args[:6])


def format_waveform(spec: WaveformSpec) -> str:
    if isinstance(spec, Dc):
        return f"DC {format_value(spec.level)}"
    name = type(spec).__name__.upper()
    values = [getattr(spec, f.name) for f in dataclasses.fields(spec)]
    while values and math.isinf(values[-1]):
        values.pop()
    return f"{name}({' '.join(format_value(v) for v in values)})"


# -- netlist model -----------------------------------------------------------

class Kind(enum.Enum):
    RESISTOR = "R"
    CAPACITOR = "C"
    VOLTAGE_SOURCE = "V"
    MOSFET = "M"
    OTHER = "?"


@dataclass
class Element:
    """One element line.

    ``raw`` holds the original physical line(s) including line endings; an
    element with ``raw=None`` was synthesized or modified and is emitted in
    canonical form.  For ``Kind.OTHER`` the node list is an over-approximation:
    every bare token after the name.
    """

    kind: Kind
    name: str
    nodes: list[str]
    value: float | None = None
    source_spec: WaveformSpec | None = None
    raw: str | None = None
    extra: list[str] = field(default_factory=list)

    def canonical(self) -> str:
        parts = [self.name, *self.nodes]
        if self.kind is Kind.VOLTAGE_SOURCE and self.source_spec is not None:
            parts.append(format_waveform(self.source_spec))
        elif self.value is not None:
            parts.append(format_value(self.value))
        parts.extend(self.extra)
        return " ".join(parts)


@dataclass
class Directive:
    raw: str

    @property
    def text(self) -> str:
        return self.raw.rstrip("\r\n")


@dataclass
class Netlist:
    title: str
    items: list[Element | Directive] = field(default_factory=list)
    title_raw: str | None = None
    newline: str = "\n"

    @property
    def elements(self) -> list[Element]:
        return [it for it in self.items if isinstance(it, Element)]

    @property
    def directives(self) -> list[Directive]:
        return [it for it in self.items if isinstance(it, Directive)]

    def element(self, name: str) -> Element:
        key = name.lower()
        for el in self.elements:
            if el.name.lower() == key:
                return el
        raise KeyError(name)

    def node_names(self) -> set[str]:
        """Distinct non-ground node names declared by interpreted elements."""
        nodes: set[str] = set()
        for el in self.elements:
            if el.kind is not Kind.OTHER:
                nodes.update(el.nodes)
        nodes.discard(GROUND)
        return nodes

    def copy(self) -> "Netlist":
        items = [dataclasses.replace(it) if isinstance(it, Element) else it for it in self.items]
        for it in items:
            if isinstance(it, Element):
                it.nodes = list(it.nodes)
                it.extra = list(it.extra)
        return dataclasses.replace(self, items=items)


# -- parsing -----------------------------------------------------------------

def _logical_lines(lines: list[str]) -> list[tuple[int, str, str]]:
    """Merge '+' continuation lines; returns (first lineno, text, raw)."""
    out: list[list] = []
    for i, line in enumerate(lines, start=2):
        body = line.rstrip("\r\n")
        if body.startswith("+") and out:
            out[-1][1] += " " + body[1:]
            out[-1][2] += line
        else:
            out.append([i, body, line])
    return [tuple(x) for x in out]


def _strip_inline_comment(text: str) -> str:
    text = text.split(";", 1)[0]
    return re.split(r"\s\$", text, maxsplit=1)[0]


def _tokens(text: str) -> list[str]:
    text = text.replace("(", " ( ").replace(")", " ) ").replace(",", " ")
    return text.split()


def _two_terminal(kind: Kind, text: str, raw: str, lineno: int) -> Element:
    tokens = text.split()
    if len(tokens) < 4:
        raise ParseError(f"{tokens[0]}: expected NAME N1 N2 VALUE", lineno)
    name, n1, n2, value_tok, *extra = tokens
    if "=" in value_tok:
        value_tok = value_tok.split("=", 1)[1]
    try:
        value = parse_value(value_tok)
    except ValueError as exc:
        raise ParseError(f"{name}: non-numeric value {value_tok!r}", lineno) from exc
    if "(" in n1 + n2 or "=" in n1 + n2:
        raise ParseError(f"{name}: expected two node names", lineno)
    # zero-valued capacitors occur in extracted netlists and are harmless
    if value < 0 or (value == 0 and kind is Kind.RESISTOR) or not math.isfinite(value):
        raise ParseError(f"{name}: value must be positive, got {value_tok!r}", lineno)
    return Element(kind, name, [n1, n2], value=value, raw=raw, extra=extra)


def _voltage_source(text: str, raw: str, lineno: int) -> Element:
    tokens = text.split(None, 3)
    if len(tokens) < 3:
        raise ParseError(f"{tokens[0]}: expected NAME N+ N- [SPEC]", lineno)
    name, n1, n2 = tokens[:3]
    rest = tokens[3] if len(tokens) > 3 else ""
    spec: WaveformSpec | None = None
    m = re.search(r"\b(sin|pulse|exp)\s*\([^)]*\)", rest, re.IGNORECASE)
    try:
        if m is not None:
            spec = parse_waveform(m.group(0))
        elif rest.strip() == "":
            spec = Dc(0.0)
        else:
            head = rest.split()
            if head[0].lower() == "dc" and len(head) > 1:
                spec = Dc(parse_value(head[1]))
            elif head[0].lower() not in ("pwl", "sffm", "am", "ac"):
                spec = Dc(parse_value(head[0]))
    except ValueError as exc:
        raise ParseError(f"{name}: {exc}", lineno) from exc
    return Element(Kind.VOLTAGE_SOURCE, name, [n1, n2], source_spec=spec, raw=raw)


def _opaque_element(kind: Kind, text: str, raw: str) -> Element:
    tokens = _tokens(text)
    name = tokens[0]
    if kind is Kind.MOSFET:
        nodes = [t for t in tokens[1:5] if "=" not in t and t not in "()"]
        if len(tokens) < 6:
            nodes = nodes[:-1]
    else:
        nodes = [t for t in tokens[1:] if "=" not in t and t not in ("(", ")")]
    return Element(kind, name, nodes, raw=raw)


def parse(text: str) -> Netlist:
    """Parse netlist text.  The first line is the title."""
    lines = text.splitlines(keepends=True)
    if not lines:
        return Netlist(title="", title_raw="")
    newline = "\r\n" if lines[0].endswith("\r\n") else "\n"
    title_raw = lines[0]
    nl = Netlist(title=title_raw.rstrip("\r\n"), title_raw=title_raw, newline=newline)

    seen: dict[str, int] = {}
    in_control = False
    ended = False
    for lineno, body, raw in _logical_lines(lines[1:]):
        stripped = body.strip()
        lower = stripped.lower()
        if in_control:
            if lower.startswith(".endc"):
                in_control = False
            nl.items.append(Directive(raw))
            continue
        if ended or not stripped or stripped[0] in "*.;$" or not stripped[0].isalpha():
            if lower.startswith(".control"):
                in_control = True
            elif lower == ".end" or lower.startswith(".end "):
                ended = True
            nl.items.append(Directive(raw))
            continue

        logical = _strip_inline_comment(stripped)
        letter = logical[0].upper()
        if letter == "R":
            el = _two_terminal(Kind.RESISTOR, logical, raw, lineno)
        elif letter == "C":
            el = _two_terminal(Kind.CAPACITOR, logical, raw, lineno)
        elif letter == "V":
            el = _voltage_source(logical, raw, lineno)
        elif letter == "M":
            el = _opaque_element(Kind.MOSFET, logical, raw)
        else:
            el = _opaque_element(Kind.OTHER, logical, raw)

        key = el.name.lower()
        if key in seen:
            raise ParseError(f"duplicate element name {el.name!r} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        nl.items.append(el)
    return nl


def read(path) -> Netlist:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse(fh.read())


def emit(netlist: Netlist) -> str:
    """Render a netlist; untouched items are written back verbatim."""
    title = netlist.title_raw if netlist.title_raw is not None else netlist.title + netlist.newline
    out = [title]
    for item in netlist.items:
        if item.raw is not None:
            out.append(item.raw)
        else:
            out.append(item.canonical() + netlist.newline)
    return "".join(out)


def write(netlist: Netlist, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(emit(netlist))


# -- output node remapping ---------------------------------------------------

def output_nodes(netlist: Netlist) -> list[str]:
    """Nodes referenced as ``V(node)`` by non-comment directives, in order."""
    found: list[str] = []
    for d in netlist.directives:
        text = d.text.lstrip()
        if text.startswith("*"):
            continue
        for m in _VREF_RE.finditer(text):
            for node in (m.group(3), m.group(5)):
                if node and node not in found:
                    found.append(node)
    return found


def remap_output_nodes(
    netlist: Netlist,
    mapping: Mapping[str, str],
    deleted: Iterable[str] | None = None,
) -> Netlist:
    """Point ``V(node)`` references in output directives at surviving nodes.

    ``deleted`` is the set of nodes removed by a rewrite (defaults to the keys
    of ``mapping``).  A reference to a deleted node without a mapping entry is
    an error.  Comment lines are never touched.
    """
    deleted = set(mapping) if deleted is None else set(deleted)
    lower_map = {k.lower(): v for k, v in mapping.items()}
    lower_deleted = {k.lower() for k in deleted}
    missing: list[str] = []

    def sub(m: re.Match) -> str:
        text, base, pos = m.group(0), m.start(), 0
        pieces = []
        for g in (3, 5):
            node = m.group(g)
            if node is None:
                continue
            key = node.lower()
            if key in lower_map:
                repl = lower_map[key]
            else:
                if key in lower_deleted:
                    missing.append(node)
                repl = node
            pieces += [text[pos:m.start(g) - base], repl]
            pos = m.end(g) - base
        pieces.append(text[pos:])
        return "".join(pieces)

    out = netlist.copy()
    for i, item in enumerate(out.items):
        if not isinstance(item, Directive):
            continue
        text = item.text
        if text.lstrip().startswith("*"):
            continue
        new_text = _VREF_RE.sub(sub, text)
        if new_text != text:
            out.items[i] = Directive(new_text + item.raw[len(text):])
    if missing:
        raise RemapError("output directives reference deleted nodes without a mapping: "
                         + ", ".join(sorted(set(missing))))
    return out
