import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcchain.netlist import (Dc, Element, Exp, Kind, ParseError, Pulse, RemapError, Sin, emit,
                             format_waveform, output_nodes, parse, parse_value, parse_waveform,
                             remap_output_nodes)

SAMPLE = """\
* title line of a sample deck
V1 in 0 SIN(0 1 1G 0 0 90)
R1 a b 0.953316
C1 a 0 1f
M1 out in 0 0 nch W=1u L=0.1u
Xinv in out inverter
.model nch nmos level=1
.tran 1p 1n
.control
run
wrdata out.txt v(a) v(b)
.endc
.end
"""


@pytest.mark.parametrize("token, expected", [
    ("1k", 1e3),
    ("1000.0", 1e3),
    ("1K", 1e3),
    ("1f", 1e-15),
    ("0.891774f", 0.891774e-15),
    ("2PS", 2e-12),
    ("200ps", 200e-12),
    ("100MEG", 1e8),
    ("1G", 1e9),
    ("3m", 3e-3),
    ("3M", 3e-3),
    ("4u", 4e-6),
    ("5n", 5e-9),
    ("7p", 7e-12),
    ("1t", 1e12),
    ("1e-3", 1e-3),
    ("-4", -4.0),
    ("1mil", 25.4e-6),
])
def test_parse_value_suffixes(token, expected):
    assert parse_value(token) == pytest.approx(expected, rel=1e-15)


def test_suffix_decoding_is_exact():
    assert parse_value("1f") * 1e15 == pytest.approx(1.0, rel=2 ** -52)
    assert parse_value("1f") == 1e-15
    assert parse_value("1000.0") == parse_value("1k")


@pytest.mark.parametrize("bad", ["abc", "", "1..2", "k1"])
def test_parse_value_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_value(bad)


def test_parse_classifies_lines():
    nl = parse(SAMPLE)
    kinds = [(e.kind, e.name) for e in nl.elements]
    assert kinds == [
        (Kind.VOLTAGE_SOURCE, "V1"),
        (Kind.RESISTOR, "R1"),
        (Kind.CAPACITOR, "C1"),
        (Kind.MOSFET, "M1"),
        (Kind.OTHER, "Xinv"),
    ]
    assert nl.title == "* title line of a sample deck"
    assert nl.element("r1").nodes == ["a", "b"]
    assert nl.element("R1").value == 0.953316
    assert nl.element("C1").value == 1e-15
    assert nl.element("M1").nodes == ["out", "in", "0", "0"]
    assert len(nl.directives) == 7


def test_sin_source_spec():
    src = parse(SAMPLE).element("V1").source_spec
    assert src == Sin(vo=0, va=1, freq=1e9, td=0, theta=0, phase=90)


@pytest.mark.parametrize("text, expected", [
    ("PULSE(-1 1 2PS 200PS 200PS 500PS 1NS)", Pulse(-1, 1, 2e-12, 200e-12, 200e-12, 500e-12, 1e-9)),
    ("EXP(-4 -1 20PS 300PS 600PS 400PS)", Exp(-4, -1, 20e-12, 300e-12, 600e-12, 400e-12)),
    ("sin(0 1 100meg 0 0 90)", Sin(0, 1, 1e8, 0, 0, 90)),
    ("DC 1.5", Dc(1.5)),
    ("2.5", Dc(2.5)),
])
def test_parse_waveform(text, expected):
    assert parse_waveform(text) == expected
    assert parse_waveform(format_waveform(expected)) == expected


@pytest.mark.parametrize("text", ["SIN(0 1 0)", "EXP(0 1 0 0)", "PULSE(0 1 -1)", "SIN(0 1)"])
def test_invalid_waveforms(text):
    with pytest.raises(ValueError):
        parse_waveform(text)


def test_exp_tau2_defaults_to_tau1():
    assert Exp(0, 1, 0, 2e-12).tau2 == 2e-12


def test_round_trip_is_byte_identical():
    assert emit(parse(SAMPLE)) == SAMPLE


def test_round_trip_keeps_crlf_and_continuations():
    text = "deck\r\nR1 a b\r\n+ 10k\r\n* note\r\nC1 b 0 1p ; trailing\r\n.end\r\n"
    nl = parse(text)
    assert nl.element("R1").value == 1e4
    assert nl.element("C1").value == 1e-12
    assert emit(nl) == text


def test_empty_netlist_emits_two_lines():
    text = "empty\n.end\n"
    assert emit(parse(text)) == text
    assert emit(parse(text)).count("\n") == 2


def test_modified_element_uses_canonical_form():
    nl = parse("t\nC1 vin 0 1f\n.end\n")
    el = nl.element("C1")
    el.value = 79 * 0.891774e-15
    el.raw = None
    line = emit(nl).splitlines()[1]
    assert line == f"C1 vin 0 {79 * 0.891774e-15:.17g}"
    assert line.startswith("C1 vin 0 7.04501")
    assert float(line.split()[-1]) == 79 * 0.891774e-15


def test_synthesized_element_emitted():
    nl = parse("t\n.end\n")
    nl.items.insert(0, Element(Kind.RESISTOR, "Rnew", ["a", "b"], 2.0))
    assert emit(nl) == "t\nRnew a b 2\n.end\n"


@pytest.mark.parametrize("line, message", [
    ("R1 a 1k", "expected NAME N1 N2 VALUE"),
    ("R1 a b abc", "non-numeric"),
    ("C1 a 0 -1p", "must be positive"),
    ("R1 a b 0", "must be positive"),
])
def test_malformed_lines_report_line_number(line, message):
    with pytest.raises(ParseError, match=message) as info:
        parse(f"title\n* comment\n{line}\n")
    assert info.value.lineno == 3


def test_duplicate_names_rejected_case_insensitively():
    with pytest.raises(ParseError, match="duplicate"):
        parse("t\nR1 a b 1\nr1 b c 1\n")


def test_unknown_letters_become_other():
    nl = parse("t\nL1 a b 1n\nQ1 c b e npn\n")
    assert [e.kind for e in nl.elements] == [Kind.OTHER, Kind.OTHER]
    assert emit(nl) == "t\nL1 a b 1n\nQ1 c b e npn\n"


def test_control_block_is_opaque():
    nl = parse("t\n.control\nR1 a b 1\n.endc\nR1 a b 2\n")
    assert len(nl.elements) == 1
    assert nl.element("R1").value == 2


def test_output_nodes_and_remap():
    nl = parse(SAMPLE)
    assert output_nodes(nl) == ["a", "b"]
    out = remap_output_nodes(nl, {"b": "a"})
    assert "wrdata out.txt v(a) v(a)" in emit(out)
    assert emit(nl) == SAMPLE  # input untouched


def test_remap_paper_style_port_substitution():
    text = "t\n.control\nwrdata out.txt V(g1339_1)\n.endc\n.print tran v(other)\n"
    out = remap_output_nodes(parse(text), {"g1339_1": "netg1339_1_1"})
    assert emit(out) == text.replace("V(g1339_1)", "V(netg1339_1_1)")


def test_remap_identity_cases():
    nl = parse(SAMPLE)
    assert emit(remap_output_nodes(nl, {})) == SAMPLE
    assert emit(remap_output_nodes(nl, {"zzz": "a"})) == SAMPLE


def test_remap_differential_and_comments():
    text = "t\n* wrdata v(x)\n.print tran v(x, y)\n"
    out = emit(remap_output_nodes(parse(text), {"x": "p", "y": "q"}))
    assert out == "t\n* wrdata v(x)\n.print tran v(p, q)\n"


def test_remap_missing_mapping_is_an_error():
    with pytest.raises(RemapError, match="g7"):
        remap_output_nodes(parse("t\n.print tran v(g7)\n"), {}, deleted={"g7"})


def test_node_names_excludes_ground():
    assert parse(SAMPLE).node_names() == {"in", "a", "b", "out"}


# -- properties ------------------------------------------------------------------

_names = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True)
_values = st.sampled_from(["1", "1k", "0.953316", "2.5f", "1e-3", "100MEG", "10p"])
_spaces = st.sampled_from([" ", "  ", "\t"])


@st.composite
def netlists(draw):
    lines = [draw(st.sampled_from(["deck", "* generated", "title with words"]))]
    count = draw(st.integers(0, 12))
    for i in range(count):
        kind = draw(st.sampled_from(["R", "C", "*", ".", "M", "V"]))
        sp = draw(_spaces)
        a, b = draw(_names), draw(_names)
        if kind in "RC":
            lines.append(f"{kind}{i}{sp}{a}{sp}{b}{sp}{draw(_values)}")
        elif kind == "*":
            lines.append(f"* comment {a}")
        elif kind == ".":
            lines.append(f".print tran v({a})")
        elif kind == "M":
            lines.append(f"M{i} {a} {b} 0 0 nch")
        else:
            lines.append(f"V{i} {a} 0 SIN(0 1 1G 0 0 90)")
    lines.append(".end")
    eol = draw(st.sampled_from(["\n", "\r\n"]))
    return eol.join(lines) + eol


@given(netlists())
@settings(max_examples=150, deadline=None)
def test_round_trip_property(text):
    nl = parse(text)
    assert emit(nl) == text
    # element order follows source order
    names = [e.name for e in nl.elements]
    positions = [text.index("\n" + n) if ("\n" + n) in text else -1 for n in names]
    assert positions == sorted(positions)


@given(st.floats(min_value=1e-18, max_value=1e12, allow_nan=False))
def test_format_then_parse_is_exact(v):
    el = Element(Kind.CAPACITOR, "C1", ["a", "0"], v)
    assert parse("t\n" + el.canonical() + "\n").element("C1").value == v


@given(st.integers(-999, 999), st.sampled_from(["f", "p", "n", "u", "m", "k", "meg", "g"]))
def test_suffix_matches_exponent(mant, suffix):
    exp = {"f": -15, "p": -12, "n": -9, "u": -6, "m": -3, "k": 3, "meg": 6, "g": 9}[suffix]
    assert parse_value(f"{mant}{suffix}") == float(f"{mant}e{exp}")
    assert parse_value(f"{mant}{suffix.upper()}") == parse_value(f"{mant}{suffix}")
    assert not math.isnan(parse_value(f"{mant}{suffix}"))
