import math
import random
import re

import pytest
from conftest import chain

from errml.analyzer import MeasureSpec, measure
from errml.composer import Ctmc
from errml.diagnostics import FileAccessError, FormatError
from errml.export import dot_text, export, format_rate, labels_text, parse_explicit, read_explicit, transitions_text

RATE = re.compile(r"^-?\d\.\d{16}e-?\d+$")


def test_two_state_transitions_file(tmp_path):
    c = chain("two_state.errml")
    paths = export(c, "explicit", tmp_path / "two")
    assert [p.name for p in paths] == ["two.tra", "two.lab"]
    lines = paths[0].read_text().splitlines()
    assert lines == ["STATES 2 TRANSITIONS 2", "0 1 1.0000000000000000e-3", "1 0 1.0000000000000000e-1"]
    assert paths[1].read_text() == "1 Catastrophic Failed\n#INIT 0\n"


def test_empty_label_set_gives_only_init_line():
    bare = Ctmc(3, ((0, 1, 2.0), (1, 2, 3.0), (2, 0, 1.0)), initial=1)
    assert labels_text(bare) == "#INIT 1\n"
    empty = Ctmc(2, ((0, 1, 1.0),), labels=(frozenset(), frozenset()))
    assert labels_text(empty) == "#INIT 0\n"


@pytest.mark.parametrize("x", [1e-3, 0.1, 1.0, 2.5, 1 / 3, 1e-300, 5e-324, 1.7976931348623157e308, 123456.789])
def test_rate_text_has_17_digits_and_round_trips(x):
    text = format_rate(x)
    assert RATE.match(text), text
    assert float(text) == x


def test_random_rates_round_trip():
    rng = random.Random(7)
    for _ in range(2000):
        x = 10 ** rng.uniform(-12, 12)
        assert float(format_rate(x)) == x


def test_iteration2_round_trip_preserves_measures(tmp_path):
    c = chain("fig5_pipeline.errml", 2)
    tra, lab = export(c, "explicit", tmp_path / "it2")
    again = read_explicit(tra)
    assert again.transitions == c.transitions
    assert again.initial == c.initial
    assert [frozenset(t) for t in again.labels] == [frozenset(t) for t in c.labels]
    specs = [
        MeasureSpec("steady_state_availability"),
        MeasureSpec("mttf"),
        *(MeasureSpec(k, t) for k in ("point_availability", "reliability", "safety") for t in (10, 50, 100)),
    ]
    for spec in specs:
        a, b = measure(c, spec), measure(again, spec)
        assert a.value == b.value, spec
        assert a.iterations == b.iterations


def test_dot_output():
    c = chain("fig5_pipeline.errml", 1)
    text = dot_text(c)
    assert text.startswith("digraph ctmc {") and text.rstrip().endswith("}")
    assert text.count(" -> ") == c.n_transitions
    assert f"s{c.initial} [label=" in text and "doublecircle" in text
    assert '"0 (Error_Free, Error_Free, Error_Free)\\noperational"' in text
    assert "Catastrophic, Failed" in text
    assert f'[label="{format_rate(1e-3)}"]' in text


def test_dot_file(tmp_path):
    (path,) = export(chain("two_state.errml"), "dot", tmp_path / "g")
    assert path.name == "g.dot" and path.read_text().startswith("digraph")


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        export(chain("two_state.errml"), "csv", tmp_path / "x")


@pytest.mark.parametrize(
    "tra,lab",
    [
        ("", "#INIT 0"),
        ("STATES 2 TRANS 1\n0 1 1.0", "#INIT 0"),
        ("STATES 2 TRANSITIONS 2\n0 1 1.0", "#INIT 0"),
        ("STATES 2 TRANSITIONS 1\n0 2 1.0", "#INIT 0"),
        ("STATES 2 TRANSITIONS 1\n0 1 -1.0", "#INIT 0"),
        ("STATES 2 TRANSITIONS 1\n0 0 1.0", "#INIT 0"),
        ("STATES 2 TRANSITIONS 1\n0 1 abc", "#INIT 0"),
        ("STATES 2 TRANSITIONS 1\n0 1 1.0", ""),
        ("STATES 2 TRANSITIONS 1\n0 1 1.0", "#INIT 5"),
        ("STATES 2 TRANSITIONS 1\n0 1 1.0", "x Failed\n#INIT 0"),
    ],
)
def test_malformed_explicit_input(tra, lab):
    with pytest.raises(FormatError):
        parse_explicit(tra, lab)


def test_io_errors_carry_the_path(tmp_path):
    missing = tmp_path / "nope.tra"
    with pytest.raises(FileAccessError, match="nope.tra"):
        read_explicit(missing)
    with pytest.raises(FileAccessError, match="no_dir"):
        export(chain("two_state.errml"), "explicit", tmp_path / "no_dir" / "x")


def test_transitions_text_is_deterministic():
    a = transitions_text(chain("fig5_pipeline.errml", 3))
    b = transitions_text(chain("fig5_pipeline.errml", 3))
    assert a == b
    header, *body = a.splitlines()
    assert header == f"STATES 11 TRANSITIONS {len(body)}"
    assert math.fsum(float(ln.split()[2]) for ln in body) > 0
