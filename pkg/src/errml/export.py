"""Explicit-state and DOT serialization of a labeled CTMC, plus the matching reader.

Explicit format, transitions file (``.tra``)::

    STATES <n> TRANSITIONS <m>
    <src> <dst> <rate>            one line per transition, 0-based

Rates carry 17 significant digits (the shortest digits that read back
to the same double, zero padded) with an unpadded exponent, e.g. ``1.0000000000000000e-3``. Labels file (``.lab``)::

    <index> <label> <label> ...   only states with at least one class
    #INIT <index>
"""

from __future__ import annotations

from decimal import Decimal
from pathlib import Path
from typing import Union

from .composer import OPERATIONAL, Ctmc
from .diagnostics import FileAccessError, FormatError

FORMATS = ("explicit", "dot")


def format_rate(rate: float) -> str:
    # shortest round-trip digits, zero-padded to 17 significant digits
    text = format(Decimal(repr(float(rate))), ".16e")
    mantissa, exp = text.split("e")
    return f"{mantissa}e{int(exp)}"


def transitions_text(ctmc: Ctmc) -> str:
    lines = [f"STATES {ctmc.n_states} TRANSITIONS {ctmc.n_transitions}"]
    lines += [f"{s} {d} {format_rate(r)}" for s, d, r in ctmc.transitions]
    return "\n".join(lines) + "\n"


def labels_text(ctmc: Ctmc) -> str:
    lines = []
    for i, tags in enumerate(ctmc.labels or ()):
        tags = sorted(t for t in tags if t != OPERATIONAL)
        if tags:
            lines.append(" ".join([str(i), *tags]))
    lines.append(f"#INIT {ctmc.initial}")
    return "\n".join(lines) + "\n"


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return '"' + escaped + '"'


def dot_text(ctmc: Ctmc) -> str:
    out = ["digraph ctmc {", "  rankdir=LR;"]
    for i in range(ctmc.n_states):
        tags = sorted(ctmc.labels[i]) if ctmc.labels else []
        text = f"{i} {ctmc.state_name(i)}\n{', '.join(tags) or OPERATIONAL}"
        shape = "doublecircle" if i == ctmc.initial else "circle"
        out.append(f"  s{i} [label={_quote(text)}, shape={shape}];")
    for s, d, r in ctmc.transitions:
        out.append(f"  s{s} -> s{d} [label={_quote(format_rate(r))}];")
    out.append("}")
    return "\n".join(out) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise FileAccessError(f"{path}: cannot write ({exc.strerror or exc})") from exc


def export(ctmc: Ctmc, fmt: str, prefix: Union[str, Path]) -> list:
    """Write ``ctmc`` next to ``prefix``; returns the written paths.

    ``explicit`` writes ``<prefix>.tra`` and ``<prefix>.lab``; ``dot``
    writes ``<prefix>.dot``.
    """
    prefix = Path(prefix)
    if fmt == "explicit":
        paths = [prefix.with_name(prefix.name + ".tra"), prefix.with_name(prefix.name + ".lab")]
        _write(paths[0], transitions_text(ctmc))
        _write(paths[1], labels_text(ctmc))
        return paths
    if fmt == "dot":
        path = prefix.with_name(prefix.name + ".dot")
        _write(path, dot_text(ctmc))
        return [path]
    raise ValueError(f"unknown export format {fmt!r}; expected one of {', '.join(FORMATS)}")


def _read(path: Path) -> list:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileAccessError(f"{path}: cannot read ({exc.strerror or exc})") from exc


def parse_explicit(tra: str, lab: str, source: str = "<explicit>") -> Ctmc:
    lines = [ln.split() for ln in tra.splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 4 or lines[0][0] != "STATES" or lines[0][2] != "TRANSITIONS":
        raise FormatError(f"{source}: expected header 'STATES <n> TRANSITIONS <m>'")
    try:
        n, m = int(lines[0][1]), int(lines[0][3])
        transitions = []
        for k, row in enumerate(lines[1:], start=2):
            if len(row) != 3:
                raise ValueError(f"line {k}: expected 'src dst rate'")
            s, d, r = int(row[0]), int(row[1]), float(row[2])
            if not (0 <= s < n and 0 <= d < n) or not r > 0 or s == d:
                raise ValueError(f"line {k}: bad transition {' '.join(row)}")
            transitions.append((s, d, r))
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from exc
    if len(transitions) != m:
        raise FormatError(f"{source}: header announces {m} transitions, found {len(transitions)}")

    labels = [set() for _ in range(n)]
    initial = None
    for k, ln in enumerate(lab.splitlines(), start=1):
        row = ln.split()
        if not row:
            continue
        try:
            if row[0] == "#INIT":
                initial = int(row[1])
                continue
            idx = int(row[0])
            labels[idx].update(row[1:])
        except (ValueError, IndexError) as exc:
            raise FormatError(f"{source}: labels line {k}: {ln!r}") from exc
    if initial is None or not 0 <= initial < n:
        raise FormatError(f"{source}: missing or invalid '#INIT <index>' line")
    classes = tuple(sorted(set().union(*labels))) if labels else ()
    return Ctmc(
        n_states=n,
        transitions=tuple(sorted(transitions)),
        initial=initial,
        labels=tuple(frozenset(x) for x in labels),
        classes=classes,
    )


def read_explicit(tra_path: Union[str, Path], lab_path: Union[str, Path, None] = None) -> Ctmc:
    """Load a chain written by :func:`export`; ``lab_path`` defaults to the sibling ``.lab``."""
    tra_path = Path(tra_path)
    lab_path = Path(lab_path) if lab_path is not None else tra_path.with_suffix(".lab")
    return parse_explicit("\n".join(_read(tra_path)), "\n".join(_read(lab_path)), str(tra_path))
