"""Canonical pretty printer; ``parse_model(pretty_print(a, l))`` rebuilds ``(a, l)``."""

from __future__ import annotations

from itertools import groupby
from typing import Callable, Optional

from .model import (
    And,
    ArchitectureModel,
    Atom,
    Component,
    Connection,
    Const,
    DerivedClass,
    DerivedErrorModel,
    ErrorModelImplementation,
    ErrorModelLibrary,
    ErrorModelType,
    EventDecl,
    GuardOut,
    ModelBinding,
    Not,
    Occurrence,
    Or,
    Port,
    PropagationDecl,
    StateDecl,
    Transition,
)

INDENT = "  "


def format_number(x: float) -> str:
    return repr(float(x))


def format_expr(expr, parent: Optional[type] = None) -> str:
    if isinstance(expr, Atom):
        return f"{expr.owner}[{expr.name}]"
    if isinstance(expr, Const):
        return "true" if expr.value else "false"
    if isinstance(expr, Not):
        inner = format_expr(expr.operand, Not)
        return f"not {inner}"
    if isinstance(expr, (And, Or)):
        word = " and " if isinstance(expr, And) else " or "
        text = word.join(format_expr(op, type(expr)) for op in expr.operands)
        # And inside Or is the only nesting that needs no parentheses
        if parent is None or (parent is Or and isinstance(expr, And)):
            return text
        return f"({text})"
    raise TypeError(f"not a boolean expression: {expr!r}")


def _occurrence(occ: Optional[Occurrence]) -> str:
    if occ is None:
        return ""
    kind = "Poisson" if occ.kind == "poisson" else "fixed"
    value = occ.value if isinstance(occ.value, str) else format_number(occ.value)
    return f" {{Occurrence => {kind} {value}}}"


def _feature(f) -> list:
    if isinstance(f, StateDecl):
        return [f"{f.name}: {'initial ' if f.initial else ''}error state;"]
    if isinstance(f, EventDecl):
        return [f"{f.name}: error event{_occurrence(f.occurrence)};"]
    if isinstance(f, PropagationDecl):
        direction = "in out" if f.direction == "in_out" else f.direction
        return [f"{f.name}: {direction} error propagation{_occurrence(f.occurrence)};"]
    raise TypeError(f)


def _transition(t: Transition) -> list:
    return [f"{t};"]


def _tagged(entries, render: Callable[[object], list]) -> list:
    """Render a tagged list, grouping consecutive entries into iteration blocks."""
    lines: list = []
    for iteration, run in groupby(entries, key=lambda e: e.iteration):
        run = list(run)
        if iteration == 1 and not any(e.remove for e in run):
            for e in run:
                lines.extend(render(e.item))
            continue
        lines.append(f"iteration {iteration} {{")
        for remove, ops in groupby(run, key=lambda e: e.remove):
            lines.append(f"{INDENT}{'remove' if remove else 'add'} {{")
            for e in ops:
                lines.extend(INDENT * 2 + line for line in render(e.item))
            lines.append(f"{INDENT}}}")
        lines.append("}")
    return lines


def _indent(lines: list) -> list:
    return [INDENT + line for line in lines]


def _error_type(t: ErrorModelType) -> list:
    return [f"error model {t.name}", "features", *_indent(_tagged(t.features, _feature)), f"end {t.name};"]


def _error_impl(i: ErrorModelImplementation) -> list:
    name = i.qualified_name
    return [
        f"error model implementation {name}",
        "transitions",
        *_indent(_tagged(i.transitions, _transition)),
        f"end {name};",
    ]


def _port(p: Port) -> list:
    return [f"{p.name}: {p.direction} {p.kind} port;"]


def _connection(c: Connection) -> list:
    return [f"{c.name}: port {c.source} -> {c.destination};"]


def _guard(g: GuardOut) -> list:
    lines = ["Guard_Out =>"]
    for clause in g.clauses:
        lines.append(f"{INDENT}{clause.propagation} when {format_expr(clause.condition)}")
    lines.append(f"{INDENT}mask when others")
    lines.append(f"{INDENT}applies to {g.applies_to};")
    return lines


def _derived_class(d: DerivedClass) -> list:
    return [f"{d.name} when {format_expr(d.condition)};"]


def _annex_item(a) -> list:
    if isinstance(a, ModelBinding):
        return [f"model => {a.qualified_name};"]
    if isinstance(a, GuardOut):
        return _guard(a)
    if isinstance(a, DerivedErrorModel):
        return ["derived {", *_indent(_tagged(a.classes, _derived_class)), "}"]
    raise TypeError(a)


def _component(c: Component) -> list:
    lines = [f"{c.category} {c.name}"]
    if c.ports:
        lines += ["features", *_indent(_tagged(c.ports, _port))]
    if c.subcomponents:
        lines += ["subcomponents", *_indent(_tagged(c.subcomponents, _component))]
    if c.connections:
        lines += ["connections", *_indent(_tagged(c.connections, _connection))]
    if c.annex is not None:
        lines += ["annex error_model {**", *_indent(_tagged(c.annex, _annex_item)), "**};"]
    lines.append(f"end {c.name};")
    return lines


def pretty_print(architecture: Optional[ArchitectureModel] = None, library: Optional[ErrorModelLibrary] = None) -> str:
    """Render a model in canonical form.

    Sections come out in a fixed order: parameters, error model types,
    implementations, then the root component.
    """
    blocks: list = []
    if library is not None:
        if library.parameters:
            body = [f"{INDENT}{name} = {format_number(v)};" for name, v in library.parameters]
            blocks.append(["parameters {", *body, "}"])
        blocks.extend(_error_type(t) for t in library.types)
        blocks.extend(_error_impl(i) for i in library.implementations)
    if architecture is not None and architecture.root is not None:
        blocks.append(_component(architecture.root))
    if not blocks:
        return ""
    return "\n\n".join("\n".join(b) for b in blocks) + "\n"
