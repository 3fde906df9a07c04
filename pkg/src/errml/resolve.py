"""Iteration deltas and structural validation of error model libraries."""

from __future__ import annotations

from dataclasses import fields, replace
from typing import Optional

from .diagnostics import Diagnostic, ForwardReference, RemoveWithoutAdd, error, warning
from .model import (
    ArchitectureModel,
    Component,
    DerivedErrorModel,
    ErrorModelImplementation,
    ErrorModelLibrary,
    ErrorModelType,
    EventDecl,
    PropagationDecl,
    StateDecl,
    Tagged,
    Transition,
)


class _Resolver:
    def __init__(self, iteration: int, strict: bool = True):
        if iteration < 1:
            raise ValueError("iteration must be >= 1")
        self.iteration = iteration
        self.strict = strict
        self.diagnostics: list[Diagnostic] = []

    def problem(self, exc: Exception) -> None:
        if self.strict:
            raise exc
        self.diagnostics.append(exc.diagnostic)

    def entries(self, entries: tuple, upto: Optional[int] = None, start: Optional[tuple] = None) -> tuple:
        """Fold deltas of iterations ``<= upto`` into a list of surviving entries."""
        upto = self.iteration if upto is None else upto
        current = list(start or ())
        levels = sorted({e.iteration for e in entries if e.iteration <= upto})
        if start is not None:
            levels = [k for k in levels if k == upto]
        for k in levels:
            for e in entries:
                if e.iteration != k or not e.remove:
                    continue
                match = next((n for n, c in enumerate(current) if c.item == e.item), None)
                if match is None:
                    span = getattr(e.item, "span", None)
                    self.problem(
                        RemoveWithoutAdd(f"iteration {k} removes {_describe(e.item)} which was never added", *_sp(span))
                    )
                    continue
                del current[match]
            current.extend(e for e in entries if e.iteration == k and not e.remove)
        return tuple(current)

    def node(self, obj):
        """Resolve every tagged list inside ``obj`` (recursively)."""
        if isinstance(obj, ErrorModelType):
            return replace(obj, features=self.entries(obj.features))
        if isinstance(obj, ErrorModelImplementation):
            return replace(obj, transitions=self.entries(obj.transitions))
        if isinstance(obj, DerivedErrorModel):
            return replace(obj, classes=self.entries(obj.classes))
        if isinstance(obj, Component):
            subs = tuple(Tagged(self.node(e.item), e.iteration) for e in self.entries(obj.subcomponents))
            annex = None
            if obj.annex is not None:
                annex = tuple(Tagged(self.node(e.item), e.iteration) for e in self.entries(obj.annex))
            return replace(
                obj,
                ports=self.entries(obj.ports),
                subcomponents=subs,
                connections=self.entries(obj.connections),
                annex=annex,
            )
        if isinstance(obj, ArchitectureModel):
            return ArchitectureModel(self.node(obj.root) if obj.root is not None else None)
        if isinstance(obj, ErrorModelLibrary):
            lib = replace(
                obj,
                types=tuple(self.node(t) for t in obj.types),
                implementations=tuple(self.node(i) for i in obj.implementations),
            )
            self.check_forward_references(obj, lib)
            return lib
        return obj

    def check_forward_references(self, raw: ErrorModelLibrary, lib: ErrorModelLibrary) -> None:
        for impl in lib.implementations:
            rtype, raw_type = lib.type(impl.type_name), raw.type(impl.type_name)
            if rtype is None:
                continue
            introduced = {e.item.name: e.iteration for e in rtype.features}
            later = {e.item.name for e in raw_type.features if not e.remove and e.iteration > self.iteration}
            for entry in impl.transitions:
                t = entry.item
                for name in (t.source, t.trigger.name, t.destination):
                    when = introduced.get(name)
                    if (when is not None and when > entry.iteration) or (when is None and name in later):
                        self.problem(
                            ForwardReference(
                                f"transition {t} (iteration {entry.iteration}) refers to '{name}' "
                                f"which is only introduced at a later iteration",
                                *_sp(t.span),
                            )
                        )


def _sp(span) -> tuple:
    return (span,) if span is not None else ()


def _describe(item) -> str:
    if isinstance(item, Transition):
        return f"transition {item}"
    name = getattr(item, "name", None)
    return f"'{name}'" if name else repr(item)


def apply_iterations(obj, iteration: int):
    """Return ``obj`` as it stands after ``iteration``.

    Works on a library, an architecture, or any single declaration holding
    tagged lists. Raises :class:`RemoveWithoutAdd` or
    :class:`ForwardReference` when the deltas are inconsistent.
    """
    return _Resolver(iteration).node(obj)


def apply_delta(resolved: tuple, entries: tuple, iteration: int) -> tuple:
    """Apply only the iteration-``iteration`` deltas of ``entries`` to an already resolved list."""
    return _Resolver(iteration).entries(entries, upto=iteration, start=resolved)


def max_iteration(*objs) -> int:
    """Highest iteration number declared anywhere in the given models."""
    best = 1

    def visit(x):
        nonlocal best
        if isinstance(x, Tagged):
            best = max(best, x.iteration)
            visit(x.item)
        elif isinstance(x, (tuple, list)):
            for y in x:
                visit(y)
        elif hasattr(x, "__dataclass_fields__"):
            for f in fields(x):
                visit(getattr(x, f.name))

    for obj in objs:
        visit(obj)
    return best


def iteration_levels(*objs) -> list:
    levels = {1}

    def visit(x):
        if isinstance(x, Tagged):
            levels.add(x.iteration)
            visit(x.item)
        elif isinstance(x, (tuple, list)):
            for y in x:
                visit(y)
        elif hasattr(x, "__dataclass_fields__"):
            for f in fields(x):
                visit(getattr(x, f.name))

    for obj in objs:
        visit(obj)
    return sorted(levels)


# --------------------------------------------------------------------------
# validation


def _check_occurrence(owner: str, decl, diags: list) -> None:
    occ = decl.occurrence
    if occ is None or occ.is_symbolic:
        return
    if occ.kind == "poisson" and not occ.value > 0:
        diags.append(error(f"Poisson rate of {owner}.{decl.name} must be > 0", decl.span, "Occurrence"))
    if occ.kind == "fixed" and not 0 < occ.value <= 1:
        diags.append(error(f"fixed probability of {owner}.{decl.name} must be in (0, 1]", decl.span, "Occurrence"))


def _check_type(t: ErrorModelType, diags: list) -> None:
    seen: set = set()
    for f in t.states + t.events + t.propagations:
        if f.name in seen:
            diags.append(error(f"duplicate name {f.name} in error model {t.name}", f.span, "DuplicateName"))
        seen.add(f.name)
    initials = [s for s in t.states if s.initial]
    if not initials:
        diags.append(error(f"error model {t.name} has no initial state", t.span, "InitialState"))
    elif len(initials) > 1:
        diags.append(error("multiple initial states", initials[1].span, "InitialState"))
    for ev in t.events:
        _check_occurrence(t.name, ev, diags)
        if ev.occurrence is not None and ev.occurrence.kind == "fixed":
            diags.append(
                error(f"error event {t.name}.{ev.name} needs a Poisson occurrence", ev.span, "Occurrence")
            )
    for prop in t.propagations:
        _check_occurrence(t.name, prop, diags)


def _check_impl(impl: ErrorModelImplementation, t: Optional[ErrorModelType], diags: list) -> None:
    if t is None:
        diags.append(error(f"unknown error model type {impl.type_name}", impl.span, "UnknownErrorModel"))
        return
    states = {s.name for s in t.states}
    events = {e.name for e in t.events}
    props = {p.name: p for p in t.propagations}
    for tr in (e.item for e in impl.transitions):
        for name in (tr.source, tr.destination):
            if name not in states:
                diags.append(error(f"unknown state {name}", tr.span, "UnknownName"))
        trig = tr.trigger
        prop = props.get(trig.name)
        if trig.kind == "event":
            if trig.name not in events and not (prop is not None and prop.incoming):
                diags.append(error(f"unknown event {trig.name}", tr.span, "UnknownName"))
        elif prop is None:
            diags.append(error(f"unknown propagation {trig.name}", tr.span, "UnknownName"))
        elif trig.kind == "in" and not prop.incoming:
            diags.append(error(f"propagation {trig.name} is not an in propagation", tr.span, "Direction"))
        elif trig.kind == "out" and not prop.outgoing:
            diags.append(error(f"propagation {trig.name} is not an out propagation", tr.span, "Direction"))


def check_resolved(lib: ErrorModelLibrary) -> list:
    """Checks on a single, already resolved snapshot."""
    diags: list = []
    for t in lib.types:
        _check_type(t, diags)
    for impl in lib.implementations:
        _check_impl(impl, lib.type(impl.type_name), diags)
    return diags


def validate_library(lib: ErrorModelLibrary) -> list:
    """Structural well-formedness of every iteration snapshot of ``lib``."""
    diags: list = []
    names = [t.name for t in lib.types]
    for t in lib.types:
        if names.count(t.name) > 1 and t is not lib.type(t.name):
            diags.append(error(f"duplicate error model type {t.name}", t.span, "DuplicateName"))
    qnames = [i.qualified_name for i in lib.implementations]
    for i in lib.implementations:
        if qnames.count(i.qualified_name) > 1 and i is not lib.implementation(i.type_name, i.impl_name):
            diags.append(error(f"duplicate implementation {i.qualified_name}", i.span, "DuplicateName"))
    for level in iteration_levels(lib):
        resolver = _Resolver(level, strict=False)
        resolved = resolver.node(lib)
        diags.extend(resolver.diagnostics)
        diags.extend(check_resolved(resolved))
    unique, seen = [], set()
    for d in diags:
        key = (d.severity, d.code, d.message, d.span)
        if key not in seen:
            seen.add(key)
            unique.append(d)
    return unique


def model_warnings(lib: ErrorModelLibrary) -> list:
    """Non-fatal remarks about a resolved library."""
    out = []
    for t in lib.types:
        for p in t.propagations:
            if p.outgoing and p.occurrence is not None and p.occurrence.kind == "poisson":
                out.append(
                    warning(
                        f"Poisson out propagation {t.name}.{p.name} fires as a timed transition; this pattern has no reference example",
                        p.span,
                        "UntestedTimedPropagation",
                    )
                )
    return out
