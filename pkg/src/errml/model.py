"""Declarative model: architecture, error model library and Boolean expressions.

Every list that may evolve across modeling iterations holds :class:`Tagged`
entries. An entry records the iteration that introduces it and whether it
adds or removes a declaration. Spans never take part in equality, so a
re-parsed model compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Generic, Iterator, Optional, TypeVar, Union

from .diagnostics import NO_SPAN, SourceSpan

T = TypeVar("T")

CATEGORIES = ("system", "process", "thread", "device", "processor")


def _span() -> SourceSpan:
    return field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Tagged(Generic[T]):
    item: T
    iteration: int = 1
    remove: bool = False


def plain(items) -> tuple:
    """Wrap declarations as iteration-1 additions."""
    return tuple(Tagged(x) for x in items)


def items(entries) -> tuple:
    """Payloads of a resolved tagged list."""
    if any(e.remove for e in entries):
        raise ValueError("list still contains removal entries; resolve iterations first")
    return tuple(e.item for e in entries)


# --------------------------------------------------------------------------
# Boolean expressions (guards and derived classes)


@dataclass(frozen=True)
class Atom:
    """``owner[name]``: port[propagation] in guards, subcomponent[state] in derived models."""

    owner: str
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Const:
    value: bool
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Not:
    operand: "BoolExpr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class And:
    operands: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Or:
    operands: tuple
    span: SourceSpan = _span()


BoolExpr = Union[Atom, Const, Not, And, Or]


def atoms(expr: BoolExpr) -> Iterator[Atom]:
    if isinstance(expr, Atom):
        yield expr
    elif isinstance(expr, Not):
        yield from atoms(expr.operand)
    elif isinstance(expr, (And, Or)):
        for op in expr.operands:
            yield from atoms(op)


def evaluate(expr, truth) -> bool:
    """Evaluate ``expr``; every leaf other than :class:`Const` is passed to ``truth``."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Not):
        return not evaluate(expr.operand, truth)
    if isinstance(expr, And):
        return all(evaluate(op, truth) for op in expr.operands)
    if isinstance(expr, Or):
        return any(evaluate(op, truth) for op in expr.operands)
    return bool(truth(expr))


def map_atoms(expr, fn):
    """Rebuild ``expr`` with every leaf atom replaced by ``fn(atom)``."""
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, Not):
        return Not(map_atoms(expr.operand, fn))
    if isinstance(expr, And):
        return And(tuple(map_atoms(op, fn) for op in expr.operands))
    if isinstance(expr, Or):
        return Or(tuple(map_atoms(op, fn) for op in expr.operands))
    return fn(expr)


# --------------------------------------------------------------------------
# Error model library


@dataclass(frozen=True)
class Occurrence:
    kind: str  # "poisson" | "fixed"
    value: Union[float, str]  # literal or parameter name

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.value, str)


@dataclass(frozen=True)
class StateDecl:
    name: str
    initial: bool = False
    span: SourceSpan = _span()


@dataclass(frozen=True)
class EventDecl:
    name: str
    occurrence: Optional[Occurrence] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class PropagationDecl:
    name: str
    direction: str  # "in" | "out" | "in_out"
    occurrence: Optional[Occurrence] = None
    span: SourceSpan = _span()

    @property
    def incoming(self) -> bool:
        return self.direction in ("in", "in_out")

    @property
    def outgoing(self) -> bool:
        return self.direction in ("out", "in_out")


Feature = Union[StateDecl, EventDecl, PropagationDecl]


@dataclass(frozen=True)
class ErrorModelType:
    name: str
    features: tuple = ()
    span: SourceSpan = _span()

    def _of(self, cls) -> tuple:
        return tuple(f for f in items(self.features) if isinstance(f, cls))

    @property
    def states(self) -> tuple:
        return self._of(StateDecl)

    @property
    def events(self) -> tuple:
        return self._of(EventDecl)

    @property
    def propagations(self) -> tuple:
        return self._of(PropagationDecl)

    @property
    def initial_states(self) -> tuple:
        return tuple(s.name for s in self.states if s.initial)

    def feature(self, name: str) -> Optional[Feature]:
        for f in items(self.features):
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class Trigger:
    kind: str  # "event" (bare identifier) | "in" | "out"
    name: str

    def __str__(self) -> str:
        return self.name if self.kind == "event" else f"{self.kind} {self.name}"


@dataclass(frozen=True)
class Transition:
    source: str
    trigger: Trigger
    destination: str
    span: SourceSpan = _span()

    def __str__(self) -> str:
        return f"{self.source}-[{self.trigger}]->{self.destination}"


@dataclass(frozen=True)
class ErrorModelImplementation:
    type_name: str
    impl_name: str
    transitions: tuple = ()
    span: SourceSpan = _span()

    @property
    def qualified_name(self) -> str:
        return f"{self.type_name}.{self.impl_name}"


@dataclass(frozen=True)
class ErrorModelLibrary:
    types: tuple = ()
    implementations: tuple = ()
    parameters: tuple = ()  # ((name, value), ...)

    def type(self, name: str) -> Optional[ErrorModelType]:
        return next((t for t in self.types if t.name == name), None)

    def implementation(self, type_name: str, impl_name: str) -> Optional[ErrorModelImplementation]:
        return next(
            (i for i in self.implementations if i.type_name == type_name and i.impl_name == impl_name),
            None,
        )

    @property
    def parameter_map(self) -> dict:
        return dict(self.parameters)

    @property
    def is_empty(self) -> bool:
        return not (self.types or self.implementations or self.parameters)


# --------------------------------------------------------------------------
# Architecture


@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # "in" | "out"
    kind: str = "data"  # "data" | "event"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Connection:
    name: str
    source: str  # "port" or "sub.port", relative to the declaring component
    destination: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ModelBinding:
    type_name: str
    impl_name: str
    span: SourceSpan = _span()

    @property
    def qualified_name(self) -> str:
        return f"{self.type_name}.{self.impl_name}"


@dataclass(frozen=True)
class GuardClause:
    propagation: str
    condition: BoolExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class GuardOut:
    applies_to: str
    clauses: tuple = ()  # GuardClause; the implicit default is `mask when others`
    span: SourceSpan = _span()


@dataclass(frozen=True)
class DerivedClass:
    name: str
    condition: BoolExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class DerivedErrorModel:
    classes: tuple = ()  # Tagged[DerivedClass]
    span: SourceSpan = _span()


AnnexItem = Union[ModelBinding, GuardOut, DerivedErrorModel]


@dataclass(frozen=True)
class Component:
    category: str
    name: str
    ports: tuple = ()
    subcomponents: tuple = ()
    connections: tuple = ()
    annex: Optional[tuple] = None  # None: no annex block at all
    span: SourceSpan = _span()

    def _annex(self, cls) -> tuple:
        return tuple(a for a in items(self.annex or ()) if isinstance(a, cls))

    @property
    def error_binding(self) -> Optional[ModelBinding]:
        found = self._annex(ModelBinding)
        return found[0] if found else None

    @property
    def guards(self) -> tuple:
        return self._annex(GuardOut)

    @property
    def derived_model(self) -> Optional[DerivedErrorModel]:
        found = self._annex(DerivedErrorModel)
        return found[0] if found else None

    def port(self, name: str) -> Optional[Port]:
        return next((p for p in items(self.ports) if p.name == name), None)

    def subcomponent(self, name: str) -> Optional["Component"]:
        return next((c for c in items(self.subcomponents) if c.name == name), None)


@dataclass(frozen=True)
class ArchitectureModel:
    root: Optional[Component] = None

    @property
    def is_empty(self) -> bool:
        return self.root is None

    def walk(self) -> Iterator[tuple]:
        """Yield ``(path, component)`` depth first on a resolved model."""
        if self.root is None:
            return

        def rec(path, comp):
            yield path, comp
            for sub in items(comp.subcomponents):
                yield from rec(f"{path}.{sub.name}", sub)

        yield from rec(self.root.name, self.root)
