"""Binding error models to the architecture and routing propagations.

The instance model is the input of both the composer and the simulator:
one automaton per component carrying an error model (after black-box
abstraction), a routing table derived from port connections, resolved
Guard_Out filters and derived state classes.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .diagnostics import (
    DerivedAtomUnresolvable,
    NO_SPAN,
    Diagnostic,
    GuardAtomUnresolvable,
    InvalidModel,
    NoErrorModels,
    SourceSpan,
    UnknownErrorModel,
    info,
    warning,
)
from .model import (
    ArchitectureModel,
    Atom,
    Component,
    ErrorModelLibrary,
    Occurrence,
    items,
    map_atoms,
)
from .resolve import apply_iterations, check_resolved, max_iteration, model_warnings


@dataclass(frozen=True)
class LocalTransition:
    source: str
    kind: str  # "event" | "in" | "out"
    name: str
    destination: str
    occurrence: Optional[Occurrence] = None  # event or out-propagation occurrence
    span: SourceSpan = field(default=NO_SPAN, compare=False, repr=False)

    def __str__(self) -> str:
        trig = self.name if self.kind == "event" else f"{self.kind} {self.name}"
        return f"{self.source}-[{trig}]->{self.destination}"


@dataclass(frozen=True)
class Automaton:
    path: str
    model: str
    states: tuple
    initial: str
    transitions: tuple
    incoming: frozenset  # propagation names accepted from outside
    outgoing: frozenset  # propagation names that may be sent

    def observable_states(self, propagation: str) -> frozenset:
        """States with a ``s-[out P]->s`` self-loop, i.e. where P is visible to guards."""
        return frozenset(
            t.source
            for t in self.transitions
            if t.kind == "out" and t.name == propagation and t.source == t.destination
        )


@dataclass(frozen=True, order=True)
class Route:
    sender: str
    propagation: str
    receiver: str
    source_port: str
    destination_port: str


@dataclass(frozen=True)
class RoutingTable:
    routes: tuple = ()
    inactive: tuple = ()  # (sender, propagation) pairs with no receiver

    def receivers(self, sender: str, propagation: str) -> tuple:
        return tuple(sorted({r.receiver for r in self.routes if r.sender == sender and r.propagation == propagation}))

    def as_dict(self) -> dict:
        out: dict = defaultdict(set)
        for r in self.routes:
            out[(r.sender, r.propagation)].add((r.receiver, r.propagation))
        for key in self.inactive:
            out.setdefault(key, set())
        return dict(out)


@dataclass(frozen=True)
class SenderAtom:
    """Guard atom: true when any sender sits in a state exposing ``propagation``."""

    senders: tuple
    propagation: str


@dataclass(frozen=True)
class StateAtom:
    automaton: str
    state: str


@dataclass(frozen=True)
class ResolvedClause:
    propagation: str
    condition: object
    receivers: tuple  # automaton paths, sorted


@dataclass(frozen=True)
class ResolvedGuard:
    owner: str
    applies_to: str
    clauses: tuple


@dataclass(frozen=True)
class ResolvedClass:
    name: str
    owner: str
    condition: object


@dataclass(frozen=True)
class InstanceModel:
    automata: tuple
    routing: RoutingTable
    guards: tuple = ()
    derived: tuple = ()
    iteration: int = 1
    parameters: tuple = ()
    diagnostics: tuple = field(default=(), compare=False)

    @property
    def paths(self) -> tuple:
        return tuple(a.path for a in self.automata)

    def automaton(self, path: str) -> Automaton:
        for a in self.automata:
            if a.path == path:
                return a
        raise KeyError(path)

    @property
    def class_names(self) -> tuple:
        return tuple(dict.fromkeys(c.name for c in self.derived))

    def unbound_parameters(self) -> tuple:
        names = []
        for a in self.automata:
            for t in a.transitions:
                if t.occurrence is not None and t.occurrence.is_symbolic:
                    names.append(t.occurrence.value)
        return tuple(dict.fromkeys(names))


# --------------------------------------------------------------------------


def _bind_value(occ: Optional[Occurrence], params: Mapping, where: str) -> Optional[Occurrence]:
    if occ is None or not occ.is_symbolic or occ.value not in params:
        return occ
    value = float(params[occ.value])
    if occ.kind == "poisson" and value < 0:
        raise InvalidModel(f"rate {occ.value} = {value} of {where} must be >= 0")
    if occ.kind == "fixed" and not 0 <= value <= 1:
        raise InvalidModel(f"probability {occ.value} = {value} of {where} must be in [0, 1]")
    return Occurrence(occ.kind, value)


class _Builder:
    def __init__(self, arch: ArchitectureModel, lib: ErrorModelLibrary, params: Mapping):
        self.arch = arch
        self.lib = lib
        self.params = params
        self.diags: list[Diagnostic] = []
        self.components: dict = {}  # path -> Component (not inside a black box)
        self.bound: dict = {}  # path -> Component carrying the automaton
        self.edges: dict = defaultdict(list)  # (path, port) -> [(path, port)]
        self.redges: dict = defaultdict(list)
        self.automata: dict = {}

    # -- architecture ----------------------------------------------------

    def walk(self) -> None:
        def rec(path: str, comp: Component, abstracted_by: Optional[str]):
            names = [s.name for s in items(comp.subcomponents)]
            for s in items(comp.subcomponents):
                if names.count(s.name) > 1:
                    raise InvalidModel(f"duplicate subcomponent name {s.name} in {path}", s.span)
            pnames = [p.name for p in items(comp.ports)]
            for p in items(comp.ports):
                if pnames.count(p.name) > 1:
                    raise InvalidModel(f"duplicate port name {p.name} in {path}", p.span)
            if abstracted_by is None:
                self.components[path] = comp
                if comp.error_binding is not None:
                    self.bound[path] = comp
                    if len(comp._annex(type(comp.error_binding))) > 1:
                        raise InvalidModel(f"component {path} binds more than one error model", comp.span)
                    hidden = [
                        f"{path}.{p}" for p, c in _descendants(comp) if c.error_binding is not None
                    ]
                    if hidden:
                        self.diags.append(
                            info(
                                f"error model of {path} abstracts its subcomponents as a black box; "
                                f"ignoring bindings of {', '.join(hidden)}",
                                comp.span,
                                "BlackBox",
                            )
                        )
                    abstracted_by = path
            for s in items(comp.subcomponents):
                rec(f"{path}.{s.name}", s, abstracted_by)

        rec(self.arch.root.name, self.arch.root, None)

    def connect(self) -> None:
        for path, comp in self.components.items():
            if path in self.bound:
                continue  # wiring inside a component with its own error model is abstracted away
            for conn in items(comp.connections):
                src = self.endpoint(path, comp, conn.source, conn, source=True)
                dst = self.endpoint(path, comp, conn.destination, conn, source=False)
                self.edges[src].append(dst)
                self.redges[dst].append(src)

    def endpoint(self, path: str, comp: Component, qid: str, conn, source: bool) -> tuple:
        parts = qid.split(".")
        if len(parts) == 1:
            owner_path, owner, port_name, own = path, comp, parts[0], True
        elif len(parts) == 2:
            owner = comp.subcomponent(parts[0])
            if owner is None:
                raise InvalidModel(f"connection {conn.name}: unknown subcomponent {parts[0]} in {path}", conn.span)
            owner_path, port_name, own = f"{path}.{parts[0]}", parts[1], False
        else:
            raise InvalidModel(f"connection {conn.name}: endpoint {qid} must be 'port' or 'sub.port'", conn.span)
        port = owner.port(port_name)
        if port is None:
            raise InvalidModel(f"connection {conn.name}: unknown port {qid}", conn.span)
        # sibling wiring is out -> in; a component's own ports relay the other way
        wanted = ("in" if own else "out") if source else ("out" if own else "in")
        if port.direction != wanted:
            role = "source" if source else "destination"
            raise InvalidModel(
                f"connection {conn.name}: {role} {qid} must be an {wanted} port", conn.span
            )
        return owner_path, port_name

    def reach(self, start: tuple, edges: dict) -> list:
        """Automaton-owned ports reachable from ``start``, relaying through unbound components."""
        seen, found = {start}, []
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for nxt in edges.get(node, ()):
                if nxt in seen:
                    continue
                seen.add(nxt)
                if nxt[0] in self.automata:
                    found.append(nxt)
                else:
                    queue.append(nxt)
        return found

    # -- error models ------------------------------------------------------

    def build_automaton(self, path: str, comp: Component):
        binding = comp.error_binding
        etype = self.lib.type(binding.type_name)
        impl = self.lib.implementation(binding.type_name, binding.impl_name)
        if etype is None or impl is None:
            raise UnknownErrorModel(f"{path}: unknown error model {binding.qualified_name}", binding.span)
        events = {e.name: e for e in etype.events}
        props = {p.name: p for p in etype.propagations}
        transitions = []
        for tr in items(impl.transitions):
            kind, name = tr.trigger.kind, tr.trigger.name
            occ = None
            if kind == "event" and name not in events:
                kind = "in"  # bare trigger naming an in propagation
            if kind == "event":
                occ = events[name].occurrence
            elif kind == "out":
                occ = props[name].occurrence
            occ = _bind_value(occ, self.params, f"{path} {tr}")
            transitions.append(LocalTransition(tr.source, kind, name, tr.destination, occ, tr.span))
            if kind == "event" and occ is None:
                self.diags.append(warning(f"{path}: event {name} has no Occurrence and never fires", tr.span))
        return Automaton(
            path=path,
            model=binding.qualified_name,
            states=tuple(s.name for s in etype.states),
            initial=etype.initial_states[0],
            transitions=tuple(transitions),
            incoming=frozenset(p.name for p in props.values() if p.incoming),
            outgoing=frozenset(p.name for p in props.values() if p.outgoing),
        )

    def routes(self) -> RoutingTable:
        routes, inactive = set(), []
        for path in sorted(self.automata):
            auto = self.automata[path]
            comp = self.bound[path]
            out_ports = [p.name for p in items(comp.ports) if p.direction == "out"]
            for prop in sorted(auto.outgoing):
                found = False
                for port in out_ports:
                    for rpath, rport in self.reach((path, port), self.edges):
                        if rpath != path and prop in self.automata[rpath].incoming:
                            routes.add(Route(path, prop, rpath, port, rport))
                            found = True
                if not found:
                    inactive.append((path, prop))
                    self.diags.append(info(f"out propagation {path}.{prop} is inactive (no receiver)", comp.span))
        return RoutingTable(tuple(sorted(routes)), tuple(inactive))

    def guards(self, routing: RoutingTable) -> tuple:
        out = []
        for path in sorted(self.components):
            comp = self.components[path]
            for g in comp.guards:
                port = comp.port(g.applies_to)
                if port is None or port.direction != "out":
                    raise InvalidModel(f"{path}: Guard_Out applies to {g.applies_to}, which is not an out port", g.span)
                clauses = []
                for clause in g.clauses:
                    cond = map_atoms(clause.condition, lambda a, p=path, c=comp: self.guard_atom(p, c, a))
                    receivers = sorted(
                        {
                            rpath
                            for rpath, _ in self.reach((path, g.applies_to), self.edges)
                            if rpath != path and clause.propagation in self.automata[rpath].incoming
                        }
                    )
                    if path in self.automata and clause.propagation not in self.automata[path].outgoing:
                        self.diags.append(
                            warning(f"{path}: guard emits {clause.propagation}, which its error model does not declare out", clause.span)
                        )
                    if not receivers:
                        self.diags.append(info(f"{path}: guard propagation {clause.propagation} reaches no receiver", clause.span))
                    clauses.append(ResolvedClause(clause.propagation, cond, tuple(receivers)))
                out.append(ResolvedGuard(path, g.applies_to, tuple(clauses)))
        return tuple(out)

    def guard_atom(self, path: str, comp: Component, atom: Atom) -> SenderAtom:
        port = comp.port(atom.owner)
        if port is None or port.direction != "in":
            raise GuardAtomUnresolvable(f"{path}: guard atom {atom.owner}[{atom.name}]: {atom.owner} is not an in port", atom.span)
        senders = sorted(
            {spath for spath, _ in self.reach((path, atom.owner), self.redges) if atom.name in self.automata[spath].outgoing}
        )
        if not senders:
            raise GuardAtomUnresolvable(
                f"{path}: guard atom {atom.owner}[{atom.name}]: no component connected to {atom.owner} declares out propagation {atom.name}",
                atom.span,
            )
        return SenderAtom(tuple(senders), atom.name)

    def derived(self) -> tuple:
        out = []
        for path in sorted(self.components):
            dm = self.components[path].derived_model
            if dm is None:
                continue
            for cls in items(dm.classes):
                cond = map_atoms(cls.condition, lambda a, p=path: self.state_atom(p, a))
                out.append(ResolvedClass(cls.name, path, cond))
        return tuple(out)

    def state_atom(self, path: str, atom: Atom) -> StateAtom:
        target = f"{path}.{atom.owner}"
        auto = self.automata.get(target)
        if auto is None:
            raise DerivedAtomUnresolvable(
                f"{path}: derived atom {atom.owner}[{atom.name}]: {atom.owner} is not a subcomponent with an active error model",
                atom.span,
            )
        if atom.name not in auto.states:
            raise DerivedAtomUnresolvable(
                f"{path}: derived atom {atom.owner}[{atom.name}]: {auto.model} has no state {atom.name}", atom.span
            )
        return StateAtom(target, atom.name)


def _descendants(comp: Component, prefix: str = ""):
    for s in items(comp.subcomponents):
        rel = f"{prefix}{s.name}"
        yield rel, s
        yield from _descendants(s, rel + ".")


def instantiate(
    arch: ArchitectureModel,
    lib: ErrorModelLibrary,
    iteration: Optional[int] = None,
    params: Optional[Mapping] = None,
) -> InstanceModel:
    """Resolve ``arch`` and ``lib`` at ``iteration`` and bind error models.

    ``params`` override the library's ``parameters`` block. Parameters that
    stay unbound are kept symbolic; exploration refuses them later.
    """
    if iteration is None:
        iteration = max_iteration(arch, lib)
    rlib = apply_iterations(lib, iteration)
    errors = [d for d in check_resolved(rlib) if d.is_error]
    if errors:
        raise InvalidModel(f"error model library is invalid: {errors[0].message}", errors[0].span)
    if arch.root is None:
        raise NoErrorModels("the model declares no architecture, so no component carries an error model")
    rarch = apply_iterations(arch, iteration)
    bound_params = dict(rlib.parameters)
    bound_params.update(params or {})

    b = _Builder(rarch, rlib, bound_params)
    b.walk()
    if not b.bound:
        raise NoErrorModels("no component carries an error model", rarch.root.span)
    for path in sorted(b.bound):
        b.automata[path] = b.build_automaton(path, b.bound[path])
    b.connect()
    routing = b.routes()
    guards = b.guards(routing)
    derived = b.derived()

    fed = {(r.receiver, r.propagation) for r in routing.routes}
    fed |= {(rec, c.propagation) for g in guards for c in g.clauses for rec in c.receivers}
    for path, auto in sorted(b.automata.items()):
        for t in auto.transitions:
            if t.kind == "in" and (path, t.name) not in fed:
                b.diags.append(
                    warning(f"{path}: transition {t} can never fire (no sender routes {t.name} here)", t.span, "Unreachable")
                )
    b.diags.extend(model_warnings(rlib))
    return InstanceModel(
        automata=tuple(b.automata[p] for p in sorted(b.automata)),
        routing=routing,
        guards=guards,
        derived=derived,
        iteration=iteration,
        parameters=tuple(sorted(bound_params.items())),
        diagnostics=tuple(dict.fromkeys(b.diags)),
    )


def routing_table(instance: InstanceModel) -> RoutingTable:
    return instance.routing
