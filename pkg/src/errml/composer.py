"""Composition of component automata into a labeled CTMC.

Exploration starts from the configuration where every automaton is in its
initial state. Each tangible configuration enables the Poisson transitions
of its components; firing one triggers a *cascade*:

* a component entering a state that is the source of a ``fixed p`` out
  propagation emits it once, with probability ``p``;
* an emitted propagation reaches every routed receiver; a receiver with a
  matching ``in`` transition takes it, otherwise the propagation is masked;
* pending emissions are processed first-in first-out, receivers in
  lexicographic path order.

When the cascade is over, Guard_Out filters are evaluated. A satisfied
clause whose receiver reacts makes the configuration vanishing; the
reaction is applied at once and the cascade/guard loop repeats until a
tangible configuration is reached. Vanishing configurations never become
CTMC states.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .diagnostics import (
    CascadeDepthExceeded,
    GuardLivelock,
    InvalidModel,
    StateLimitExceeded,
    UnboundParameter,
)
from .instance import InstanceModel, SenderAtom, StateAtom
from .model import evaluate

DEFAULT_MAX_STATES = 1_000_000
DEFAULT_MAX_CASCADE_DEPTH = 32
BRANCH_TOLERANCE = 1e-12
OPERATIONAL = "operational"


@dataclass(frozen=True)
class Limits:
    max_states: int = DEFAULT_MAX_STATES
    max_cascade_depth: int = DEFAULT_MAX_CASCADE_DEPTH

    def __post_init__(self):
        if self.max_states < 1 or self.max_cascade_depth < 1:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class Firing:
    """One enabled timed transition of a tangible state and where it leads."""

    source: int
    component: str
    transition: str
    rate: float
    branches: tuple  # ((probability, target index), ...)


@dataclass(frozen=True)
class RawGraph:
    components: tuple
    local_states: tuple  # per component, tuple of state names
    states: tuple  # tuples of local state indices
    initial: int
    firings: tuple
    vanishing: tuple = ()  # vanishing configurations met (and folded) during exploration

    def global_state(self, index: int) -> tuple:
        return tuple(
            (path, names[s]) for path, names, s in zip(self.components, self.local_states, self.states[index])
        )


@dataclass(frozen=True)
class Ctmc:
    """Tangible states, positive rates and per-state class labels."""

    n_states: int
    transitions: tuple  # ((src, dst, rate), ...) sorted, no self-loops
    initial: int = 0
    states: Optional[tuple] = None  # GlobalState payloads; None for imported chains
    labels: Optional[tuple] = None  # per state frozenset of class names
    classes: tuple = ()  # declared class names
    stats: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 <= self.initial < max(self.n_states, 1):
            raise ValueError("initial state out of range")

    @property
    def n_transitions(self) -> int:
        return len(self.transitions)

    def generator(self) -> sp.csr_matrix:
        n = self.n_states
        if self.transitions:
            src, dst, rate = (np.array(x) for x in zip(*self.transitions))
        else:
            src = dst = np.zeros(0, dtype=int)
            rate = np.zeros(0)
        q = sp.coo_matrix((rate, (src.astype(int), dst.astype(int))), shape=(n, n)).tocsr()
        out = np.asarray(q.sum(axis=1)).ravel()
        return (q - sp.diags(out)).tocsr()

    def has_label(self, index: int, label: str) -> bool:
        if self.labels is None:
            return False
        tags = self.labels[index]
        return label in tags or (label == OPERATIONAL and not tags)

    def label_mask(self, label: str) -> np.ndarray:
        return np.array([self.has_label(i, label) for i in range(self.n_states)], dtype=bool)

    def known_labels(self) -> set:
        found = set(self.classes)
        for tags in self.labels or ():
            found |= set(tags)
        return found

    def state_name(self, index: int) -> str:
        if self.states is None:
            return str(index)
        return "(" + ", ".join(s for _, s in self.states[index]) + ")"


class _Engine:
    """Instance model compiled into index-based lookup tables."""

    def __init__(self, instance: InstanceModel, limits: Limits):
        unbound = instance.unbound_parameters()
        if unbound:
            raise UnboundParameter(f"unbound parameter(s): {', '.join(unbound)}")
        self.limits = limits
        self.paths = instance.paths
        self.index = {p: i for i, p in enumerate(self.paths)}
        self.names = tuple(a.states for a in instance.automata)
        sidx = [{s: k for k, s in enumerate(a.states)} for a in instance.automata]
        self.initial = tuple(sidx[c][a.initial] for c, a in enumerate(instance.automata))
        n = len(self.paths)
        self.timed = [[[] for _ in a.states] for a in instance.automata]
        self.fixed = [[[] for _ in a.states] for a in instance.automata]
        self.react = [[{} for _ in a.states] for a in instance.automata]
        for c, a in enumerate(instance.automata):
            for t in a.transitions:
                s, d = sidx[c][t.source], sidx[c][t.destination]
                occ = t.occurrence
                if t.kind == "event":
                    if occ is not None and occ.kind == "poisson":
                        self.timed[c][s].append((float(occ.value), "event", t.name, d, str(t)))
                elif t.kind == "out":
                    if occ is None:
                        continue  # observability only (guards)
                    if occ.kind == "poisson":
                        self.timed[c][s].append((float(occ.value), "out", t.name, d, str(t)))
                    else:
                        self.fixed[c][s].append((float(occ.value), t.name, d))
                else:
                    self.react[c][s].setdefault(t.name, d)
        self.routes = [{} for _ in range(n)]
        for r in instance.routing.routes:
            targets = self.routes[self.index[r.sender]].setdefault(r.propagation, [])
            rc = self.index[r.receiver]
            if rc not in targets:
                targets.append(rc)
        for table in self.routes:
            for targets in table.values():
                targets.sort(key=lambda i: self.paths[i])
        self.observable = {}
        for c, a in enumerate(instance.automata):
            for prop in a.outgoing:
                self.observable[(c, prop)] = frozenset(sidx[c][s] for s in a.observable_states(prop))
        self.guards = []
        for g in instance.guards:
            clauses = []
            for cl in g.clauses:
                clauses.append((cl.condition, cl.propagation, tuple(self.index[r] for r in cl.receivers)))
            self.guards.append(clauses)
        self.vanishing: dict = {}

    # -- cascade machinery ---------------------------------------------------

    def _enter(self, c: int, st: list, depth: int, queue: deque) -> None:
        for prob, prop, dst in self.fixed[c][st[c]]:
            queue.append((c, prob, prop, st[c], dst, depth))

    def _emit(self, c: int, prop: str, dst: int, st: list, queue: deque, depth: int) -> None:
        if dst != st[c]:
            st[c] = dst
            self._enter(c, st, depth, queue)
        for r in self.routes[c].get(prop, ()):
            nd = self.react[r][st[r]].get(prop)
            if nd is not None and nd != st[r]:
                if depth + 1 > self.limits.max_cascade_depth:
                    raise CascadeDepthExceeded(
                        f"propagation cascade deeper than {self.limits.max_cascade_depth} "
                        f"(cycle through {self.paths[c]} -> {self.paths[r]}?)"
                    )
                st[r] = nd
                self._enter(r, st, depth + 1, queue)

    def _holds(self, cond, st: list) -> bool:
        def truth(atom):
            if isinstance(atom, SenderAtom):
                return any(st[self.index[s]] in self.observable[(self.index[s], atom.propagation)] for s in atom.senders)
            raise TypeError(atom)

        return evaluate(cond, truth)

    def _guard_step(self, st: list, queue: deque) -> bool:
        for clauses in self.guards:
            for cond, prop, receivers in clauses:
                if not self._holds(cond, st):
                    continue
                before = tuple(st)
                changed = False
                for r in receivers:
                    nd = self.react[r][st[r]].get(prop)
                    if nd is not None and nd != st[r]:
                        st[r] = nd
                        self._enter(r, st, 0, queue)
                        changed = True
                if changed:
                    self.vanishing.setdefault(before, None)
                    return True
                break  # first satisfied clause decides; the rest is masked
        return False

    def settle(self, st: list, queue: deque) -> dict:
        """Resolve cascades and guards into a distribution over tangible states."""
        results: dict = {}
        stack = [(1.0, st, queue)]
        while stack:
            prob, st, queue = stack.pop()
            guard_rounds = 0
            while True:
                while queue:
                    c, p, prop, src, dst, depth = queue.popleft()
                    if st[c] != src or p <= 0.0:
                        continue
                    if p < 1.0:
                        est, eq = list(st), deque(queue)
                        self._emit(c, prop, dst, est, eq, depth)
                        stack.append((prob * p, est, eq))
                        prob *= 1.0 - p
                    else:
                        self._emit(c, prop, dst, st, queue, depth)
                if not self._guard_step(st, queue):
                    break
                guard_rounds += 1
                if guard_rounds > self.limits.max_cascade_depth:
                    raise GuardLivelock(
                        f"guard evaluation did not reach a fixpoint within {self.limits.max_cascade_depth} rounds"
                    )
            if prob > 0.0:
                key = tuple(st)
                results[key] = results.get(key, 0.0) + prob
        total = sum(results.values())
        if abs(total - 1.0) > BRANCH_TOLERANCE:
            raise AssertionError(f"branch probabilities sum to {total!r}")
        return results

    def firings(self, state: tuple):
        for c in range(len(state)):
            for rate, kind, name, dst, label in self.timed[c][state[c]]:
                if rate <= 0.0:
                    continue
                st, queue = list(state), deque()
                if kind == "event":
                    if dst != st[c]:
                        st[c] = dst
                        self._enter(c, st, 0, queue)
                else:
                    self._emit(c, name, dst, st, queue, 0)
                yield c, label, rate, self.settle(st, queue)


def explore(instance: InstanceModel, limits: Optional[Limits] = None) -> RawGraph:
    """Breadth-first exploration of the tangible state space."""
    limits = limits or Limits()
    eng = _Engine(instance, limits)
    init = eng.settle(list(eng.initial), deque())
    if len(init) != 1:
        raise InvalidModel("the initial configuration settles into a random state; not supported")
    start = next(iter(init))
    states = [start]
    index = {start: 0}
    firings = []
    frontier = deque([0])
    while frontier:
        i = frontier.popleft()
        for c, label, rate, dist in eng.firings(states[i]):
            branches = []
            for target, prob in dist.items():
                j = index.get(target)
                if j is None:
                    if len(states) >= limits.max_states:
                        raise StateLimitExceeded(f"more than {limits.max_states} tangible states")
                    j = index[target] = len(states)
                    states.append(target)
                    frontier.append(j)
                branches.append((prob, j))
            firings.append(Firing(i, eng.paths[c], label, rate, tuple(branches)))
    return RawGraph(
        components=eng.paths,
        local_states=eng.names,
        states=tuple(states),
        initial=0,
        firings=tuple(firings),
        vanishing=tuple(eng.vanishing),
    )


def fold_guards_and_vanishing(raw: RawGraph) -> Ctmc:
    """Turn branch-distributed firings into CTMC rates.

    Each branch contributes ``rate * probability``; parallel contributions
    between the same pair of states are summed and self-loops dropped.
    """
    acc: dict = {}
    dropped = 0.0
    for f in raw.firings:
        for prob, j in f.branches:
            if j == f.source:
                dropped += f.rate * prob
                continue
            key = (f.source, j)
            acc[key] = acc.get(key, 0.0) + f.rate * prob
    transitions = tuple((s, d, r) for (s, d), r in sorted(acc.items()) if r > 0.0)
    stats = {
        "tangible_states": len(raw.states),
        "transitions": len(transitions),
        "vanishing_folded": len(raw.vanishing),
        "timed_firings": len(raw.firings),
        "self_loop_rate_dropped": dropped,
    }
    return Ctmc(
        n_states=len(raw.states),
        transitions=transitions,
        initial=raw.initial,
        states=tuple(raw.global_state(i) for i in range(len(raw.states))),
        stats=stats,
    )


def label_states(ctmc: Ctmc, derived) -> Ctmc:
    """Attach derived class labels; unlabeled states are implicitly ``operational``."""
    derived = tuple(derived)
    labels = []
    for payload in ctmc.states:
        local = dict(payload)

        def truth(atom):
            if isinstance(atom, StateAtom):
                return local[atom.automaton] == atom.state
            raise TypeError(atom)

        labels.append(frozenset(c.name for c in derived if evaluate(c.condition, truth)))
    classes = tuple(dict.fromkeys(c.name for c in derived))
    return replace(ctmc, labels=tuple(labels), classes=classes)


def compose(instance: InstanceModel, limits: Optional[Limits] = None) -> Ctmc:
    raw = explore(instance, limits)
    return label_states(fold_guards_and_vanishing(raw), instance.derived)
