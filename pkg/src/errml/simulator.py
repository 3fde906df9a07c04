"""Monte Carlo simulation of the instance model's operational semantics.

Every replication races exponential clocks for the enabled timed
transitions. After a jump, each fixed-probability emission is an
independent Bernoulli draw, and the cascade and the level-triggered guards
are then processed in the same order the composer uses. No state space is
built: the per-configuration clock tables are cached lazily, and the
cascade itself is re-run on every jump.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .analyzer import MeasureSpec
from .composer import Limits
from .diagnostics import CascadeDepthExceeded, GuardLivelock, LabelMissing, UnboundParameter
from .instance import InstanceModel, SenderAtom, StateAtom
from .model import evaluate, map_atoms
from .rng import SplitMix64, replication_seed

Z95 = 1.959963984540054
SIMULATED = ("point_availability", "reliability", "safety", "steady_state_availability")


@dataclass(frozen=True)
class SimConfig:
    replications: int
    horizon: Optional[float] = None  # defaults to the measure's time
    seed: int = 0
    measure: MeasureSpec = MeasureSpec("point_availability", 0.0)

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.horizon is not None and self.horizon < 0:
            raise ValueError("horizon must be >= 0")

    @property
    def time(self) -> float:
        t = self.measure.time if self.measure.time is not None else self.horizon
        if t is None:
            raise ValueError("no evaluation time: set the measure time or the horizon")
        return t


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width_95: float
    replications: int
    kind: str = "point_availability"
    time: Optional[float] = None
    seed: int = 0
    failure_class: Optional[str] = None

    def to_dict(self) -> dict:
        out = {"measure": self.kind}
        if self.time is not None:
            out["time"] = self.time
        out["value"] = self.mean
        out["half_width_95"] = self.half_width_95
        out["replications"] = self.replications
        out["seed"] = self.seed
        if self.failure_class is not None:
            out["class"] = self.failure_class
        return out


class _Machine:
    """Index-based view of an instance model, independent of the composer's tables."""

    def __init__(self, instance: InstanceModel, limits: Limits):
        missing = instance.unbound_parameters()
        if missing:
            raise UnboundParameter(f"unbound parameter(s): {', '.join(missing)}")
        self.limits = limits
        self.paths = instance.paths
        pos = {p: i for i, p in enumerate(self.paths)}
        self.state_names = [a.states for a in instance.automata]
        sid = [{s: k for k, s in enumerate(a.states)} for a in instance.automata]

        # clocks[c][s]: (rate, is_out, name, dst); on_entry[c][s]: (p, name, dst); accept[c][s]: {prop: dst}
        self.clocks = [[[] for _ in a.states] for a in instance.automata]
        self.on_entry = [[[] for _ in a.states] for a in instance.automata]
        self.accept = [[{} for _ in a.states] for a in instance.automata]
        self.visible = [[set() for _ in a.states] for a in instance.automata]
        for c, auto in enumerate(instance.automata):
            for tr in auto.transitions:
                s, d = sid[c][tr.source], sid[c][tr.destination]
                occ = tr.occurrence
                if tr.kind == "out" and s == d:
                    self.visible[c][s].add(tr.name)
                if tr.kind == "in":
                    self.accept[c][s].setdefault(tr.name, d)
                elif occ is None:
                    continue
                elif occ.kind == "poisson":
                    if float(occ.value) > 0.0:
                        self.clocks[c][s].append((float(occ.value), tr.kind == "out", tr.name, d))
                elif tr.kind == "out":
                    self.on_entry[c][s].append((float(occ.value), tr.name, d))

        self.fanout = [{} for _ in self.paths]
        for route in instance.routing.routes:
            lst = self.fanout[pos[route.sender]].setdefault(route.propagation, [])
            if pos[route.receiver] not in lst:
                lst.append(pos[route.receiver])
        for table in self.fanout:
            for lst in table.values():
                lst.sort(key=lambda i: self.paths[i])

        # leaves become plain tuples: (sender indices, propagation) / (component, state index)
        def sender_leaf(atom: SenderAtom) -> tuple:
            return (tuple(pos[s] for s in atom.senders), atom.propagation)

        self.guards = [
            [(map_atoms(cl.condition, sender_leaf), cl.propagation, tuple(pos[r] for r in cl.receivers)) for cl in g.clauses]
            for g in instance.guards
        ]

        def state_leaf(atom: StateAtom) -> tuple:
            c = pos[atom.automaton]
            return (c, sid[c][atom.state])

        self.classes: dict = {}
        for cls in instance.derived:
            self.classes.setdefault(cls.name, []).append(map_atoms(cls.condition, state_leaf))
        self.class_names = set(self.classes)
        self.start = tuple(sid[c][a.initial] for c, a in enumerate(instance.automata))
        self._tables: dict = {}
        self._class_cache: dict = {}

    # -- per configuration caches ----------------------------------------

    def table(self, state: tuple) -> tuple:
        """``(total_rate, cumulative_rates, entries)`` of the clocks enabled in ``state``."""
        hit = self._tables.get(state)
        if hit is None:
            entries, cum, total = [], [], 0.0
            for c, s in enumerate(state):
                for clock in self.clocks[c][s]:
                    total += clock[0]
                    cum.append(total)
                    entries.append((c,) + clock)
            hit = self._tables[state] = (total, cum, entries)
        return hit

    def in_class(self, state: tuple, name: str) -> bool:
        key = (state, name)
        hit = self._class_cache.get(key)
        if hit is None:
            hit = any(evaluate(cond, lambda leaf: state[leaf[0]] == leaf[1]) for cond in self.classes.get(name, ()))
            self._class_cache[key] = hit
        return hit

    # -- one stochastic jump -------------------------------------------------

    def _moved(self, c: int, st: list, pending: deque, depth: int) -> None:
        for p, prop, dst in self.on_entry[c][st[c]]:
            pending.append((c, st[c], p, prop, dst, depth))

    def _send(self, c: int, prop: str, dst: int, st: list, pending: deque, depth: int) -> None:
        if st[c] != dst:
            st[c] = dst
            self._moved(c, st, pending, depth)
        for r in self.fanout[c].get(prop, ()):
            nxt = self.accept[r][st[r]].get(prop)
            if nxt is None or nxt == st[r]:
                continue  # masked
            if depth + 1 > self.limits.max_cascade_depth:
                raise CascadeDepthExceeded(
                    f"propagation cascade deeper than {self.limits.max_cascade_depth} at {self.paths[r]}"
                )
            st[r] = nxt
            self._moved(r, st, pending, depth + 1)

    def _guards_fire(self, st: list, pending: deque) -> bool:
        for clauses in self.guards:
            for cond, prop, receivers in clauses:
                if not evaluate(cond, lambda leaf: any(leaf[1] in self.visible[c][st[c]] for c in leaf[0])):
                    continue
                fired = False
                for r in receivers:
                    nxt = self.accept[r][st[r]].get(prop)
                    if nxt is not None and nxt != st[r]:
                        st[r] = nxt
                        self._moved(r, st, pending, 0)
                        fired = True
                if fired:
                    return True
                break
        return False

    def resolve(self, st: list, pending: deque, rng: SplitMix64) -> tuple:
        rounds = 0
        while True:
            while pending:
                c, src, p, prop, dst, depth = pending.popleft()
                if st[c] != src:
                    continue  # sender already left the emitting state
                if rng.bernoulli(p):
                    self._send(c, prop, dst, st, pending, depth)
            if not self._guards_fire(st, pending):
                return tuple(st)
            rounds += 1
            if rounds > self.limits.max_cascade_depth:
                raise GuardLivelock("guards keep firing without reaching a fixpoint")

    def jump(self, state: tuple, rng: SplitMix64) -> Optional[tuple]:
        total, cum, entries = self.table(state)
        if total <= 0.0:
            return None
        k = bisect_right(cum, rng.uniform() * total)
        c, _rate, is_out, name, dst = entries[min(k, len(entries) - 1)]
        st, pending = list(state), deque()
        if is_out:
            self._send(c, name, dst, st, pending, 0)
        elif st[c] != dst:
            st[c] = dst
            self._moved(c, st, pending, 0)
        return self.resolve(st, pending, rng)

    def holding_time(self, state: tuple, rng: SplitMix64) -> float:
        total = self.table(state)[0]
        return math.inf if total <= 0.0 else rng.exponential(total)

    def initial(self) -> tuple:
        # no entry emissions at time zero, so the generator is never consulted
        return self.resolve(list(self.start), deque(), SplitMix64(0))

    def named(self, state: tuple) -> tuple:
        return tuple((p, self.state_names[c][s]) for c, (p, s) in enumerate(zip(self.paths, state)))


def replication_run(
    instance: InstanceModel, horizon: float, seed: int, limits: Optional[Limits] = None
) -> list:
    """One trajectory as ``[(time, global_state), ...]``, one entry per jump.

    The run stops at ``horizon`` or when no clock is enabled.
    """
    machine = _Machine(instance, limits or Limits())
    return _trajectory(machine, horizon, SplitMix64(seed))


def _trajectory(machine: _Machine, horizon: float, rng: SplitMix64) -> list:
    state, now = machine.initial(), 0.0
    out = [(0.0, machine.named(state))]
    while True:
        now += machine.holding_time(state, rng)
        if now > horizon:
            return out
        state = machine.jump(state, rng)
        out.append((now, machine.named(state)))


def _indicator(machine: _Machine, horizon: float, rng: SplitMix64, label: str, absorbing: bool) -> int:
    """1 if the run is 'good': not in ``label`` at horizon, or (absorbing) never in it."""
    state, now = machine.initial(), 0.0
    if absorbing and machine.in_class(state, label):
        return 0
    while True:
        now += machine.holding_time(state, rng)
        if now > horizon:
            break
        state = machine.jump(state, rng)
        if absorbing and machine.in_class(state, label):
            return 0
    return 0 if machine.in_class(state, label) else 1


def simulate_measure(instance: InstanceModel, cfg: SimConfig, limits: Optional[Limits] = None) -> Estimate:
    spec = cfg.measure
    if spec.kind not in SIMULATED:
        raise ValueError(f"measure {spec.kind} cannot be simulated")
    machine = _Machine(instance, limits or Limits())
    label = spec.catastrophic_class if spec.kind == "safety" else spec.failure_class
    if label not in machine.class_names:
        raise LabelMissing(f"the model declares no state class named {label!r}")
    if spec.kind == "steady_state_availability":
        warnings.warn("steady-state availability is approximated by point availability at the horizon")
        if cfg.horizon is None:
            raise ValueError("steady-state simulation needs an explicit horizon")
    t = cfg.time
    absorbing = spec.kind in ("reliability", "safety")
    good = 0
    for r in range(cfg.replications):
        good += _indicator(machine, t, SplitMix64(replication_seed(cfg.seed, r)), label, absorbing)
    n = cfg.replications
    mean = good / n
    # 0/1 samples: the integer count makes the merge order-free
    var = (good * (n - good)) / (n * (n - 1)) if n > 1 else 0.0
    half = Z95 * math.sqrt(var / n)
    return Estimate(mean, half, n, spec.kind, t, cfg.seed, label)

