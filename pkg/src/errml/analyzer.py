"""Dependability measures on a labeled CTMC.

Time is in hours and rates are per hour throughout.

* steady state: Gauss-Seidel sweeps on ``pi Q = 0``; stops once the
  normalised iterate satisfies ``max|pi Q| <= tolerance``.
* transient: uniformization with rate ``L = max_i |q_ii|``; Poisson terms
  below the left point and beyond the right point are dropped, each tail
  holding at most half of the truncation budget.
* reliability / safety: transient analysis of the chain in which the
  failure (catastrophic) states lose their outgoing transitions.
* MTTF: linear solve ``-Q_TT m = 1`` on the states that are not failed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.sparse.linalg import spsolve, spsolve_triangular
from scipy.stats import poisson

from .composer import Ctmc
from .diagnostics import LabelMissing, NoConvergence, NotIrreducible, SizeLimit

MEASURES = ("steady_state_availability", "point_availability", "reliability", "safety", "mttf")
TIMED_MEASURES = ("point_availability", "reliability", "safety")


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 1_000_000
    truncation: float = 1e-12

    def __post_init__(self):
        if not (self.tolerance > 0 and self.max_iterations > 0 and self.truncation > 0):
            raise ValueError("solver settings must be positive")


@dataclass(frozen=True)
class MeasureSpec:
    kind: str
    time: Optional[float] = None
    failure_class: str = "Failed"
    catastrophic_class: str = "Catastrophic"

    def __post_init__(self):
        if self.kind not in MEASURES:
            raise ValueError(f"unknown measure {self.kind!r}; expected one of {', '.join(MEASURES)}")
        if self.kind in TIMED_MEASURES:
            if self.time is None:
                raise ValueError(f"measure {self.kind} needs a time")
            if self.time < 0:
                raise ValueError("time must be >= 0")


class Solution(NamedTuple):
    distribution: np.ndarray
    residual: float = 0.0
    iterations: int = 0
    left: int = 0
    right: int = 0
    discarded: float = 0.0


@dataclass
class MeasureResult:
    kind: str
    value: float
    residual: float = 0.0
    iterations: int = 0
    time: Optional[float] = None
    truncation: Optional[dict] = None
    failure_class: Optional[str] = None
    n_states: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"measure": self.kind}
        if self.time is not None:
            out["time"] = self.time
        if math.isinf(self.value):
            out["value"] = None
            out["infinite"] = True
        else:
            out["value"] = self.value
        out["residual"] = self.residual
        out["iterations"] = self.iterations
        if self.truncation is not None:
            out["truncation"] = self.truncation
        if self.failure_class is not None:
            out["class"] = self.failure_class
        out["states"] = self.n_states
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def _initial_vector(ctmc: Ctmc) -> np.ndarray:
    pi0 = np.zeros(ctmc.n_states)
    pi0[ctmc.initial] = 1.0
    return pi0


# --------------------------------------------------------------------------
# steady state


def steady_state(ctmc: Ctmc, cfg: SolverConfig = SolverConfig()) -> Solution:
    n = ctmc.n_states
    if n == 1:
        return Solution(np.ones(1))
    q = ctmc.generator()
    adjacency = q.copy()
    adjacency.setdiag(0)
    adjacency.eliminate_zeros()
    ncomp, _ = connected_components(adjacency, directed=True, connection="strong")
    if ncomp != 1:
        raise NotIrreducible(
            f"the chain has {ncomp} communicating classes; steady-state analysis needs an irreducible chain"
        )
    a = q.T.tocsr()
    lower = sp.tril(a, k=0, format="csr")
    upper = sp.triu(a, k=1, format="csr")
    x = np.full(n, 1.0 / n)
    residual = np.inf
    for it in range(1, cfg.max_iterations + 1):
        x = spsolve_triangular(lower, -(upper @ x), lower=True)
        x = np.abs(x)
        x /= math.fsum(x)
        residual = float(np.max(np.abs(a @ x)))
        if residual <= cfg.tolerance:
            return Solution(x, residual, it)
    raise NoConvergence(f"Gauss-Seidel stopped after {cfg.max_iterations} sweeps (residual {residual:.3e})")


# --------------------------------------------------------------------------
# transient


def _poisson_window(lt: float, eps: float) -> tuple:
    left = int(poisson.ppf(eps / 2, lt))
    left = max(left, 0)
    while left > 0 and poisson.cdf(left - 1, lt) > eps / 2:
        left -= 1
    right = max(int(poisson.isf(eps / 2, lt)), left)
    while poisson.sf(right, lt) > eps / 2:
        right += 1
    return left, right


def transient(ctmc: Ctmc, t: float, cfg: SolverConfig = SolverConfig(), start: Optional[np.ndarray] = None) -> Solution:
    """State distribution at time ``t`` by uniformization."""
    if t < 0:
        raise ValueError("time must be >= 0")
    pi0 = _initial_vector(ctmc) if start is None else np.asarray(start, dtype=float)
    q = ctmc.generator()
    rate = float(np.max(-q.diagonal())) if ctmc.n_states else 0.0
    if t == 0 or rate == 0.0:
        return Solution(pi0.copy())
    lt = rate * t
    left, right = _poisson_window(lt, cfg.truncation)
    if right > cfg.max_iterations:
        raise NoConvergence(
            f"uniformization needs {right} terms (rate*t = {lt:.3e}) which exceeds max_iterations; "
            "shorten the horizon or rescale rates"
        )
    weights = poisson.pmf(np.arange(left, right + 1), lt)
    pt = (sp.identity(ctmc.n_states, format="csr") + q / rate).T.tocsr()
    v = pi0.copy()
    acc = np.zeros_like(v)
    for k in range(right + 1):
        if k >= left:
            acc += weights[k - left] * v
        if k < right:
            v = pt @ v
    discarded = (float(poisson.cdf(left - 1, lt)) if left > 0 else 0.0) + float(poisson.sf(right, lt))
    return Solution(acc, discarded, right + 1, left, right, discarded)


def dense_expm_reference(generator, t: float = 1.0) -> np.ndarray:
    """``exp(Q t)`` by Taylor scaling and squaring; a test oracle for small chains.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most 1/2, the
    Taylor series is summed until the next term's norm bound falls below
    1e-20 relative, and the result is squared ``s`` times.
    """
    a = np.asarray(generator.toarray() if sp.issparse(generator) else generator, dtype=float) * t
    n = a.shape[0]
    if n > 64:
        raise SizeLimit(f"dense reference limited to 64 states, got {n}")
    norm = np.abs(a).sum(axis=0).max() if n else 0.0
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    b = a / 2**s
    result = np.eye(n)
    term = np.eye(n)
    bnorm = norm / 2**s
    for k in range(1, 60):
        term = term @ b / k
        result += term
        if bnorm ** (k + 1) / math.factorial(k + 1) < 1e-20:
            break
    for _ in range(s):
        result = result @ result
    return result


# --------------------------------------------------------------------------
# measures


def absorbing(ctmc: Ctmc, mask: np.ndarray) -> Ctmc:
    """Copy of ``ctmc`` where the masked states keep no outgoing transitions."""
    kept = tuple(tr for tr in ctmc.transitions if not mask[tr[0]])
    return replace(ctmc, transitions=kept)


def _class_mask(ctmc: Ctmc, label: str) -> np.ndarray:
    if label not in ctmc.known_labels() and label != "operational":
        raise LabelMissing(f"the chain has no state class named {label!r}")
    return ctmc.label_mask(label)


def mttf(ctmc: Ctmc, failed: np.ndarray, cfg: SolverConfig = SolverConfig()) -> tuple:
    """Mean time to absorption in ``failed``: ``(value, residual, warnings)``."""
    if failed[ctmc.initial]:
        return 0.0, 0.0, []
    q = ctmc.generator()
    live = absorbing(ctmc, failed).generator()
    adjacency = live.copy()
    adjacency.setdiag(0)
    adjacency.eliminate_zeros()
    reach = breadth_first_order(adjacency, ctmc.initial, directed=True, return_predecessors=False)
    reach = np.array(sorted(set(reach.tolist()) - set(np.flatnonzero(failed).tolist())), dtype=int)
    # states able to hit a failure state: reverse search from the failure set
    back = adjacency.T.tocsr()
    can_fail = np.zeros(ctmc.n_states, dtype=bool)
    for f in np.flatnonzero(failed):
        if not can_fail[f]:
            can_fail[breadth_first_order(back, f, directed=True, return_predecessors=False)] = True
    if not np.all(can_fail[reach]):
        msg = "failure states are not reached with probability 1; MTTF is infinite"
        warnings.warn(msg)
        return math.inf, 0.0, [msg]
    sub = q[reach][:, reach].tocsc()
    m = spsolve(-sub, np.ones(len(reach)))
    m = np.atleast_1d(m)
    residual = float(np.max(np.abs(sub @ m + 1.0)))
    pos = int(np.searchsorted(reach, ctmc.initial))
    return float(m[pos]), residual, []


def measure(ctmc: Ctmc, spec: MeasureSpec, cfg: SolverConfig = SolverConfig()) -> MeasureResult:
    kind = spec.kind
    label = spec.catastrophic_class if kind == "safety" else spec.failure_class
    bad = _class_mask(ctmc, label)
    base = dict(kind=kind, time=spec.time, failure_class=label, n_states=ctmc.n_states)
    if kind == "steady_state_availability":
        sol = steady_state(ctmc, cfg)
        value = math.fsum(sol.distribution[~bad])
        return MeasureResult(value=value, residual=sol.residual, iterations=sol.iterations, **base)
    if kind == "mttf":
        value, residual, notes = mttf(ctmc, bad, cfg)
        return MeasureResult(value=value, residual=residual, iterations=1, warnings=notes, **base)
    chain = ctmc if kind == "point_availability" else absorbing(ctmc, bad)
    sol = transient(chain, spec.time, cfg)
    value = math.fsum(sol.distribution[~bad])
    value = min(max(value, 0.0), 1.0)
    trunc = {"left": sol.left, "right": sol.right, "discarded": sol.discarded}
    return MeasureResult(value=value, residual=sol.residual, iterations=sol.iterations, truncation=trunc, **base)
