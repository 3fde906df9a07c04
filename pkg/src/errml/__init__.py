"""Architecture-based dependability models: parse, compose into a CTMC, evaluate."""

from .analyzer import MeasureResult, MeasureSpec, SolverConfig, dense_expm_reference, measure, steady_state, transient
from .composer import Ctmc, Limits, compose, explore, fold_guards_and_vanishing, label_states
from .diagnostics import Diagnostic, ErrmlError, Severity, SourceSpan
from .export import export, read_explicit
from .instance import InstanceModel, instantiate, routing_table
from .parser import parse_file, parse_guard_expr, parse_model
from .printer import pretty_print
from .resolve import apply_iterations, validate_library
from .simulator import Estimate, SimConfig, replication_run, simulate_measure

__version__ = "0.1.0"

__all__ = [
    "Ctmc",
    "Diagnostic",
    "ErrmlError",
    "Estimate",
    "InstanceModel",
    "Limits",
    "MeasureResult",
    "MeasureSpec",
    "Severity",
    "SimConfig",
    "SolverConfig",
    "SourceSpan",
    "apply_iterations",
    "compose",
    "dense_expm_reference",
    "explore",
    "export",
    "fold_guards_and_vanishing",
    "instantiate",
    "label_states",
    "measure",
    "parse_file",
    "parse_guard_expr",
    "parse_model",
    "pretty_print",
    "read_explicit",
    "replication_run",
    "routing_table",
    "simulate_measure",
    "steady_state",
    "transient",
    "validate_library",
]
