from conftest import FIXTURE_FILES, load
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from errml.model import (
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
    GuardClause,
    GuardOut,
    ModelBinding,
    Not,
    Occurrence,
    Or,
    Port,
    PropagationDecl,
    StateDecl,
    Tagged,
    Transition,
    Trigger,
)
from errml.parser import parse_model
from errml.printer import pretty_print


def test_every_fixture_round_trips():
    for path in FIXTURE_FILES:
        r = load(path.name)
        assert [d for d in r.diagnostics if d.is_error] == [], path.name
        text = pretty_print(r.architecture, r.library)
        again = parse_model(text)
        assert again.diagnostics == []
        assert again.architecture == r.architecture, path.name
        assert again.library == r.library, path.name
        # canonical text is a fixpoint
        assert pretty_print(again.architecture, again.library) == text


def test_iteration_tags_survive_printing():
    r = load("fig5_pipeline.errml")
    text = pretty_print(r.architecture, r.library)
    assert "iteration 3 {" in text and "remove {" in text
    again = parse_model(text).library.implementation("Comp3", "general")
    assert again.transitions == r.library.implementation("Comp3", "general").transitions


def test_empty_model_prints_empty():
    assert pretty_print(ArchitectureModel(), ErrorModelLibrary()) == ""


# -- random ASTs -------------------------------------------------------------

names = st.from_regex(r"X[a-z0-9_]{0,4}", fullmatch=True)
numbers = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False),
    st.sampled_from([1e-3, 0.1, 1.0, 1e-300, 2.5e10]),
)
occurrences = st.one_of(
    st.none(),
    st.builds(Occurrence, st.sampled_from(["poisson", "fixed"]), st.one_of(numbers, names)),
)


def tagged(item, max_size=4):
    return st.lists(
        st.builds(Tagged, item, st.integers(1, 4), st.booleans()), max_size=max_size
    ).map(tuple)


features = st.one_of(
    st.builds(StateDecl, names, st.booleans()),
    st.builds(EventDecl, names, occurrences),
    st.builds(PropagationDecl, names, st.sampled_from(["in", "out", "in_out"]), occurrences),
)
triggers = st.builds(Trigger, st.sampled_from(["event", "in", "out"]), names)
transitions = st.builds(Transition, names, triggers, names)

atoms = st.builds(Atom, names, names)
exprs = st.recursive(
    st.one_of(atoms, st.builds(Const, st.booleans())),
    lambda inner: st.one_of(
        st.builds(Not, inner),
        st.lists(inner, min_size=2, max_size=3).map(lambda ops: And(tuple(ops))),
        st.lists(inner, min_size=2, max_size=3).map(lambda ops: Or(tuple(ops))),
    ),
    max_leaves=6,
)


def _flat(expr):
    """The parser builds n-ary nodes, so same-kind nesting collapses; mirror that."""
    if isinstance(expr, Not):
        return Not(_flat(expr.operand))
    if isinstance(expr, (And, Or)):
        ops = []
        for op in map(_flat, expr.operands):
            ops.extend(op.operands if type(op) is type(expr) else [op])
        return type(expr)(tuple(ops))
    return expr


annex_items = st.one_of(
    st.builds(ModelBinding, names, names),
    st.builds(
        GuardOut,
        names,
        st.lists(st.builds(GuardClause, names, exprs.map(_flat)), max_size=3).map(tuple),
    ),
    st.builds(DerivedErrorModel, tagged(st.builds(DerivedClass, names, exprs.map(_flat)))),
)
qualified = st.one_of(names, st.tuples(names, names).map(".".join))


def components(depth):
    subs = tagged(st.deferred(lambda: components(depth - 1)), max_size=2) if depth > 0 else st.just(())
    return st.builds(
        Component,
        st.sampled_from(["system", "process", "thread", "device", "processor"]),
        names,
        tagged(st.builds(Port, names, st.sampled_from(["in", "out"]), st.sampled_from(["data", "event"]))),
        subs,
        tagged(st.builds(Connection, names, qualified, qualified)),
        st.one_of(st.none(), tagged(annex_items, max_size=3)),
    )


libraries = st.builds(
    ErrorModelLibrary,
    st.lists(st.builds(ErrorModelType, names, tagged(features)), max_size=3).map(tuple),
    st.lists(st.builds(ErrorModelImplementation, names, names, tagged(transitions)), max_size=3).map(tuple),
    st.lists(st.tuples(names, numbers), max_size=3).map(tuple),
)


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(libraries, st.one_of(st.none(), components(2)))
def test_random_ast_round_trip(lib, root):
    arch = ArchitectureModel(root)
    text = pretty_print(arch, lib)
    again = parse_model(text)
    assert again.diagnostics == [], text
    assert again.library == lib
    assert again.architecture == arch


fragments = st.sampled_from(
    [
        "error", "model", "features", "end", "x", "Y", ";", ":", "{", "}", "[", "]", "(", ")",
        "->", "-", "=>", "{**", "**}", "in", "out", "iteration", "2", "add", "remove", "1.5e-3",
        "when", "and", "or", "not", "mask", "others", "applies", "to", "thread", "system",
        "transitions", "implementation", "state", "initial", "event", "propagation", "\n", " ",
        "annex", "error_model", "derived", "Guard_Out", "parameters", "port", "data", "--c\n", "λ", "#",
    ]
)


@settings(max_examples=300, deadline=None)
@given(st.lists(fragments, max_size=40).map(" ".join))
def test_garbage_never_crashes_and_spans_stay_in_bounds(text):
    r = parse_model(text)
    lines = text.split("\n")
    for d in r.diagnostics:
        assert 1 <= d.span.line <= len(lines)
        assert 1 <= d.span.column <= len(lines[d.span.line - 1]) + 1
    assert parse_model(text) == r
