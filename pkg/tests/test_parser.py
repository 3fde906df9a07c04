from conftest import FIXTURES, load

from errml.diagnostics import Severity
from errml.lexer import tokenize
from errml.model import And, Atom, Const, Not, Occurrence, Or, Trigger, items
from errml.parser import parse_guard_expr, parse_model


def test_fig1_listing_structure():
    r = load("fig1_simple.errml")
    assert r.diagnostics == []
    simple = r.library.type("simple")
    assert [(s.name, s.initial) for s in simple.states] == [("Error_Free", True), ("Failed", False)]
    assert [(e.name, e.occurrence) for e in simple.events] == [
        ("Fail", Occurrence("poisson", "λ")),
        ("Recover", Occurrence("poisson", "μ")),
    ]
    (ko,) = simple.propagations
    assert (ko.name, ko.direction, ko.occurrence) == ("KO", "in_out", Occurrence("fixed", "p"))
    impl = r.library.implementation("simple", "general")
    assert [str(t.item) for t in impl.transitions] == [
        "Error_Free-[Fail]->Failed",
        "Error_Free-[in KO]->Failed",
        "Failed-[Recover]->Error_Free",
        "Failed-[out KO]->Failed",
    ]
    assert r.library.parameter_map == {"λ": 1e-3, "μ": 1e-1, "p": 0.5}


def test_empty_input():
    r = parse_model("")
    assert r.architecture.root is None and r.library.is_empty and r.diagnostics == []


def test_comments_and_whitespace_only():
    r = parse_model("-- nothing here\n   \n-- still nothing\n")
    assert r.diagnostics == [] and r.library.is_empty


def test_missing_destination_reports_at_semicolon_and_recovers():
    src = (
        "error model implementation simple.general\n"
        "transitions\n"
        "  Error_Free-[Fail]-> ;\n"
        "  Failed-[Recover]->Error_Free;\n"
        "end simple.general;\n"
    )
    r = parse_model(src)
    assert len(r.diagnostics) == 1
    d = r.diagnostics[0]
    assert d.severity is Severity.ERROR
    assert (d.span.line, d.span.column) == (3, src.splitlines()[2].index(";") + 1)
    # parsing continued after the bad transition
    impl = r.library.implementation("simple", "general")
    assert [str(t.item) for t in impl.transitions] == ["Failed-[Recover]->Error_Free"]


def test_multiple_errors_are_all_reported():
    src = (
        "error model m\nfeatures\n"
        "  A: initial error state\n"  # missing ';' swallows the next line
        "  B: error state;\n"
        "  C: error banana;\n"
        "  D: error state;\n"
        "end m;\n"
    )
    r = parse_model(src)
    assert len([d for d in r.diagnostics if d.is_error]) >= 2
    assert r.library.type("m").feature("D") is not None


def test_spans_lie_within_input():
    bad = [
        "error model x features A: initial error state end x;",
        "system S end T;",
        "error model implementation a.b transitions A-[in]->B; end a.b;",
        "parameters { x = ; }",
        "thread T features p: sideways data port; end T;",
        "{** garbage",
    ]
    for src in bad:
        r = parse_model(src)
        assert r.diagnostics, src
        lines = src.splitlines() or [""]
        for d in r.diagnostics:
            assert 1 <= d.span.line <= len(lines)
            assert 1 <= d.span.column <= len(lines[d.span.line - 1]) + 1


def test_parse_is_deterministic():
    text = (FIXTURES / "fig5_pipeline.errml").read_text()
    a, b = parse_model(text), parse_model(text)
    assert a == b


def test_guard_fig7():
    g, diags = parse_guard_expr(
        "RecoverAuthorize when (from1[OK] and from2[OK]) mask when others applies to to3"
    )
    assert diags == []
    assert g.applies_to == "to3"
    (clause,) = g.clauses
    assert clause.propagation == "RecoverAuthorize"
    assert clause.condition == And((Atom("from1", "OK"), Atom("from2", "OK")))


def test_guard_precedence_and_over_or():
    g, diags = parse_guard_expr("P when a[X] or b[Y] and c[Z] mask when others applies to p")
    assert diags == []
    assert g.clauses[0].condition == Or((Atom("a", "X"), And((Atom("b", "Y"), Atom("c", "Z")))))


def test_guard_not_binds_tightest_and_parentheses_override():
    g, _ = parse_guard_expr("P when not a[X] and (b[Y] or true) mask when others applies to p")
    assert g.clauses[0].condition == And((Not(Atom("a", "X")), Or((Atom("b", "Y"), Const(True)))))


def test_guard_missing_default():
    _, diags = parse_guard_expr("P when a[X] applies to p")
    assert [d.code for d in diags if d.is_error] == ["MissingDefault"]


def test_guard_default_must_be_last():
    _, diags = parse_guard_expr("P when a[X] mask when others Q when b[Y] applies to p")
    assert "MisplacedDefault" in [d.code for d in diags]


def test_guard_atom_syntax_error_has_span():
    g, diags = parse_guard_expr("P when a[ applies")
    assert g is None and diags and all(d.span.line == 1 for d in diags)


def test_guard_inside_annex():
    r = load("fig5_pipeline.errml")
    pipeline = r.architecture.root
    recovery = next(e.item for e in pipeline.subcomponents if e.item.name == "Recovery")
    (guard,) = recovery.guards
    assert guard.applies_to == "to3"


def test_iteration_blocks_keep_tags():
    r = load("fig5_pipeline.errml")
    impl = r.library.implementation("Comp3", "general")
    tags = [(str(e.item), e.iteration, e.remove) for e in impl.transitions]
    assert ("Failed-[Recover]->Error_Free", 3, True) in tags
    assert ("Failed-[RecoverAuthorize]->CanRecover", 3, False) in tags
    bare = next(e.item for e in impl.transitions if e.item.destination == "CanRecover")
    assert bare.trigger == Trigger("event", "RecoverAuthorize")


def test_unicode_identifiers_and_numbers():
    toks, diags = tokenize("λ = 1.5e-3; μ=2; x_1 = .5")
    assert diags == []
    kinds = [(t.kind, t.text) for t in toks if t.kind != "EOF"]
    assert ("IDENT", "λ") in kinds and ("NUMBER", "1.5e-3") in kinds


def test_keywords_case_insensitive():
    r = parse_model("ERROR MODEL m FEATURES A: Initial Error State; END m;")
    assert r.diagnostics == []
    assert r.library.type("m").initial_states == ("A",)


def test_architecture_sections():
    r = load("fig3_dependency.errml")
    root = r.architecture.root
    assert (root.category, root.name) == ("system", "Dependency")
    subs = items(root.subcomponents)
    assert [s.name for s in subs] == ["Component1", "Component2"]
    (conn,) = items(root.connections)
    assert (conn.source, conn.destination) == ("Component1.o", "Component2.i")
    assert [c.name for c in items(root.derived_model.classes)] == ["Failed", "Catastrophic"]


def test_two_roots_is_an_error():
    r = parse_model("thread A end A; thread B end B;")
    assert any(d.is_error for d in r.diagnostics)


def test_mismatched_end_name():
    r = parse_model("error model a features S: initial error state; end b;")
    assert any(d.is_error for d in r.diagnostics)
