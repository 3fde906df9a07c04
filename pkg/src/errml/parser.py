"""Recursive descent parser for ``.errml`` models.

The concrete syntax follows the AADL Error Model Annex listings::

    error model simple
    features
      Error_Free: initial error state;
      Fail: error event {Occurrence => Poisson lambda};
      KO: in out error propagation {Occurrence => fixed p};
    end simple;

    error model implementation simple.general
    transitions
      Error_Free-[Fail]->Failed;
      Failed-[out KO]->Failed;
    end simple.general;

plus ``parameters { name = value; }`` blocks, component declarations with
``annex error_model {** ... **}`` sections, and ``iteration N { add {...}
remove {...} }`` blocks wherever a declaration list is expected.

On a syntax error the parser records a diagnostic, skips to the next ``;``
and carries on, so one pass reports every independent problem.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, NamedTuple, Optional

from .diagnostics import Diagnostic, SourceSpan, error
from .lexer import EOF, IDENT, NUMBER, Token, tokenize
from .model import (
    CATEGORIES,
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


class ParseResult(NamedTuple):
    architecture: ArchitectureModel
    library: ErrorModelLibrary
    diagnostics: list


class _SyntaxError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic


class Parser:
    def __init__(self, text: str, file: str = "<input>"):
        self.tokens, self.diagnostics = tokenize(text, file)
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def fail(self, expected: str, tok: Optional[Token] = None, code: str = "Syntax"):
        tok = tok or self.peek()
        raise _SyntaxError(error(f"expected {expected}, found {tok.describe()}", tok.span, code))

    def expect_punct(self, symbol: str) -> Token:
        if not self.peek().is_punct(symbol):
            self.fail(repr(symbol))
        return self.advance()

    def expect_kw(self, *words: str) -> Token:
        if not self.peek().is_kw(*words):
            self.fail(" or ".join(repr(w) for w in words))
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.peek().kind != IDENT:
            self.fail(what)
        return self.advance()

    def accept_punct(self, symbol: str) -> bool:
        if self.peek().is_punct(symbol):
            self.advance()
            return True
        return False

    def report(self, exc: _SyntaxError) -> None:
        self.diagnostics.append(exc.diagnostic)

    def sync(self) -> None:
        """Skip past the next ``;`` without crossing a block boundary."""
        while True:
            tok = self.peek()
            if tok.kind == EOF or tok.is_punct("}", "**}") or tok.is_kw("end"):
                return
            self.advance()
            if tok.is_punct(";"):
                return

    # -- lists with iteration blocks --------------------------------------

    def tagged_list(self, item: Callable, stop: Callable[[Token], bool]) -> tuple:
        out: list = []
        while not stop(self.peek()) and self.peek().kind != EOF:
            if self.peek().is_kw("iteration") and self.peek(1).kind == NUMBER:
                out.extend(self.iteration_block(item))
                continue
            start = self.pos
            try:
                out.append(Tagged(item()))
            except _SyntaxError as exc:
                self.report(exc)
                self.sync()
                if self.pos == start:
                    self.advance()
        return tuple(out)

    def iteration_block(self, item: Callable) -> list:
        self.expect_kw("iteration")
        num = self.advance()
        try:
            n = int(num.text)
        except ValueError:
            n = 0
        if n < 1:
            self.diagnostics.append(error("iteration number must be a positive integer", num.span, "Syntax"))
            n = 1
        out: list = []
        try:
            self.expect_punct("{")
            while not self.peek().is_punct("}") and self.peek().kind != EOF:
                op = self.expect_kw("add", "remove")
                self.expect_punct("{")
                for entry in self.tagged_list(item, lambda t: t.is_punct("}")):
                    if entry.iteration != 1 or entry.remove:
                        self.diagnostics.append(error("nested iteration blocks are not allowed", num.span, "Syntax"))
                    out.append(Tagged(entry.item, n, op.text.lower() == "remove"))
                self.expect_punct("}")
            self.expect_punct("}")
        except _SyntaxError as exc:
            self.report(exc)
            self.sync()
        return out

    # -- top level ----------------------------------------------------------

    def parse(self) -> ParseResult:
        types, impls, params, roots = [], [], [], []
        while self.peek().kind != EOF:
            try:
                tok = self.peek()
                if tok.is_kw("parameters"):
                    params.extend(self.parameters())
                elif tok.is_kw("error"):
                    decl = self.error_model()
                    (impls if isinstance(decl, ErrorModelImplementation) else types).append(decl)
                elif tok.is_kw(*CATEGORIES):
                    roots.append(self.component())
                else:
                    self.fail("'parameters', 'error model' or a component category")
            except _SyntaxError as exc:
                self.report(exc)
                while self.peek().kind != EOF and not self.advance().is_punct(";"):
                    pass
        if len(roots) > 1:
            for extra in roots[1:]:
                self.diagnostics.append(
                    error(f"multiple root components ('{roots[0].name}' and '{extra.name}')", extra.span, "Syntax")
                )
        arch = ArchitectureModel(roots[0] if roots else None)
        lib = ErrorModelLibrary(tuple(types), tuple(impls), tuple(params))
        return ParseResult(arch, lib, self.diagnostics)

    def parameters(self) -> list:
        self.expect_kw("parameters")
        self.expect_punct("{")
        out = []
        while not self.peek().is_punct("}") and self.peek().kind != EOF:
            start = self.pos
            try:
                name = self.expect_ident("parameter name").text
                self.expect_punct("=")
                out.append((name, self.number()))
                self.expect_punct(";")
            except _SyntaxError as exc:
                self.report(exc)
                self.sync()
                if self.pos == start:
                    self.advance()
        self.expect_punct("}")
        return out

    def number(self) -> float:
        tok = self.peek()
        if tok.kind != NUMBER:
            self.fail("number")
        self.advance()
        return float(tok.text)

    def end_name(self, expected: str) -> None:
        self.expect_kw("end")
        tok = self.peek()
        name = self.qualified_ident()
        if name != expected:
            self.diagnostics.append(error(f"'end {name}' does not match '{expected}'", tok.span, "Syntax"))
        self.expect_punct(";")

    def qualified_ident(self) -> str:
        parts = [self.expect_ident().text]
        while self.peek().is_punct(".") and self.peek(1).kind == IDENT:
            self.advance()
            parts.append(self.advance().text)
        return ".".join(parts)

    # -- error models ---------------------------------------------------------

    def error_model(self):
        head = self.expect_kw("error")
        self.expect_kw("model")
        if self.peek().is_kw("implementation"):
            self.advance()
            type_name = self.expect_ident("error model type name").text
            self.expect_punct(".")
            impl_name = self.expect_ident("implementation name").text
            self.expect_kw("transitions")
            trans = self.tagged_list(self.transition, lambda t: t.is_kw("end"))
            self.end_name(f"{type_name}.{impl_name}")
            return ErrorModelImplementation(type_name, impl_name, trans, head.span)
        name = self.expect_ident("error model name").text
        self.expect_kw("features")
        feats = self.tagged_list(self.feature, lambda t: t.is_kw("end"))
        self.end_name(name)
        return ErrorModelType(name, feats, head.span)

    def feature(self):
        tok = self.expect_ident("feature name")
        self.expect_punct(":")
        if self.peek().is_kw("initial"):
            self.advance()
            self.expect_kw("error")
            self.expect_kw("state")
            decl = StateDecl(tok.text, True, tok.span)
        elif self.peek().is_kw("error"):
            self.advance()
            kind = self.expect_kw("state", "event")
            if kind.is_kw("state"):
                decl = StateDecl(tok.text, False, tok.span)
            else:
                decl = EventDecl(tok.text, self.occurrence(), tok.span)
        elif self.peek().is_kw("in", "out"):
            direction = self.advance().text.lower()
            if direction == "in" and self.peek().is_kw("out"):
                self.advance()
                direction = "in_out"
            self.expect_kw("error")
            self.expect_kw("propagation")
            decl = PropagationDecl(tok.text, direction, self.occurrence(), tok.span)
        else:
            self.fail("'initial', 'error', 'in' or 'out'")
        self.expect_punct(";")
        return decl

    def occurrence(self) -> Optional[Occurrence]:
        if not self.accept_punct("{"):
            return None
        self.expect_kw("occurrence")
        self.expect_punct("=>")
        kind = self.expect_kw("poisson", "fixed").text.lower()
        tok = self.peek()
        if tok.kind == NUMBER:
            value = self.number()
        elif tok.kind == IDENT:
            value = self.advance().text
        else:
            self.fail("number or parameter name")
        self.expect_punct("}")
        return Occurrence(kind, value)

    def transition(self) -> Transition:
        src = self.expect_ident("source state")
        self.expect_punct("-")
        self.expect_punct("[")
        if self.peek().is_kw("in", "out"):
            kind = self.advance().text.lower()
            name = self.expect_ident(f"propagation name after '{kind}'").text
        else:
            kind = "event"
            name = self.expect_ident("trigger name").text
        self.expect_punct("]")
        self.expect_punct("->")
        dst = self.expect_ident("destination state").text
        self.expect_punct(";")
        return Transition(src.text, Trigger(kind, name), dst, src.span)

    # -- architecture -------------------------------------------------------------

    def component(self) -> Component:
        cat = self.expect_kw(*CATEGORIES)
        name = self.expect_ident("component name").text
        sections = ("features", "subcomponents", "connections", "annex", "end")

        def at_section(t: Token) -> bool:
            return t.is_kw(*sections)

        ports = subs = conns = ()
        annex = None
        if self.peek().is_kw("features"):
            self.advance()
            ports = self.tagged_list(self.port, at_section)
        if self.peek().is_kw("subcomponents"):
            self.advance()
            subs = self.tagged_list(self.component, at_section)
        if self.peek().is_kw("connections"):
            self.advance()
            conns = self.tagged_list(self.connection, at_section)
        if self.peek().is_kw("annex"):
            self.advance()
            self.expect_kw("error_model")
            self.expect_punct("{**")
            annex = self.tagged_list(self.annex_item, lambda t: t.is_punct("**}"))
            self.expect_punct("**}")
            self.accept_punct(";")
        self.end_name(name)
        return Component(cat.text.lower(), name, ports, subs, conns, annex, cat.span)

    def port(self) -> Port:
        tok = self.expect_ident("port name")
        self.expect_punct(":")
        direction = self.expect_kw("in", "out").text.lower()
        kind = self.expect_kw("data", "event").text.lower()
        self.expect_kw("port")
        self.expect_punct(";")
        return Port(tok.text, direction, kind, tok.span)

    def connection(self) -> Connection:
        tok = self.expect_ident("connection name")
        self.expect_punct(":")
        self.expect_kw("port")
        src = self.qualified_ident()
        self.expect_punct("->")
        dst = self.qualified_ident()
        self.expect_punct(";")
        return Connection(tok.text, src, dst, tok.span)

    def annex_item(self):
        tok = self.peek()
        if tok.is_kw("model"):
            self.advance()
            self.expect_punct("=>")
            type_name = self.expect_ident("error model type name").text
            self.expect_punct(".")
            impl_name = self.expect_ident("implementation name").text
            self.expect_punct(";")
            return ModelBinding(type_name, impl_name, tok.span)
        if tok.is_kw("guard_out"):
            self.advance()
            self.expect_punct("=>")
            guard = self.guard_body()
            self.expect_punct(";")
            return guard
        if tok.is_kw("derived"):
            self.advance()
            self.expect_punct("{")
            classes = self.tagged_list(self.derived_class, lambda t: t.is_punct("}"))
            self.expect_punct("}")
            self.accept_punct(";")
            return DerivedErrorModel(classes, tok.span)
        self.fail("'model', 'Guard_Out' or 'derived'")

    def derived_class(self) -> DerivedClass:
        tok = self.expect_ident("class name")
        self.expect_kw("when")
        expr = self.expr()
        self.expect_punct(";")
        return DerivedClass(tok.text, expr, tok.span)

    # -- guards and expressions -------------------------------------------------

    def guard_body(self) -> GuardOut:
        start = self.peek()
        clauses = []
        has_default = False
        while True:
            tok = self.peek()
            if tok.is_kw("mask") and self.peek(1).is_kw("when") and self.peek(2).is_kw("others"):
                self.pos += 3
                has_default = True
            elif tok.kind == IDENT and self.peek(1).is_kw("when"):
                if has_default:
                    self.diagnostics.append(
                        error("'mask when others' must be the last guard clause", tok.span, "MisplacedDefault")
                    )
                self.advance()
                self.advance()
                clauses.append(GuardClause(tok.text, self.expr(), tok.span))
            else:
                break
            self.accept_punct(",")
        if not clauses and not has_default:
            self.fail("guard clause")
        if not self.peek().is_kw("applies"):
            self.fail("'applies to'" if has_default else "'mask when others' or 'applies to'")
        self.advance()
        self.expect_kw("to")
        port = self.expect_ident("port name").text
        if not has_default:
            self.diagnostics.append(error("guard lacks the 'mask when others' default", start.span, "MissingDefault"))
        return GuardOut(port, tuple(clauses), start.span)

    def expr(self):
        first = self.peek()
        operands = [self.and_expr()]
        while self.peek().is_kw("or"):
            self.advance()
            operands.append(self.and_expr())
        return operands[0] if len(operands) == 1 else Or(tuple(operands), first.span)

    def and_expr(self):
        first = self.peek()
        operands = [self.not_expr()]
        while self.peek().is_kw("and"):
            self.advance()
            operands.append(self.not_expr())
        return operands[0] if len(operands) == 1 else And(tuple(operands), first.span)

    def not_expr(self):
        tok = self.peek()
        if tok.is_kw("not"):
            self.advance()
            return Not(self.not_expr(), tok.span)
        if self.accept_punct("("):
            inner = self.expr()
            self.expect_punct(")")
            return inner
        if tok.is_kw("true", "false") and not self.peek(1).is_punct("["):
            self.advance()
            return Const(tok.text.lower() == "true", tok.span)
        owner = self.expect_ident("atom 'name[value]'")
        self.expect_punct("[")
        name = self.expect_ident("name inside brackets").text
        self.expect_punct("]")
        return Atom(owner.text, name, owner.span)


def parse_model(text: str, file: str = "<input>") -> ParseResult:
    """Parse a whole ``.errml`` source.

    Never raises on bad input: syntax problems come back as error
    diagnostics next to whatever part of the model could be recovered.
    """
    return Parser(text, file).parse()


def parse_file(path) -> ParseResult:
    path = Path(path)
    return parse_model(path.read_text(encoding="utf-8"), str(path))


def parse_guard_expr(text: str, file: str = "<input>") -> tuple[Optional[GuardOut], list]:
    """Parse a stand-alone ``Guard_Out`` body such as
    ``P when a[X] mask when others applies to p``."""
    p = Parser(text, file)
    guard = None
    try:
        if p.peek().is_kw("guard_out"):
            p.advance()
            p.expect_punct("=>")
        guard = p.guard_body()
        p.accept_punct(";")
        if p.peek().kind != EOF:
            p.fail("end of guard")
    except _SyntaxError as exc:
        p.report(exc)
    return guard, p.diagnostics
