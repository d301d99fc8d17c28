"""Recursive-descent parser for .amw sources.

One token of lookahead plus keyword dispatch is enough for the whole
grammar.  Syntax errors are collected rather than raised one at a time:
after an error the parser skips ahead to the next top-level keyword.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from . import model as m
from .diagnostics import ParseError, diag
from .lexer import RESERVED, Token, tokenize

INT_MIN, INT_MAX = -(2 ** 63), 2 ** 63 - 1

TOP_LEVEL = ("class", "statechart", "objects", "pattern", "sequence", "inv", "test", "project")

_COMPARE = m.COMPARE_OPS
_ADDITIVE = ("+", "-")
_MULTIPLICATIVE = ("*",)


@dataclass
class SourceUnit:
    path: str
    text: str


class _Syntax(Exception):
    def __init__(self, message, token):
        super().__init__(message)
        self.message = message
        self.token = token


class Parser:
    def __init__(self, text: str, path: Optional[str] = None):
        self.path = path
        self.tokens, self.diagnostics = tokenize(text, path)
        self.i = 0

    # -- token helpers --

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, message, token=None):
        raise _Syntax(message, token or self.tok)

    def expect_sym(self, s: str) -> Token:
        if not self.tok.is_sym(s):
            self.error(f"expected '{s}', found {self.describe(self.tok)}")
        return self.advance()

    def accept_sym(self, s: str) -> bool:
        if self.tok.is_sym(s):
            self.advance()
            return True
        return False

    def expect_word(self, w: str) -> Token:
        if not self.tok.is_word(w):
            self.error(f"expected '{w}', found {self.describe(self.tok)}")
        return self.advance()

    def accept_word(self, w: str) -> bool:
        if self.tok.is_word(w):
            self.advance()
            return True
        return False

    def ident(self, what="identifier") -> Token:
        t = self.tok
        if t.kind != "ID" or t.text in RESERVED:
            self.error(f"expected {what}, found {self.describe(t)}")
        return self.advance()

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == "EOF" else repr(t.text)

    # -- entry point --

    def parse(self) -> m.Model:
        model = m.Model()
        while self.tok.kind != "EOF":
            start = self.i
            try:
                self.item(model)
            except _Syntax as exc:
                t = exc.token
                self.diagnostics.append(diag("E_SYNTAX", exc.message, t.pos, self.path))
                if self.i == start:
                    self.advance()
                self.recover()
        return model

    def at_item_start(self) -> bool:
        t = self.tok
        if t.kind != "ID":
            return False
        if t.text in TOP_LEVEL:
            return True
        if t.text in ("published", "abstract"):
            nxt = self.peek()
            return nxt.is_word("class") or (nxt.is_word("abstract") and self.peek(2).is_word("class"))
        return False

    def recover(self):
        while self.tok.kind != "EOF" and not self.at_item_start():
            self.advance()

    def item(self, model: m.Model):
        t = self.tok
        if t.is_word("published") or t.is_word("abstract") or t.is_word("class"):
            c = self.class_def()
            model.classes.append(c)
        elif t.is_word("statechart"):
            model.statecharts.append(self.statechart())
        elif t.is_word("objects"):
            model.configs.append(self.configuration(m.ObjectConfiguration, "objects", anchors=False))
        elif t.is_word("pattern"):
            model.patterns.append(self.configuration(m.PatternConfiguration, "pattern", anchors=True))
        elif t.is_word("sequence"):
            model.sequences.append(self.sequence())
        elif t.is_word("inv"):
            model.invariants.append(self.invariant())
        elif t.is_word("test"):
            model.tests.append(self.test_case())
        elif t.is_word("project"):
            man = self.manifest()
            if model.manifest is not None:
                self.diagnostics.append(diag("E_DUPLICATE", "second project manifest", man.pos, self.path))
            else:
                model.manifest = man
        else:
            self.error(f"expected a top-level declaration, found {self.describe(t)}")

    def _src(self, node):
        node.source = self.path
        return node

    # -- class diagrams --

    def class_def(self) -> m.ClassDef:
        start = self.tok
        published = self.accept_word("published")
        abstract = self.accept_word("abstract")
        self.expect_word("class")
        name = self.ident("class name").text
        superclass = None
        if self.accept_word("extends"):
            superclass = self.ident("superclass name").text
        self.expect_sym("{")
        cls = m.ClassDef(name, superclass, abstract, published, pos=start.pos)
        while not self.tok.is_sym("}"):
            self.member(cls)
        self.expect_sym("}")
        return self._src(cls)

    def member(self, cls: m.ClassDef):
        start = self.tok
        published = self.accept_word("published")
        if self.accept_word("attr"):
            name = self.ident("attribute name").text
            self.expect_sym(":")
            typ = self.type_ref()
            self.expect_sym(";")
            cls.attributes.append(m.AttributeDef(name, typ, published, pos=start.pos))
            return
        abstract = self.accept_word("abstract")
        if not self.accept_word("method"):
            self.error(f"expected 'attr' or 'method', found {self.describe(self.tok)}")
        name = self.ident("method name").text
        self.expect_sym("(")
        params = self.params() if not self.tok.is_sym(")") else []
        self.expect_sym(")")
        ret = None
        if self.accept_sym(":"):
            ret = self.type_ref()
        body = None
        if self.tok.is_sym("{"):
            body = self.block()
        else:
            self.expect_sym(";")
        cls.methods.append(m.MethodDef(name, params, ret, body, abstract, published, pos=start.pos))

    def params(self) -> list:
        result = []
        while True:
            t = self.ident("parameter name")
            self.expect_sym(":")
            result.append(m.Param(t.text, self.type_ref(), pos=t.pos))
            if not self.accept_sym(","):
                return result

    def type_ref(self) -> m.TypeRef:
        if self.tok.is_word("set") and self.peek().is_sym("<"):
            self.advance()
            self.expect_sym("<")
            name = self.ident("type name").text
            self.expect_sym(">")
            return m.TypeRef(name, True)
        return m.TypeRef(self.ident("type name").text)

    # -- action language --

    def block(self) -> list:
        self.expect_sym("{")
        stmts = []
        while not self.tok.is_sym("}"):
            stmts.append(self.statement())
        self.expect_sym("}")
        return stmts

    def statement(self):
        t = self.tok
        if self.accept_word("var"):
            name = self.ident("variable name").text
            self.expect_sym("=")
            e = self.expr()
            self.expect_sym(";")
            return m.VarDecl(name, e, pos=t.pos)
        if self.accept_word("return"):
            e = self.expr()
            self.expect_sym(";")
            return m.Return(e, pos=t.pos)
        if self.accept_word("if"):
            self.expect_sym("(")
            cond = self.expr()
            self.expect_sym(")")
            then = self.block()
            orelse = self.block() if self.accept_word("else") else None
            return m.If(cond, then, orelse, pos=t.pos)
        if self.accept_word("call"):
            receiver, method = self.call_target()
            self.expect_sym("(")
            args = self.args()
            self.expect_sym(")")
            self.expect_sym(";")
            return m.CallStmt(receiver, method, args, pos=t.pos)
        target = self.navigation()
        self.expect_sym("=")
        e = self.expr()
        self.expect_sym(";")
        return m.Assign(target, e, pos=t.pos)

    def navigation(self):
        t = self.ident("name")
        node = m.Name(t.text, pos=t.pos)
        while self.tok.is_sym("."):
            self.advance()
            a = self.ident("attribute name")
            node = m.Nav(node, a.text, pos=a.pos)
        return node

    def call_target(self):
        """Parse ``nav . method`` and split off the trailing method name."""
        t = self.ident("receiver")
        node = m.Name(t.text, pos=t.pos)
        self.expect_sym(".")
        name = self.ident("method name")
        while self.tok.is_sym("."):
            self.advance()
            node = m.Nav(node, name.text, pos=name.pos)
            name = self.ident("method name")
        return node, name.text

    def args(self) -> list:
        if self.tok.is_sym(")"):
            return []
        result = [self.expr()]
        while self.accept_sym(","):
            result.append(self.expr())
        return result

    # -- expressions --

    def expr(self):
        return self.implies_expr()

    def _left_assoc(self, sub, ops, words):
        left = sub()
        while True:
            t = self.tok
            if words and t.kind == "ID" and t.text in ops:
                op = t.text
            elif not words and t.kind == "SYM" and t.text in ops:
                op = t.text
            else:
                return left
            self.advance()
            left = m.Binary(op, left, sub(), pos=t.pos)

    def implies_expr(self):
        return self._left_assoc(self.or_expr, ("implies",), True)

    def or_expr(self):
        return self._left_assoc(self.and_expr, ("or",), True)

    def and_expr(self):
        return self._left_assoc(self.not_expr, ("and",), True)

    def not_expr(self):
        t = self.tok
        if self.accept_word("not"):
            return m.Unary("not", self.not_expr(), pos=t.pos)
        return self.compare_expr()

    def compare_expr(self):
        return self._left_assoc(self.additive_expr, _COMPARE, False)

    def additive_expr(self):
        return self._left_assoc(self.multiplicative_expr, _ADDITIVE, False)

    def multiplicative_expr(self):
        return self._left_assoc(self.postfix_expr, _MULTIPLICATIVE, False)

    def postfix_expr(self):
        node = self.primary()
        while True:
            t = self.tok
            if t.is_sym("."):
                self.advance()
                a = self.ident("attribute name")
                node = m.Nav(node, a.text, pos=a.pos)
            elif t.is_sym("@"):
                self.advance()
                self.expect_word("state")
                node = m.StateOf(node, pos=t.pos)
            elif t.is_sym("->"):
                self.advance()
                op = self.tok
                if op.text not in ("size", "includes", "forAll", "exists") or op.kind != "ID":
                    self.error(f"expected collection operation, found {self.describe(op)}")
                self.advance()
                self.expect_sym("(")
                if op.text == "size":
                    node = m.SetOp(node, "size", pos=op.pos)
                elif op.text == "includes":
                    node = m.SetOp(node, "includes", None, self.expr(), pos=op.pos)
                else:
                    var = self.ident("bound variable").text
                    self.expect_sym("|")
                    node = m.SetOp(node, op.text, var, self.expr(), pos=op.pos)
                self.expect_sym(")")
            else:
                return node

    def primary(self):
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return m.Lit(self.check_int(t.value, t), pos=t.pos)
        if t.is_sym("-") and self.peek().kind == "INT":
            self.advance()
            n = self.advance()
            return m.Lit(self.check_int(-n.value, n), pos=t.pos)
        if t.kind == "STR":
            self.advance()
            return m.Lit(t.value, pos=t.pos)
        if t.is_word("true") or t.is_word("false"):
            self.advance()
            return m.Lit(t.text == "true", pos=t.pos)
        if t.is_sym("("):
            self.advance()
            e = self.expr()
            self.expect_sym(")")
            return e
        if t.kind == "ID" and t.text not in RESERVED:
            self.advance()
            return m.Name(t.text, pos=t.pos)
        self.error(f"expected expression, found {self.describe(t)}")

    def check_int(self, value, token):
        if not INT_MIN <= value <= INT_MAX:
            self.error("integer literal out of 64-bit range", token)
        return value

    def literal(self) -> m.Lit:
        e = self.primary()
        if not isinstance(e, m.Lit):
            self.error("expected literal", self.tokens[self.i - 1])
        return e

    # -- statecharts --

    def statechart(self) -> m.Statechart:
        start = self.expect_word("statechart")
        self.expect_word("for")
        owner = self.ident("class name").text
        self.expect_sym("{")
        self.expect_word("initial")
        initial = self.ident("state name").text
        self.expect_sym(";")
        sc = m.Statechart(owner, initial, pos=start.pos)
        while self.tok.is_word("state"):
            self.advance()
            sc.states.append(self.ident("state name").text)
            self.expect_sym(";")
        while self.tok.is_word("trans"):
            sc.transitions.append(self.transition())
        self.expect_sym("}")
        return self._src(sc)

    def transition(self) -> m.TransitionDef:
        start = self.expect_word("trans")
        source = self.ident("state name").text
        self.expect_sym("->")
        target = self.ident("state name").text
        self.expect_word("on")
        trigger = self.ident("trigger method").text
        self.expect_sym("(")
        params = []
        if not self.tok.is_sym(")"):
            params.append(self.ident("parameter name").text)
            while self.accept_sym(","):
                params.append(self.ident("parameter name").text)
        self.expect_sym(")")
        guard = actions = result = None
        if self.accept_sym("["):
            guard = self.expr()
            self.expect_sym("]")
        if self.accept_sym("/"):
            actions = self.block()
        if self.accept_word("returns"):
            result = self.expr()
        self.expect_sym(";")
        return m.TransitionDef(source, target, trigger, params, guard, actions, result, pos=start.pos)

    # -- object diagrams --

    def configuration(self, cls, keyword, anchors):
        start = self.expect_word(keyword)
        name = self.ident("configuration name").text
        self.expect_sym("{")
        conf = cls(name, pos=start.pos)
        while not self.tok.is_sym("}"):
            t = self.tok
            anchored = anchors and self.accept_word("anchor")
            self.expect_word("object")
            oname = self.ident("object name").text
            self.expect_sym(":")
            ocls = self.ident("class name").text
            self.expect_sym("{")
            decl = m.ObjectDecl(oname, ocls, anchor=anchored, pos=t.pos)
            while not self.tok.is_sym("}"):
                a = self.ident("attribute name")
                self.expect_sym("=")
                value = self.value()
                self.expect_sym(";")
                decl.assignments.append(m.Assignment(a.text, value, pos=a.pos))
            self.expect_sym("}")
            conf.objects.append(decl)
        self.expect_sym("}")
        return self._src(conf)

    def value(self):
        t = self.tok
        if t.is_sym("{"):
            self.advance()
            names = []
            if not self.tok.is_sym("}"):
                names.append(self.ident("object name").text)
                while self.accept_sym(","):
                    names.append(self.ident("object name").text)
            self.expect_sym("}")
            return m.SetValue(names, pos=t.pos)
        if t.kind == "ID" and t.text not in RESERVED:
            self.advance()
            return m.Name(t.text, pos=t.pos)
        return self.literal()

    # -- sequences --

    def sequence(self) -> m.SequenceDefinition:
        start = self.expect_word("sequence")
        name = self.ident("sequence name").text
        strict = self.accept_word("strict")
        self.expect_sym("{")
        seq = m.SequenceDefinition(name, strict=strict, pos=start.pos)
        while not self.tok.is_sym("}"):
            seq.steps.append(self.step())
        self.expect_sym("}")
        return self._src(seq)

    def step(self):
        t = self.tok
        if self.accept_word("call"):
            target = self.ident("object name").text
            self.expect_sym(".")
            method = self.ident("method name").text
            self.expect_sym("(")
            args = self.args()
            for a in args:
                if not isinstance(a, (m.Lit, m.Name)):
                    self.error("driver arguments must be literals or object names")
            self.expect_sym(")")
            expect = None
            if self.accept_word("expect"):
                expect = self.literal()
            self.expect_sym(";")
            return m.Stimulus(target, method, args, expect, pos=t.pos)
        if self.accept_word("expect"):
            caller = self.ident("object name").text
            self.expect_sym("->")
            callee = self.ident("object name").text
            self.expect_sym(":")
            method = self.ident("method name").text
            self.expect_sym(";")
            return m.ExpectMessage(caller, callee, method, pos=t.pos)
        if self.accept_word("assert"):
            e = self.expr()
            self.expect_sym(";")
            return m.AssertStep(e, pos=t.pos)
        self.error(f"expected 'call', 'expect' or 'assert', found {self.describe(t)}")

    # -- invariants, tests, manifest --

    def invariant(self) -> m.NamedInvariant:
        start = self.expect_word("inv")
        name = self.ident("invariant name").text
        self.expect_word("for")
        context = self.ident("class name").text
        self.expect_sym(":")
        e = self.expr()
        self.expect_sym(";")
        return self._src(m.NamedInvariant(name, context, e, pos=start.pos))

    def test_case(self) -> m.TestCase:
        start = self.expect_word("test")
        name = self.ident("test name").text
        self.expect_word("category")
        cat = self.tok
        if cat.kind != "ID" or cat.text not in m.CATEGORIES:
            self.error(f"expected unit, integration or acceptance, found {self.describe(cat)}")
        self.advance()
        self.expect_sym("{")
        self.expect_word("fixture")
        fixture = self.ident("configuration name").text
        self.expect_sym(";")
        self.expect_word("driver")
        driver = self.ident("sequence name").text
        self.expect_sym(";")
        oracle = None
        if self.tok.is_word("oracle"):
            ot = self.advance()
            self.expect_sym("{")
            oracle = m.Oracle(pos=ot.pos)
            if self.accept_word("matches"):
                oracle.pattern = self.ident("pattern name").text
                self.expect_sym(";")
            while self.accept_word("assert"):
                oracle.asserts.append(self.expr())
                self.expect_sym(";")
            self.expect_sym("}")
        self.expect_sym("}")
        return self._src(m.TestCase(name, cat.text, fixture, driver, oracle, pos=start.pos))

    def manifest(self) -> m.Manifest:
        start = self.expect_word("project")
        name = self.ident("project name").text
        self.expect_sym("{")
        man = m.Manifest(name, pos=start.pos)
        while self.accept_word("files"):
            t = self.tok
            if t.kind != "STR":
                self.error("expected a quoted glob")
            self.advance()
            man.files.append(t.value)
            self.expect_sym(";")
        self.expect_sym("}")
        return self._src(man)


def parse_text(text: str, path: Optional[str] = None) -> m.Model:
    """Parse one source text; raise ParseError with every syntax diagnostic."""
    p = Parser(text, path)
    model = p.parse()
    if p.diagnostics:
        raise ParseError(sorted(p.diagnostics, key=lambda d: (d.line, d.column)))
    return model


def parse_literal(text: str) -> Optional[m.Lit]:
    """The literal spelled by ``text``, or None when it is anything else."""
    p = Parser(text)
    try:
        lit = p.literal()
    except _Syntax:
        return None
    return lit if p.tok.kind == "EOF" and not p.diagnostics else None


def merge_models(parts: Iterable[m.Model], name: str = "model") -> m.Model:
    merged = m.Model(name=name)
    for part in parts:
        for section in m.Model.SECTIONS:
            getattr(merged, section).extend(getattr(part, section))
        if part.manifest is not None and merged.manifest is None:
            merged.manifest = part.manifest
    if merged.manifest is not None:
        merged.name = merged.manifest.name
    return merged


def parse_model(sources: Iterable[SourceUnit], name: str = "model") -> m.Model:
    """Parse several sources into one model, ordered by path then document order.

    Duplicate top-level names across files are reported by the
    well-formedness checker, which sees the merged model.
    """
    parts, diagnostics = [], []
    for unit in sorted(sources, key=lambda u: u.path):
        p = Parser(unit.text, unit.path)
        parts.append(p.parse())
        diagnostics.extend(p.diagnostics)
    if diagnostics:
        raise ParseError(diagnostics)
    return merge_models(parts, name)
