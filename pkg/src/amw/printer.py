"""Canonical pretty-printer.

The output is a fixed point of parse followed by print: two-space
indentation, one member per line, sections in a fixed order, and only the
parentheses that precedence requires.
"""

from __future__ import annotations

from . import model as m

INDENT = "  "

_PREC = {"implies": 1, "or": 2, "and": 3, "not": 4}
_PREC.update({op: 5 for op in m.COMPARE_OPS})
_PREC.update({"+": 6, "-": 6, "*": 7})
POSTFIX = 8


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_literal(lit: m.Lit) -> str:
    if lit.kind == "Bool":
        return "true" if lit.value else "false"
    if lit.kind == "Int":
        return str(lit.value)
    return quote(lit.value)


def precedence(e) -> int:
    if isinstance(e, m.Binary):
        return _PREC[e.op]
    if isinstance(e, m.Unary):
        return _PREC["not"]
    return POSTFIX


def format_expr(e) -> str:
    if isinstance(e, m.Lit):
        return format_literal(e)
    if isinstance(e, m.Name):
        return e.ident
    if isinstance(e, m.Nav):
        return f"{_postfix_operand(e.source)}.{e.attr}"
    if isinstance(e, m.StateOf):
        return f"{_postfix_operand(e.source)}@state"
    if isinstance(e, m.SetOp):
        src = _postfix_operand(e.source)
        if e.op == "size":
            return f"{src}->size()"
        if e.op == "includes":
            return f"{src}->includes({format_expr(e.arg)})"
        return f"{src}->{e.op}({e.var} | {format_expr(e.arg)})"
    if isinstance(e, m.Unary):
        inner = format_expr(e.operand)
        if precedence(e.operand) < _PREC["not"]:
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(e, m.Binary):
        p = _PREC[e.op]
        left, right = format_expr(e.left), format_expr(e.right)
        if precedence(e.left) < p:
            left = f"({left})"
        if precedence(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def _postfix_operand(e) -> str:
    text = format_expr(e)
    # a negative literal would otherwise bind the '-' after the navigation
    if precedence(e) < POSTFIX or (isinstance(e, m.Lit) and e.kind == "Int" and e.value < 0):
        return f"({text})"
    return text


def format_value(v) -> str:
    if isinstance(v, m.SetValue):
        return "{" + ", ".join(v.names) + "}"
    if isinstance(v, m.Name):
        return v.ident
    return format_literal(v)


def format_params(params) -> str:
    return ", ".join(f"{p.name}: {p.type}" for p in params)


class _Writer:
    def __init__(self):
        self.lines = []

    def line(self, depth: int, text: str):
        self.lines.append(INDENT * depth + text)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _block(w: _Writer, depth: int, head: str, stmts):
    w.line(depth, head + " {")
    for s in stmts:
        _statement(w, depth + 1, s)
    w.line(depth, "}")


def _statement(w: _Writer, depth: int, s):
    if isinstance(s, m.VarDecl):
        w.line(depth, f"var {s.name} = {format_expr(s.expr)};")
    elif isinstance(s, m.Assign):
        w.line(depth, f"{format_expr(s.target)} = {format_expr(s.expr)};")
    elif isinstance(s, m.Return):
        w.line(depth, f"return {format_expr(s.expr)};")
    elif isinstance(s, m.CallStmt):
        args = ", ".join(format_expr(a) for a in s.args)
        w.line(depth, f"call {format_expr(s.receiver)}.{s.method}({args});")
    elif isinstance(s, m.If):
        _block(w, depth, f"if ({format_expr(s.cond)})", s.then)
        if s.orelse is not None:
            w.lines[-1] += " else {"
            for inner in s.orelse:
                _statement(w, depth + 1, inner)
            w.line(depth, "}")
    else:
        raise TypeError(f"not a statement: {s!r}")


def format_body(stmts) -> str:
    """Canonical text of a statement list, used to compare method bodies."""
    w = _Writer()
    for s in stmts:
        _statement(w, 0, s)
    return w.text() if stmts else ""


def _method_head(meth: m.MethodDef) -> str:
    mods = ("published " if meth.published else "") + ("abstract " if meth.abstract else "")
    head = f"{mods}method {meth.name}({format_params(meth.params)})"
    if meth.return_type is not None:
        head += f": {meth.return_type}"
    return head


def _class(w: _Writer, c: m.ClassDef):
    mods = ("published " if c.published else "") + ("abstract " if c.abstract else "")
    head = f"{mods}class {c.name}"
    if c.superclass:
        head += f" extends {c.superclass}"
    w.line(0, head + " {")
    for a in c.attributes:
        w.line(1, f"{'published ' if a.published else ''}attr {a.name}: {a.type};")
    for meth in c.methods:
        if meth.body is None:
            w.line(1, _method_head(meth) + ";")
        else:
            _block(w, 1, _method_head(meth), meth.body)
    w.line(0, "}")


def _transition(w: _Writer, t: m.TransitionDef):
    head = f"trans {t.source} -> {t.target} on {t.trigger}({', '.join(t.params)})"
    if t.guard is not None:
        head += f" [{format_expr(t.guard)}]"
    tail = ""
    if t.result is not None:
        tail = f" returns {format_expr(t.result)}"
    if t.actions is None:
        w.line(1, head + tail + ";")
        return
    w.line(1, head + " / {")
    for s in t.actions:
        _statement(w, 2, s)
    w.line(1, "}" + tail + ";")


def _statechart(w: _Writer, sc: m.Statechart):
    w.line(0, f"statechart for {sc.owner} {{")
    w.line(1, f"initial {sc.initial};")
    for s in sc.states:
        w.line(1, f"state {s};")
    for t in sc.transitions:
        _transition(w, t)
    w.line(0, "}")


def _configuration(w: _Writer, conf, keyword: str):
    w.line(0, f"{keyword} {conf.name} {{")
    for o in conf.objects:
        prefix = "anchor " if getattr(o, "anchor", False) else ""
        w.line(1, f"{prefix}object {o.name}: {o.cls} {{")
        for a in o.assignments:
            w.line(2, f"{a.attr} = {format_value(a.value)};")
        w.line(1, "}")
    w.line(0, "}")


def format_step(s) -> str:
    if isinstance(s, m.Stimulus):
        args = ", ".join(format_expr(a) for a in s.args)
        text = f"call {s.target}.{s.method}({args})"
        if s.expect is not None:
            text += f" expect {format_literal(s.expect)}"
        return text + ";"
    if isinstance(s, m.ExpectMessage):
        return f"expect {s.caller} -> {s.callee}: {s.method};"
    return f"assert {format_expr(s.expr)};"


def _sequence(w: _Writer, seq: m.SequenceDefinition):
    w.line(0, f"sequence {seq.name}{' strict' if seq.strict else ''} {{")
    for s in seq.steps:
        w.line(1, format_step(s))
    w.line(0, "}")


def _invariant(w: _Writer, inv: m.NamedInvariant):
    w.line(0, f"inv {inv.name} for {inv.context}: {format_expr(inv.expr)};")


def _test(w: _Writer, t: m.TestCase):
    w.line(0, f"test {t.name} category {t.category} {{")
    w.line(1, f"fixture {t.fixture};")
    w.line(1, f"driver {t.driver};")
    if t.oracle is not None:
        w.line(1, "oracle {")
        if t.oracle.pattern is not None:
            w.line(2, f"matches {t.oracle.pattern};")
        for a in t.oracle.asserts:
            w.line(2, f"assert {format_expr(a)};")
        w.line(1, "}")
    w.line(0, "}")


def _manifest(w: _Writer, man: m.Manifest):
    w.line(0, f"project {man.name} {{")
    for f in man.files:
        w.line(1, f"files {quote(f)};")
    w.line(0, "}")


def print_item(item) -> str:
    w = _Writer()
    if isinstance(item, m.ClassDef):
        _class(w, item)
    elif isinstance(item, m.Statechart):
        _statechart(w, item)
    elif isinstance(item, m.PatternConfiguration):
        _configuration(w, item, "pattern")
    elif isinstance(item, m.ObjectConfiguration):
        _configuration(w, item, "objects")
    elif isinstance(item, m.SequenceDefinition):
        _sequence(w, item)
    elif isinstance(item, m.NamedInvariant):
        _invariant(w, item)
    elif isinstance(item, m.TestCase):
        _test(w, item)
    elif isinstance(item, m.Manifest):
        _manifest(w, item)
    else:
        raise TypeError(f"not a top-level item: {item!r}")
    return w.text()


def print_model(model: m.Model) -> str:
    return "\n".join(print_item(item) for item in model.items())
