"""Template-driven text generation from models.

Template syntax::

    ${var.field}                      value of a field of a loop variable
    ${model.name}                     the model name
    @foreach KIND VAR@ ... @end@      KIND in class, attribute, method, state, transition, test
    @if [not] VAR.field@ ... @end@    boolean fields, or strings (true when non-empty)
    @file PATH@ ... @end@             route the enclosed text to PATH (placeholders allowed)

A line holding nothing but one directive tag is dropped entirely, so block
structure can be written one tag per line.  Loops over attributes, methods,
states and transitions iterate the members of the innermost enclosing class
(or all of them at top level); everything iterates in document order.
Text outside any ``@file`` block goes to ``<template>.txt``, which is
omitted when it would be whitespace-only.
"""

from __future__ import annotations

import posixpath
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import model as m
from .diagnostics import AmwError
from .printer import format_expr, format_params

KINDS = ("class", "attribute", "method", "state", "transition", "test")

_TAG = re.compile(r"@(foreach|if|file)\b([^@\n]*)@|@end@")
_SUBST = re.compile(r"\$\{([^}]*)\}")
_STANDALONE = re.compile(r"[ \t]*(?:@(?:foreach|if|file)\b[^@\n]*@|@end@)[ \t]*\n?")


class TemplateError(AmwError):
    def __init__(self, message: str, where: str = ""):
        super().__init__("E_TEMPLATE", f"{where}: {message}" if where else message)


@dataclass
class Template:
    name: str
    text: str
    path: str = ""


@dataclass
class GenOutput:
    files: list = field(default_factory=list)  # (relative path, text)

    def paths(self) -> list:
        return [p for p, _ in self.files]

    def text_of(self, path: str) -> Optional[str]:
        for p, t in self.files:
            if p == path:
                return t
        return None


# -- element views ------------------------------------------------------------


def _class_fields(c: m.ClassDef, model: m.Model) -> dict:
    chart = model.chart_of(c.name)
    return {
        "name": c.name,
        "superclass": c.superclass or "",
        "hasSuperclass": c.superclass is not None,
        "published": c.published,
        "abstract": c.abstract,
        "hasAttributes": bool(c.attributes),
        "hasMethods": bool(c.methods),
        "hasChart": chart is not None,
        "initial": chart.initial if chart else "",
    }


def _attribute_fields(a: m.AttributeDef, owner: str) -> dict:
    return {"name": a.name, "type": str(a.type), "published": a.published, "owner": owner}


def _method_fields(meth: m.MethodDef, owner: str) -> dict:
    return {
        "name": meth.name,
        "params": format_params(meth.params),
        "paramNames": ", ".join(p.name for p in meth.params),
        "returnType": str(meth.return_type) if meth.return_type else "",
        "hasReturn": meth.return_type is not None,
        "hasBody": meth.body is not None,
        "abstract": meth.abstract,
        "published": meth.published,
        "signature": f"{meth.name}({format_params(meth.params)})"
                     + (f": {meth.return_type}" if meth.return_type else ""),
        "owner": owner,
    }


def _state_fields(s: str, chart: m.Statechart) -> dict:
    return {"name": s, "initial": s == chart.initial, "owner": chart.owner}


def _transition_fields(i: int, t: m.TransitionDef, chart: m.Statechart) -> dict:
    return {
        "index": str(i),
        "source": t.source,
        "target": t.target,
        "trigger": t.trigger,
        "params": ", ".join(t.params),
        "guard": format_expr(t.guard) if t.guard is not None else "",
        "hasGuard": t.guard is not None,
        "result": format_expr(t.result) if t.result is not None else "",
        "hasResult": t.result is not None,
        "hasActions": t.actions is not None,
        "owner": chart.owner,
    }


def _test_fields(t: m.TestCase) -> dict:
    pattern = t.oracle.pattern if t.oracle and t.oracle.pattern else ""
    return {
        "name": t.name,
        "category": t.category,
        "fixture": t.fixture,
        "driver": t.driver,
        "pattern": pattern,
        "hasPattern": bool(pattern),
        "assertCount": str(len(t.oracle.asserts) if t.oracle else 0),
    }


FIELDS = {
    "class": set(_class_fields(m.ClassDef("X"), m.Model())),
    "attribute": set(_attribute_fields(m.AttributeDef("x", m.INT), "X")),
    "method": set(_method_fields(m.MethodDef("x"), "X")),
    "state": {"name", "initial", "owner"},
    "transition": set(_transition_fields(0, m.TransitionDef("a", "b", "t"), m.Statechart("X", "a"))),
    "test": set(_test_fields(m.TestCase("t", "unit", "f", "d"))),
}


def _children(model: m.Model, kind: str, env: list) -> list:
    """(element, fields) pairs for a loop of ``kind`` under the environment stack."""
    owner = next((el for k, el, _ in reversed(env) if k == "class"), None)
    classes = [owner] if owner is not None else model.classes
    if kind == "class":
        return [(c, _class_fields(c, model)) for c in model.classes]
    if kind == "attribute":
        return [(a, _attribute_fields(a, c.name)) for c in classes for a in c.attributes]
    if kind == "method":
        return [(x, _method_fields(x, c.name)) for c in classes for x in c.methods]
    if kind == "test":
        return [(t, _test_fields(t)) for t in model.tests]
    charts = [model.chart_of(c.name) for c in classes] if owner is not None else model.statecharts
    charts = [sc for sc in charts if sc is not None]
    if kind == "state":
        return [(s, _state_fields(s, sc)) for sc in charts for s in sc.states]
    return [(t, _transition_fields(i, t, sc)) for sc in charts for i, t in enumerate(sc.transitions)]


# -- parsing ------------------------------------------------------------------


@dataclass
class _Node:
    kind: str  # text | foreach | if | file
    line: int
    text: str = ""
    arg: tuple = ()
    body: list = field(default_factory=list)


def _tokens(text: str):
    """Yield (kind, line, payload) with standalone tag lines stripped."""
    for lineno, line in enumerate(text.splitlines(keepends=True), 1):
        if _STANDALONE.fullmatch(line):
            tag = _TAG.search(line)
            yield ("tag", lineno, tag)
            continue
        pos = 0
        for tag in _TAG.finditer(line):
            if tag.start() > pos:
                yield ("text", lineno, line[pos:tag.start()])
            yield ("tag", lineno, tag)
            pos = tag.end()
        if pos < len(line):
            yield ("text", lineno, line[pos:])


def parse_template(t: Template) -> list:
    where = t.path or t.name
    root = _Node("root", 0)
    stack = [root]
    for kind, line, payload in _tokens(t.text):
        if kind == "text":
            stack[-1].body.append(_Node("text", line, payload))
            continue
        directive, arg = payload.group(1), (payload.group(2) or "").split()
        if directive is None:
            if len(stack) == 1:
                raise TemplateError("@end@ without an open block", f"{where}:{line}")
            stack.pop()
            continue
        if directive == "foreach":
            if len(arg) != 2 or arg[0] not in KINDS or not arg[1].isidentifier():
                raise TemplateError("expected @foreach KIND VAR@", f"{where}:{line}")
        elif directive == "if":
            if not (len(arg) == 1 or (len(arg) == 2 and arg[0] == "not")):
                raise TemplateError("expected @if [not] PATH@", f"{where}:{line}")
            arg = (arg[0] == "not" and len(arg) == 2, arg[-1])
        elif directive == "file":
            if len(arg) != 1:
                raise TemplateError("expected @file PATH@", f"{where}:{line}")
            if any(n.kind == "file" for n in stack):
                raise TemplateError("@file@ blocks cannot nest", f"{where}:{line}")
        node = _Node(directive, line, arg=tuple(arg))
        stack[-1].body.append(node)
        stack.append(node)
    if len(stack) > 1:
        raise TemplateError(f"unclosed @{stack[-1].kind}@ block", f"{where}:{stack[-1].line}")
    return root.body


def _validate(nodes, scope: dict, where: str):
    """Check every path against the element kinds of the loop variables in scope."""
    def check_path(path, line):
        parts = path.strip().split(".")
        if parts == ["model", "name"]:
            return
        if len(parts) != 2 or parts[0] not in scope:
            raise TemplateError(f"unknown path '{path.strip()}'", f"{where}:{line}")
        if parts[1] not in FIELDS[scope[parts[0]]]:
            raise TemplateError(f"unknown path '{path.strip()}' for a {scope[parts[0]]}", f"{where}:{line}")

    for n in nodes:
        if n.kind == "text":
            for s in _SUBST.finditer(n.text):
                check_path(s.group(1), n.line)
        elif n.kind == "foreach":
            _validate(n.body, {**scope, n.arg[1]: n.arg[0]}, where)
        else:
            if n.kind == "if":
                check_path(n.arg[1], n.line)
            else:
                for s in _SUBST.finditer(n.arg[0]):
                    check_path(s.group(1), n.line)
            _validate(n.body, scope, where)


# -- rendering ----------------------------------------------------------------


def _lookup(env: list, path: str, model: m.Model):
    var, _, attr = path.strip().partition(".")
    if var == "model" and attr == "name":
        return model.name
    for _, el, (name, fields) in reversed(env):
        if name == var:
            return fields[attr]
    raise TemplateError(f"unknown path '{path.strip()}'")


def _show(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _subst(text: str, env: list, model: m.Model) -> str:
    return _SUBST.sub(lambda s: _show(_lookup(env, s.group(1), model)), text)


def _safe_path(raw: str, where: str) -> str:
    p = raw.replace("\\", "/")
    norm = posixpath.normpath(p)
    if not p or p.startswith("/") or norm == "." or norm == ".." or norm.startswith("../") \
            or re.match(r"^[A-Za-z]:", p):
        raise TemplateError(f"output path '{raw}' escapes the output directory", where)
    return norm


def render(model: m.Model, template: Template) -> GenOutput:
    """Expand ``template`` over ``model``; deterministic and side-effect free."""
    where = template.path or template.name
    nodes = parse_template(template)
    _validate(nodes, {}, where)
    default = []
    files = {}

    def run(nodes, env, out):
        for n in nodes:
            if n.kind == "text":
                out.append(_subst(n.text, env, model))
            elif n.kind == "foreach":
                kind, var = n.arg
                for el, fields in _children(model, kind, env):
                    run(n.body, env + [(kind, el, (var, fields))], out)
            elif n.kind == "if":
                negate, path = n.arg
                value = _lookup(env, path, model)
                if bool(value) != negate:
                    run(n.body, env, out)
            else:
                path = _safe_path(_subst(n.arg[0], env, model), f"{where}:{n.line}")
                if path in files:
                    raise TemplateError(f"duplicate output path '{path}'", f"{where}:{n.line}")
                buf = []
                run(n.body, env, buf)
                files[path] = "".join(buf)

    run(nodes, [], default)
    out = GenOutput()
    text = "".join(default)
    if text.strip():
        name = f"{template.name}.txt"
        if name in files:
            raise TemplateError(f"duplicate output path '{name}'", where)
        out.files.append((name, text))
    out.files.extend(files.items())
    return out


# -- template sources ---------------------------------------------------------


def builtin_templates() -> list:
    """The shipped ``doc`` and ``skeleton`` templates."""
    folder = resources.files("amw") / "templates"
    out = []
    for name in ("doc", "skeleton"):
        out.append(Template(name, (folder / f"{name}.amt").read_text(encoding="utf-8"), f"<builtin>/{name}.amt"))
    return out


def find_template(project_dir, name: str) -> Template:
    """A user template ``templates/NAME.amt`` takes precedence over a built-in one."""
    user = Path(project_dir) / "templates" / f"{name}.amt"
    if user.is_file():
        return Template(name, user.read_text(encoding="utf-8"), str(user))
    for t in builtin_templates():
        if t.name == name:
            return t
    raise TemplateError(f"no template named '{name}'")
