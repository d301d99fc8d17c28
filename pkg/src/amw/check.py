"""Static semantics: typing of expressions and the well-formedness checker."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import model as m
from .diagnostics import Diagnostic, ModelError, TypeCheckError, diag

TypeScope = dict  # name -> TypeRef


# -- typing -------------------------------------------------------------------


class Typer:
    """Computes expression types against a model.

    ``mentions`` collects every attribute resolved through navigation as
    ``(defining class, AttributeDef)``; the acceptance-test check uses it.
    """

    def __init__(self, model: m.Model):
        self.model = model
        self.mentions = []

    def fail(self, message, node, code="E_TYPE"):
        raise TypeCheckError(message, getattr(node, "pos", None), code)

    def class_type(self, t: m.TypeRef, node) -> str:
        if not t.is_object or self.model.cls(t.name) is None:
            self.fail(f"expected an object, found {t}", node)
        return t.name

    def related(self, a: str, b: str) -> bool:
        return self.model.is_subclass(a, b) or self.model.is_subclass(b, a)

    def compatible(self, a: m.TypeRef, b: m.TypeRef) -> bool:
        if a == b:
            return True
        if a.is_primitive or b.is_primitive or a.is_set != b.is_set:
            return False
        return self.related(a.name, b.name)

    def assignable(self, target: m.TypeRef, value: m.TypeRef) -> bool:
        if target == value:
            return True
        if target.is_primitive or value.is_primitive or target.is_set != value.is_set:
            return False
        return self.model.is_subclass(value.name, target.name)

    def type_of(self, e, scope: TypeScope) -> m.TypeRef:
        if isinstance(e, m.Lit):
            return m.TypeRef(e.kind)
        if isinstance(e, m.Name):
            if e.ident not in scope:
                self.fail(f"unresolved name '{e.ident}'", e, "E_UNRESOLVED")
            return scope[e.ident]
        if isinstance(e, m.Nav):
            cls = self.class_type(self.type_of(e.source, scope), e)
            found = self.model.find_attribute(cls, e.attr)
            if found is None:
                self.fail(f"class {cls} has no attribute '{e.attr}'", e, "E_UNRESOLVED")
            self.mentions.append(found)
            return found[1].type
        if isinstance(e, m.StateOf):
            cls = self.class_type(self.type_of(e.source, scope), e)
            if self.model.chart_for_class(cls) is None:
                self.fail(f"class {cls} has no statechart", e)
            return m.STRING
        if isinstance(e, m.Unary):
            if self.type_of(e.operand, scope) != m.BOOL:
                self.fail("operand of 'not' must be Bool", e)
            return m.BOOL
        if isinstance(e, m.Binary):
            lt, rt = self.type_of(e.left, scope), self.type_of(e.right, scope)
            if e.op in m.BOOL_OPS:
                if lt != m.BOOL or rt != m.BOOL:
                    self.fail(f"operands of '{e.op}' must be Bool, found {lt} and {rt}", e)
                return m.BOOL
            if e.op in ("=", "<>"):
                if not self.compatible(lt, rt):
                    self.fail(f"cannot compare {lt} with {rt}", e)
                return m.BOOL
            if lt != m.INT or rt != m.INT:
                self.fail(f"operands of '{e.op}' must be Int, found {lt} and {rt}", e)
            return m.BOOL if e.op in m.COMPARE_OPS else m.INT
        if isinstance(e, m.SetOp):
            st = self.type_of(e.source, scope)
            if not st.is_set:
                self.fail(f"'->{e.op}' needs a set, found {st}", e)
            if e.op == "size":
                return m.INT
            if e.op == "includes":
                at = self.type_of(e.arg, scope)
                if not at.is_object or not self.related(at.name, st.name):
                    self.fail(f"cannot test {st} for inclusion of {at}", e)
                return m.BOOL
            if e.var == "self":
                self.fail("'self' cannot be rebound", e)
            inner = dict(scope)
            inner[e.var] = m.TypeRef(st.name)
            if self.type_of(e.arg, inner) != m.BOOL:
                self.fail(f"body of '->{e.op}' must be Bool", e)
            return m.BOOL
        raise TypeError(f"not an expression: {e!r}")


def type_of(expr, scope: TypeScope, model: Optional[m.Model] = None) -> m.TypeRef:
    """Type of ``expr`` given the types of its free names; raises TypeCheckError."""
    return Typer(model or m.Model()).type_of(expr, scope)


# -- member lookup ------------------------------------------------------------


@dataclass(frozen=True)
class MemberResolution:
    defining_class: str
    definition: object
    kind: str  # attribute | method
    subclass_only: Optional[bool] = None


def lookup_member(model: m.Model, cls: str, member: str, kind: Optional[str] = None,
                  relative_to: Optional[str] = None) -> MemberResolution:
    """Walk the inheritance chain from ``cls`` upward looking for ``member``.

    With ``relative_to`` (an ancestor of ``cls``) the result also tells whether
    the member is declared below that ancestor, i.e. unavailable there.
    """
    if model.cls(cls) is None:
        raise ModelError("E_UNKNOWN_CLASS", f"no class '{cls}'")
    for anc in model.ancestors(cls):
        c = model.cls(anc)
        found = None
        if kind in (None, "attribute") and c.attribute(member) is not None:
            found = (c.attribute(member), "attribute")
        elif kind in (None, "method") and c.method(member) is not None:
            found = (c.method(member), "method")
        if found is not None:
            below = None
            if relative_to is not None:
                below = anc not in model.ancestors(relative_to)
            return MemberResolution(anc, found[0], found[1], below)
    raise ModelError("E_UNKNOWN_MEMBER", f"class {cls} has no member '{member}'")


# -- published surface --------------------------------------------------------


def _publication_violations(model: m.Model):
    for c in model.classes:
        if c.published:
            continue
        for member in c.attributes + c.methods:
            if member.published:
                yield c, member


def published_surface(model: m.Model) -> frozenset:
    """Pairs ``(Class,)`` and ``(Class, member)`` marked published."""
    for c, member in _publication_violations(model):
        raise ModelError("E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS",
                         f"{c.name}.{member.name} is published but {c.name} is not")
    surface = set()
    for c in model.classes:
        if c.published:
            surface.add((c.name,))
        for member in c.attributes + c.methods:
            if member.published:
                surface.add((c.name, member.name))
    return frozenset(surface)


# -- well-formedness ----------------------------------------------------------


class Checker:
    def __init__(self, model: m.Model):
        self.model = model
        self.typer = Typer(model)
        self.diags = []
        self.path = None

    def report(self, code, message, node=None, pos=None):
        if pos is None and node is not None:
            pos = getattr(node, "pos", None)
        self.diags.append(diag(code, message, pos, self.path))

    def run(self) -> list:
        self.check_duplicates()
        for c in self.model.classes:
            self.path = c.source
            self.check_class(c)
        for sc in self.model.statecharts:
            self.path = sc.source
            self.check_statechart(sc)
        for conf in self.model.configs:
            self.path = conf.source
            self.check_configuration(conf, pattern=False)
        for pat in self.model.patterns:
            self.path = pat.source
            self.check_configuration(pat, pattern=True)
        for inv in self.model.invariants:
            self.path = inv.source
            self.check_invariant(inv)
        for t in self.model.tests:
            self.path = t.source
            self.check_test(t)
        unique = list(dict.fromkeys(self.diags))
        return sorted(unique, key=lambda d: (d.path or "", d.line, d.column))

    # -- names --

    def check_duplicates(self):
        for section in m.Model.SECTIONS:
            seen = set()
            for item in getattr(self.model, section):
                key = item.name
                if key in seen:
                    self.path = item.source
                    kind = "statechart for" if section == "statecharts" else section.rstrip("s")
                    self.report("E_DUPLICATE", f"duplicate {kind} '{key}'", item)
                seen.add(key)

    def check_type(self, t: m.TypeRef, node):
        if t.is_set and t.name in m.PRIMITIVES:
            self.report("E_BAD_TYPE", f"sets hold class instances only: {t}", node)
        elif t.name not in m.PRIMITIVES and self.model.cls(t.name) is None:
            self.report("E_UNKNOWN_CLASS", f"unknown type '{t.name}'", node)

    def types_ok(self, *types) -> bool:
        return all(t is None or t.name in m.PRIMITIVES or self.model.cls(t.name) is not None
                   for t in types)

    # -- classes --

    def in_cycle(self, c: m.ClassDef) -> bool:
        seen, cur = set(), c
        while cur is not None and cur.superclass:
            if cur.superclass == c.name:
                return True
            if cur.name in seen:
                return False
            seen.add(cur.name)
            cur = self.model.cls(cur.superclass)
        return False

    def check_class(self, c: m.ClassDef):
        if c.name in m.PRIMITIVES:
            self.report("E_RESERVED_NAME", f"'{c.name}' is a primitive type name", c)
        if c.superclass and self.model.cls(c.superclass) is None:
            self.report("E_UNKNOWN_CLASS", f"superclass '{c.superclass}' is not declared", c)
        cyclic = self.in_cycle(c)
        if cyclic:
            self.report("E_INHERIT_CYCLE", f"class {c.name} inherits from itself", c)
        inherited = [] if cyclic else self.model.ancestors(c.name)[1:]
        for member in c.attributes + c.methods:
            if member.published and not c.published:
                self.report("E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS",
                            f"{c.name}.{member.name} is published but {c.name} is not", member)
        seen = set()
        for a in c.attributes:
            self.check_type(a.type, a)
            if a.name in seen:
                self.report("E_DUPLICATE_MEMBER", f"attribute '{a.name}' declared twice in {c.name}", a)
            seen.add(a.name)
            for anc in inherited:
                if self.model.cls(anc).attribute(a.name) is not None:
                    self.report("E_SHADOWING", f"attribute '{a.name}' already declared in {anc}", a)
                    break
        seen = set()
        for meth in c.methods:
            self.check_method(c, meth, inherited, meth.name in seen)
            seen.add(meth.name)
        if not c.abstract and not cyclic:
            for name in self.unimplemented(c.name):
                self.report("E_ABSTRACT_METHOD", f"concrete class {c.name} leaves method '{name}' abstract", c)

    def unimplemented(self, cls: str) -> list:
        names = []
        for anc in self.model.ancestors(cls):
            for meth in self.model.cls(anc).methods:
                if meth.name in names:
                    continue
                found = self.model.find_method(cls, meth.name)
                if found and found[1].abstract:
                    names.append(meth.name)
        return names

    def check_method(self, c, meth: m.MethodDef, inherited, duplicate):
        if duplicate:
            self.report("E_DUPLICATE_MEMBER", f"method '{meth.name}' declared twice in {c.name}", meth)
        pnames = set()
        for p in meth.params:
            self.check_type(p.type, p)
            if p.name in pnames or p.name == "self":
                self.report("E_DUPLICATE", f"bad or repeated parameter '{p.name}'", p)
            pnames.add(p.name)
        if meth.return_type is not None:
            self.check_type(meth.return_type, meth)
        if meth.abstract and meth.body is not None:
            self.report("E_ABSTRACT_BODY", f"abstract method '{meth.name}' has a body", meth)
        for anc in inherited:
            base = self.model.cls(anc).method(meth.name)
            if base is not None:
                if base.signature() != meth.signature():
                    self.report("E_OVERRIDE_MISMATCH",
                                f"'{meth.name}' does not match the signature declared in {anc}", meth)
                break
        if meth.body is not None and self.types_ok(meth.return_type, *(p.type for p in meth.params)):
            scope = {"self": m.TypeRef(c.name)}
            scope.update({p.name: p.type for p in meth.params})
            self.check_block(meth.body, scope, meth.return_type, allow_return=True)

    # -- action blocks --

    def expr_type(self, e, scope, node=None):
        try:
            return self.typer.type_of(e, scope)
        except TypeCheckError as exc:
            self.report(exc.code, exc.message, pos=exc.pos or getattr(node, "pos", None))
            return None

    def expect_bool(self, e, scope, what, node=None):
        t = self.expr_type(e, scope, node)
        if t is not None and t != m.BOOL:
            self.report("E_TYPE", f"{what} must be Bool, found {t}", e if e.pos else node)

    def check_block(self, stmts, scope, return_type, allow_return):
        scope = dict(scope)
        for s in stmts:
            if isinstance(s, m.VarDecl):
                t = self.expr_type(s.expr, scope, s)
                if s.name in scope:
                    self.report("E_DUPLICATE", f"'{s.name}' is already defined", s)
                if t is not None:
                    scope[s.name] = t
            elif isinstance(s, m.Assign):
                if isinstance(s.target, m.Name) and s.target.ident == "self":
                    self.report("E_TYPE", "cannot assign to 'self'", s)
                    continue
                tt = self.expr_type(s.target, scope, s)
                vt = self.expr_type(s.expr, scope, s)
                if tt is not None and vt is not None and not self.typer.assignable(tt, vt):
                    self.report("E_TYPE", f"cannot assign {vt} to {tt}", s)
            elif isinstance(s, m.If):
                self.expect_bool(s.cond, scope, "condition", s)
                self.check_block(s.then, scope, return_type, allow_return)
                if s.orelse is not None:
                    self.check_block(s.orelse, scope, return_type, allow_return)
            elif isinstance(s, m.Return):
                if not allow_return:
                    self.report("E_RETURN_IN_ACTION", "transition actions cannot return", s)
                    continue
                t = self.expr_type(s.expr, scope, s)
                if return_type is None:
                    self.report("E_TYPE", "return with a value in a method without result type", s)
                elif t is not None and not self.typer.assignable(return_type, t):
                    self.report("E_TYPE", f"cannot return {t} from a method returning {return_type}", s)
            elif isinstance(s, m.CallStmt):
                self.check_call(s, scope)

    def check_call(self, s: m.CallStmt, scope):
        rt = self.expr_type(s.receiver, scope, s)
        if rt is None:
            return
        if not rt.is_object or self.model.cls(rt.name) is None:
            self.report("E_TYPE", f"cannot call a method on {rt}", s)
            return
        found = self.model.find_method(rt.name, s.method)
        if found is None:
            self.report("E_UNRESOLVED", f"class {rt.name} has no method '{s.method}'", s)
            return
        self.check_args(found[1], [self.expr_type(a, scope, s) for a in s.args], s)

    def check_args(self, meth: m.MethodDef, arg_types, node):
        if len(arg_types) != len(meth.params):
            self.report("E_ARITY", f"'{meth.name}' takes {len(meth.params)} argument(s), got {len(arg_types)}", node)
            return
        for p, t in zip(meth.params, arg_types):
            if t is not None and not self.typer.assignable(p.type, t):
                self.report("E_TYPE", f"argument '{p.name}' of '{meth.name}' expects {p.type}, got {t}", node)

    # -- statecharts --

    def check_statechart(self, sc: m.Statechart):
        owner = self.model.cls(sc.owner)
        if owner is None:
            self.report("E_UNKNOWN_CLASS", f"statechart owner '{sc.owner}' is not declared", sc)
        else:
            for anc in self.model.ancestors(sc.owner)[1:]:
                if self.model.chart_of(anc) is not None:
                    self.report("E_CHART_CONFLICT", f"{sc.owner} inherits the statechart of {anc}", sc)
                    break
        states = set()
        for s in sc.states:
            if s in states:
                self.report("E_DUPLICATE_STATE", f"state '{s}' declared twice", sc)
            states.add(s)
        if sc.initial not in states:
            self.report("E_UNKNOWN_STATE", f"initial state '{sc.initial}' is not declared", sc)
        for t in sc.transitions:
            for s in (t.source, t.target):
                if s not in states:
                    self.report("E_UNKNOWN_STATE", f"state '{s}' is not declared", t)
            if owner is None:
                continue
            found = self.model.find_method(sc.owner, t.trigger)
            if found is None or found[1].body is not None or found[1].abstract:
                self.report("E_BAD_TRIGGER",
                            f"trigger '{t.trigger}' must be a body-less, non-abstract method of {sc.owner}", t)
                continue
            meth = found[1]
            if len(t.params) != len(meth.params):
                self.report("E_ARITY", f"transition binds {len(t.params)} parameter(s) of '{t.trigger}'"
                            f" which takes {len(meth.params)}", t)
                continue
            if len(set(t.params)) != len(t.params) or "self" in t.params:
                self.report("E_DUPLICATE", "bad or repeated transition parameter", t)
            if not self.types_ok(meth.return_type, *(p.type for p in meth.params)):
                continue
            scope = {"self": m.TypeRef(sc.owner)}
            scope.update({n: p.type for n, p in zip(t.params, meth.params)})
            if t.guard is not None:
                self.expect_bool(t.guard, scope, "guard", t)
            if t.actions is not None:
                self.check_block(t.actions, scope, None, allow_return=False)
            if t.result is not None:
                rt = self.expr_type(t.result, scope, t)
                if meth.return_type is None:
                    self.report("E_TYPE", f"'{t.trigger}' has no result type", t)
                elif rt is not None and not self.typer.assignable(meth.return_type, rt):
                    self.report("E_TYPE", f"result {rt} does not match '{t.trigger}' result {meth.return_type}", t)

    # -- object diagrams --

    def check_configuration(self, conf, pattern: bool):
        names = {}
        for o in conf.objects:
            if o.name in names:
                self.report("E_DUPLICATE_OBJECT", f"object '{o.name}' declared twice", o)
            names.setdefault(o.name, o.cls)
        for o in conf.objects:
            cls = self.model.cls(o.cls)
            if cls is None:
                self.report("E_UNKNOWN_CLASS", f"unknown class '{o.cls}'", o)
                continue
            if cls.abstract and not pattern:
                self.report("E_ABSTRACT_INSTANTIATION", f"cannot instantiate abstract class {o.cls}", o)
            assigned = set()
            for a in o.assignments:
                if a.attr in assigned:
                    self.report("E_DUPLICATE_MEMBER", f"attribute '{a.attr}' assigned twice", a)
                assigned.add(a.attr)
                found = self.model.find_attribute(o.cls, a.attr)
                if found is None:
                    self.report("E_UNKNOWN_MEMBER", f"class {o.cls} has no attribute '{a.attr}'", a)
                    continue
                self.check_value(found[1].type, a.value, names, a)

    def check_value(self, t: m.TypeRef, v, names, node):
        if isinstance(v, m.Lit):
            if t != m.TypeRef(v.kind):
                self.report("E_TYPE", f"value of type {v.kind} does not fit {t}", node)
            return
        refs = [v.ident] if isinstance(v, m.Name) else list(v.names)
        if isinstance(v, m.Name) != t.is_object or (isinstance(v, m.SetValue) != t.is_set):
            self.report("E_TYPE", f"value does not fit {t}", node)
            return
        if len(set(refs)) != len(refs):
            self.report("E_DUPLICATE_OBJECT", "set lists an object twice", node)
        for r in refs:
            if r not in names:
                self.report("E_UNKNOWN_OBJECT", f"object '{r}' is not declared in this configuration", node)
            elif not self.model.is_subclass(names[r], t.name):
                self.report("E_TYPE", f"object '{r}' of class {names[r]} does not fit {t}", node)

    # -- invariants --

    def check_invariant(self, inv: m.NamedInvariant):
        if self.model.cls(inv.context) is None:
            self.report("E_UNKNOWN_CLASS", f"invariant context '{inv.context}' is not declared", inv)
            return
        self.expect_bool(inv.expr, {"self": m.TypeRef(inv.context)}, "invariant", inv)

    # -- tests --

    def check_test(self, t: m.TestCase):
        fixture = self.model.config(t.fixture)
        driver = self.model.sequence(t.driver)
        if fixture is None:
            self.report("E_UNRESOLVED", f"fixture '{t.fixture}' is not declared", t)
        if driver is None:
            self.report("E_UNRESOLVED", f"driver '{t.driver}' is not declared", t)
        pattern = None
        if t.oracle is not None and t.oracle.pattern is not None:
            pattern = self.model.pattern(t.oracle.pattern)
            if pattern is None:
                self.report("E_UNRESOLVED", f"pattern '{t.oracle.pattern}' is not declared", t)
        if fixture is None:
            return
        objects = {o.name: o.cls for o in fixture.objects if self.model.cls(o.cls) is not None}
        scope = {n: m.TypeRef(c) for n, c in objects.items()}
        self.typer.mentions = []
        called = []
        if driver is not None:
            for step in driver.steps:
                self.check_step(step, objects, scope, called)
        oracle_scope = dict(scope)
        if pattern is not None:
            for o in pattern.objects:
                if o.anchor and o.name not in objects:
                    self.report("E_ANCHOR_UNKNOWN", f"anchored object '{o.name}' is not in fixture {t.fixture}", t)
                if o.name not in oracle_scope and self.model.cls(o.cls) is not None:
                    oracle_scope[o.name] = m.TypeRef(o.cls)
        if t.oracle is not None:
            for a in t.oracle.asserts:
                self.expect_bool(a, oracle_scope, "oracle assertion", t)
        if t.category == "acceptance":
            self.check_published(t, fixture, pattern, called)

    def check_step(self, step, objects, scope, called):
        if isinstance(step, m.AssertStep):
            self.expect_bool(step.expr, scope, "assertion", step)
            return
        if isinstance(step, m.ExpectMessage):
            for n in (step.caller, step.callee):
                if n not in objects:
                    self.report("E_UNKNOWN_OBJECT", f"object '{n}' is not in the fixture", step)
            if step.callee in objects:
                found = self.model.find_method(objects[step.callee], step.method)
                if found is None:
                    self.report("E_UNKNOWN_MEMBER", f"class {objects[step.callee]} has no method '{step.method}'", step)
                else:
                    called.append(found)
            return
        if step.target not in objects:
            self.report("E_UNKNOWN_OBJECT", f"object '{step.target}' is not in the fixture", step)
            return
        found = self.model.find_method(objects[step.target], step.method)
        if found is None:
            self.report("E_UNKNOWN_MEMBER", f"class {objects[step.target]} has no method '{step.method}'", step)
            return
        called.append(found)
        meth = found[1]
        arg_types = []
        for a in step.args:
            if isinstance(a, m.Name) and a.ident not in objects:
                self.report("E_UNKNOWN_OBJECT", f"object '{a.ident}' is not in the fixture", step)
                arg_types.append(None)
            else:
                arg_types.append(self.expr_type(a, scope, step))
        self.check_args(meth, arg_types, step)
        if step.expect is not None:
            if meth.return_type is None or meth.return_type != m.TypeRef(step.expect.kind):
                self.report("E_TYPE", f"expected {step.expect.kind} but '{meth.name}' returns "
                            f"{meth.return_type or 'nothing'}", step)

    def check_published(self, t, fixture, pattern, called):
        def unpublished(what):
            self.report("E_UNPUBLISHED_REFERENCE", f"acceptance test {t.name} uses unpublished {what}", t)

        confs = [fixture] + ([pattern] if pattern is not None else [])
        for conf in confs:
            for o in conf.objects:
                cls = self.model.cls(o.cls)
                if cls is None:
                    continue
                if not cls.published:
                    unpublished(f"class {o.cls}")
                for a in o.assignments:
                    found = self.model.find_attribute(o.cls, a.attr)
                    if found is not None and not found[1].published:
                        unpublished(f"attribute {found[0]}.{a.attr}")
        for owner, meth in called:
            if not meth.published:
                unpublished(f"method {owner}.{meth.name}")
        for owner, attr in self.typer.mentions:
            if not attr.published:
                unpublished(f"attribute {owner}.{attr.name}")


def check_wellformed(model: m.Model) -> list:
    """Every invariant violation as a Diagnostic, in document order."""
    return Checker(model).run()


def is_wellformed(model: m.Model) -> bool:
    return not check_wellformed(model)


__all__ = ["Diagnostic", "MemberResolution", "Typer", "check_wellformed", "is_wellformed",
           "lookup_member", "published_surface", "type_of"]
