"""Catalog of behaviour-preserving model transformations.

Every rule first evaluates its context conditions without touching the
model.  If any condition is violated the request is rejected with the full
violation list; otherwise the rule returns a transformed copy of the model
together with the changes made to glass-box tests (unit and integration).
Acceptance tests are the observers of external behaviour: no rule touches
them unless ``allow_published`` is set.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from . import model as m
from .check import Checker, Typer
from .diagnostics import AmwError, TypeCheckError
from .printer import format_body, format_value, print_item
from .testgen import state_test_name, test_prefix, transition_test_names
from .testkit import SuiteReport, run_suite

VARIANTS = ("override", "abstract", "unify")

RULES = {
    "pull_up_attribute": ("super", "attr"),
    "pull_up_method": ("super", "method", "variant", "donor"),
    "rename_class": ("old", "new"),
    "rename_attribute": ("owner", "old", "new"),
    "rename_method": ("owner", "old", "new"),
}
OPTIONAL_PARAMS = {"donor"}


class RefactorError(AmwError):
    pass


@dataclass
class RefactoringRequest:
    rule: str
    params: dict = field(default_factory=dict)
    default: Optional[object] = None  # Lit, or SetValue for set-typed attributes
    clone_values: list = field(default_factory=list)
    allow_published: bool = False

    @classmethod
    def from_args(cls, rule: str, args, **options) -> "RefactoringRequest":
        """Build a request from positional arguments in catalog order."""
        if rule not in RULES:
            raise RefactorError("E_UNKNOWN_RULE", f"unknown rule '{rule}'")
        names = RULES[rule]
        args = list(args)
        required = [n for n in names if n not in OPTIONAL_PARAMS]
        if not len(required) <= len(args) <= len(names):
            raise RefactorError("E_BAD_ARGS", f"{rule} expects {', '.join(names)}")
        return cls(rule, dict(zip(names, args)), **options)


@dataclass(frozen=True)
class ContextViolation:
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class TestChange:
    test: str
    kind: str  # patched | cloned-from | patched-not-constrained | obsoleted-warning
    detail: str = ""

    __test__ = False

    def render(self) -> str:
        return f"TESTCHANGE {self.test} {self.kind}" + (f" {self.detail}" if self.detail else "")


@dataclass
class PreservationResult:
    before: SuiteReport
    after: SuiteReport
    preserved: bool
    warnings: list = field(default_factory=list)
    differences: list = field(default_factory=list)


@dataclass
class RefactoringReport:
    rule: str
    applied: bool
    violations: list = field(default_factory=list)
    model_after: Optional[m.Model] = None
    test_changes: list = field(default_factory=list)
    preservation: Optional[PreservationResult] = None
    warnings: list = field(default_factory=list)

    def render(self) -> str:
        lines = [f"RULE {self.rule} {'applied' if self.applied else 'rejected'}"]
        lines += [f"VIOLATION {v.code} {v.subject}" for v in self.violations]
        lines += [c.render() for c in self.test_changes]
        lines += [f"WARNING {w}" for w in self.warnings]
        if self.preservation is not None:
            lines += [f"WARNING {w}" for w in self.preservation.warnings]
            lines += [f"DIFFERENCE {d}" for d in self.preservation.differences]
            lines.append(f"PRESERVED {'true' if self.preservation.preserved else 'false'}")
        return "\n".join(lines) + "\n"

    def render_text(self) -> str:
        out = [self.render().rstrip("\n")]
        for v in self.violations:
            out.append(f"  {v.code} at {v.subject}: {v.message}")
        return "\n".join(out) + "\n"


# -- shared helpers -----------------------------------------------------------


def acceptance_artifacts(model: m.Model) -> set:
    """Names (kind, name) of configurations, sequences and patterns used by acceptance tests."""
    protected = set()
    for t in model.tests:
        if t.category != "acceptance":
            continue
        protected.add(("config", t.fixture))
        protected.add(("sequence", t.driver))
        if t.oracle is not None and t.oracle.pattern:
            protected.add(("pattern", t.oracle.pattern))
    return protected


def test_text(model: m.Model, t: m.TestCase) -> str:
    """Printed text of a test together with its fixture, driver and pattern."""
    parts = [print_item(t)]
    for item in (model.config(t.fixture), model.sequence(t.driver),
                 model.pattern(t.oracle.pattern) if t.oracle and t.oracle.pattern else None):
        if item is not None:
            parts.append(print_item(item))
    return "\n".join(parts)


def _changed_tests(before: m.Model, after: m.Model) -> list:
    changes = []
    for t in after.tests:
        old = before.test(t.name)
        if old is not None and test_text(before, old) != test_text(after, t):
            changes.append(TestChange(t.name, "patched"))
    return changes


def _type_matches(value, t: m.TypeRef) -> bool:
    if isinstance(value, m.Lit):
        return t == m.TypeRef(value.kind)
    if isinstance(value, m.SetValue):
        return t.is_set and not value.names
    return False


def _published_widening(model, sup: m.ClassDef, member, warnings):
    if member.published and not sup.published:
        sup.published = True
        warnings.append(f"W_PUBLISHED_WIDENED {sup.name}")


# -- pull up attribute --------------------------------------------------------


def _attr_conditions(model: m.Model, req: RefactoringRequest) -> list:
    sup_name, attr = req.params["super"], req.params["attr"]
    sup = model.cls(sup_name)
    if sup is None:
        return [ContextViolation("E_UNKNOWN_CLASS", sup_name, f"no class '{sup_name}'")]
    out = []
    declaring = [c for c in model.subclasses(sup_name) if c.attribute(attr) is not None]
    if not declaring:
        out.append(ContextViolation("E_NOT_DECLARED", sup_name,
                                    f"no direct subclass of {sup_name} declares '{attr}'"))
        return out
    ref = declaring[0].attribute(attr).type
    for c in declaring[1:]:
        t = c.attribute(attr).type
        if t != ref:
            out.append(ContextViolation("E_NAME_CLASH", c.name,
                                        f"{c.name} already has an attribute '{attr}' of type {t}, not {ref}"))
    found = model.find_attribute(sup_name, attr)
    if found is not None:
        out.append(ContextViolation("E_NAME_CLASH", found[0], f"{found[0]} already declares '{attr}'"))
    declaring_names = {c.name for c in declaring}
    for d in model.descendants(sup_name):
        if d.name not in declaring_names and d.attribute(attr) is not None:
            out.append(ContextViolation("E_NAME_CLASH", d.name, f"{d.name} would shadow the pulled-up '{attr}'"))
    if req.default is None:
        out.append(ContextViolation("E_MISSING_DEFAULT", attr, "a default value is required"))
    elif not _type_matches(req.default, ref):
        out.append(ContextViolation("E_DEFAULT_TYPE", attr, f"default {format_value(req.default)} is not a {ref}"))
    for v in req.clone_values:
        if not _type_matches(v, ref):
            out.append(ContextViolation("E_DEFAULT_TYPE", attr, f"clone value {format_value(v)} is not a {ref}"))
    if req.clone_values:
        plan = _attr_patch_plan(model, sup_name, attr)
        for test_name in plan["tests"]:
            for i in range(1, len(req.clone_values) + 1):
                clone = f"{test_name}_clone{i}"
                if model.test(clone) is not None or model.config(clone) is not None:
                    out.append(ContextViolation("E_NAME_CLASH", clone, f"'{clone}' already exists"))
    return out


def _attr_patch_plan(model: m.Model, sup: str, attr: str) -> dict:
    """Which glass-box configurations gain a value, and which tests use them."""
    protected = acceptance_artifacts(model)
    family = {sup} | {d.name for d in model.descendants(sup)}
    configs, protected_configs = {}, []
    for conf in model.configs:
        targets = [o.name for o in conf.objects if o.cls in family and o.value_of(attr) is None]
        if not targets:
            continue
        if ("config", conf.name) in protected:
            protected_configs.append(conf.name)
        else:
            configs[conf.name] = targets
    tests = [t.name for t in model.tests if t.category != "acceptance" and t.fixture in configs]
    unconstrained = []
    for t in model.tests:
        if t.category == "acceptance" or t.oracle is None or not t.oracle.pattern:
            continue
        pat = model.pattern(t.oracle.pattern)
        if pat is not None and any(o.cls in family and o.value_of(attr) is None for o in pat.objects):
            unconstrained.append(t.name)
    return {"configs": configs, "tests": tests, "protected": protected_configs, "unconstrained": unconstrained}


def _attr_transform(model: m.Model, req: RefactoringRequest, warnings: list) -> list:
    sup_name, attr = req.params["super"], req.params["attr"]
    plan = _attr_patch_plan(model, sup_name, attr)
    sup = model.cls(sup_name)
    declaring = [c for c in model.subclasses(sup_name) if c.attribute(attr) is not None]
    pulled = copy.deepcopy(declaring[0].attribute(attr))
    pulled.published = any(c.attribute(attr).published for c in declaring)
    pulled.pos = None
    for c in declaring:
        c.attributes = [a for a in c.attributes if a.name != attr]
    sup.attributes.append(pulled)
    _published_widening(model, sup, pulled, warnings)

    for name, targets in plan["configs"].items():
        conf = model.config(name)
        for o in conf.objects:
            if o.name in targets:
                o.assignments.append(m.Assignment(attr, copy.deepcopy(req.default)))
    for name in plan["protected"]:
        warnings.append(f"W_PROTECTED_FIXTURE {name}")

    clones = []
    for test_name in plan["tests"]:
        original = model.test(test_name)
        conf = model.config(original.fixture)
        for i, value in enumerate(req.clone_values, 1):
            clone_name = f"{test_name}_clone{i}"
            clone_conf = copy.deepcopy(conf)
            clone_conf.name = clone_name
            clone_conf.source = conf.source
            for o in clone_conf.objects:
                if o.name in plan["configs"][conf.name]:
                    for a in o.assignments:
                        if a.attr == attr:
                            a.value = copy.deepcopy(value)
            model.configs.insert(model.configs.index(conf) + 1 + i - 1, clone_conf)
            clone_test = copy.deepcopy(original)
            clone_test.name = clone_name
            clone_test.fixture = clone_name
            clone_test.source = original.source
            model.tests.insert(model.tests.index(original) + i, clone_test)
            clones.append(TestChange(clone_name, "cloned-from", test_name))
    changes = [TestChange(n, "patched") for n in plan["tests"]]
    changes += clones
    changes += [TestChange(n, "patched-not-constrained") for n in plan["unconstrained"]]
    return changes


# -- pull up method -----------------------------------------------------------


def _self_uses(stmts):
    """Attribute names, method names and state reads made through ``self``."""
    attrs, methods, state = [], [], False

    def expr(e):
        nonlocal state
        if isinstance(e, m.Nav):
            if isinstance(e.source, m.Name) and e.source.ident == "self":
                attrs.append(e.attr)
            expr(e.source)
        elif isinstance(e, m.StateOf):
            if isinstance(e.source, m.Name) and e.source.ident == "self":
                state = True
            expr(e.source)
        elif isinstance(e, m.Unary):
            expr(e.operand)
        elif isinstance(e, m.Binary):
            expr(e.left)
            expr(e.right)
        elif isinstance(e, m.SetOp):
            expr(e.source)
            if e.arg is not None:
                expr(e.arg)

    def block(ss):
        for s in ss:
            if isinstance(s, (m.VarDecl, m.Return)):
                expr(s.expr)
            elif isinstance(s, m.Assign):
                expr(s.target)
                expr(s.expr)
            elif isinstance(s, m.If):
                expr(s.cond)
                block(s.then)
                block(s.orelse or [])
            elif isinstance(s, m.CallStmt):
                expr(s.receiver)
                for a in s.args:
                    expr(a)
                if isinstance(s.receiver, m.Name) and s.receiver.ident == "self":
                    methods.append(s.method)

    block(stmts)
    return attrs, methods, state


def _body_violations(model, sup: str, meth: m.MethodDef, owner: str) -> list:
    out = []
    attrs, methods, state = _self_uses(meth.body or [])
    for a in dict.fromkeys(attrs):
        if model.find_attribute(sup, a) is None:
            out.append(ContextViolation("E_SUBCLASS_ATTR_USE", f"{owner}.{meth.name}",
                                        f"body reads '{a}', which {sup} does not have"))
    for name in dict.fromkeys(methods):
        if name != meth.name and model.find_method(sup, name) is None:
            out.append(ContextViolation("E_SUBCLASS_METHOD_USE", f"{owner}.{meth.name}",
                                        f"body calls '{name}', which {sup} does not have"))
    if state and model.chart_for_class(sup) is None:
        out.append(ContextViolation("E_SUBCLASS_ATTR_USE", f"{owner}.{meth.name}",
                                    f"body reads the statechart state, which {sup} does not have"))
    return out


def _method_conditions(model: m.Model, req: RefactoringRequest) -> list:
    sup_name, name, variant = req.params["super"], req.params["method"], req.params["variant"]
    sup = model.cls(sup_name)
    if sup is None:
        return [ContextViolation("E_UNKNOWN_CLASS", sup_name, f"no class '{sup_name}'")]
    if variant not in VARIANTS:
        return [ContextViolation("E_BAD_VARIANT", variant, f"variant must be one of {', '.join(VARIANTS)}")]
    out = []
    declaring = [c for c in model.subclasses(sup_name) if c.method(name) is not None]
    if len(declaring) < 2:
        out.append(ContextViolation("E_TOO_FEW_DECLARATIONS", sup_name,
                                    f"'{name}' is declared in {len(declaring)} direct subclass(es) of {sup_name}"))
        return out
    ref = declaring[0].method(name)
    for c in declaring[1:]:
        if c.method(name).signature() != ref.signature():
            out.append(ContextViolation("E_SIGNATURE_MISMATCH", c.name, f"{c.name}.{name} has another signature"))
    found = model.find_method(sup_name, name)
    if found is not None:
        out.append(ContextViolation("E_NAME_CLASH", found[0], f"{found[0]} already declares '{name}'"))
    declaring_names = {c.name for c in declaring}
    for d in model.descendants(sup_name):
        if d.name not in declaring_names and d.method(name) is not None \
                and d.method(name).signature() != ref.signature():
            out.append(ContextViolation("E_SIGNATURE_MISMATCH", d.name, f"{d.name}.{name} has another signature"))
    if variant == "override":
        donor = req.params.get("donor")
        if not donor:
            out.append(ContextViolation("E_MISSING_DONOR", name, "override needs a donor subclass"))
        elif donor not in declaring_names:
            out.append(ContextViolation("E_BAD_DONOR", donor, f"{donor} is not a direct subclass declaring '{name}'"))
        elif model.cls(donor).method(name).body is None:
            out.append(ContextViolation("E_NO_BODY", donor, f"{donor}.{name} has no body to move"))
        else:
            out += _body_violations(model, sup_name, model.cls(donor).method(name), donor)
    elif variant == "unify":
        bodies = []
        for c in declaring:
            meth = c.method(name)
            if meth.body is None:
                out.append(ContextViolation("E_NO_BODY", c.name, f"{c.name}.{name} has no body"))
            else:
                bodies.append((c, format_body(meth.body)))
        if bodies:
            first = bodies[0][1]
            for c, text in bodies[1:]:
                if text != first:
                    out.append(ContextViolation("E_BODIES_DIFFER", c.name,
                                                f"{c.name}.{name} differs from {bodies[0][0].name}.{name}"))
            if all(text == first for _, text in bodies) and len(bodies) == len(declaring):
                out += _body_violations(model, sup_name, bodies[0][0].method(name), bodies[0][0].name)
    else:
        if not sup.abstract:
            for conf in model.configs:
                for o in conf.objects:
                    if o.cls == sup_name:
                        out.append(ContextViolation("E_ABSTRACT_INSTANCES", f"{conf.name}.{o.name}",
                                                    f"{sup_name} is instantiated directly"))
        for d in model.descendants(sup_name):
            if d.abstract:
                continue
            chain = model.ancestors(d.name)
            below = chain[: chain.index(sup_name)]
            if not any(model.cls(c).method(name) is not None and not model.cls(c).method(name).abstract
                       for c in below):
                out.append(ContextViolation("E_UNIMPLEMENTED", d.name, f"{d.name} would not implement '{name}'"))
    return out


def _method_transform(model: m.Model, req: RefactoringRequest, warnings: list) -> list:
    sup_name, name, variant = req.params["super"], req.params["method"], req.params["variant"]
    sup = model.cls(sup_name)
    declaring = [c for c in model.subclasses(sup_name) if c.method(name) is not None]
    published = any(c.method(name).published for c in declaring)
    if variant == "abstract":
        ref = declaring[0].method(name)
        moved = m.MethodDef(name, copy.deepcopy(ref.params), ref.return_type, None, True, published)
        sup.abstract = True
    else:
        donor = model.cls(req.params["donor"]) if variant == "override" else declaring[0]
        moved = copy.deepcopy(donor.method(name))
        moved.published = published
        remove_from = [donor] if variant == "override" else declaring
        for c in remove_from:
            c.methods = [x for x in c.methods if x.name != name]
    for p in moved.params:
        p.pos = None
    moved.pos = None
    sup.methods.append(moved)
    _published_widening(model, sup, moved, warnings)
    return []


# -- renaming -----------------------------------------------------------------


def _rename_conditions(model: m.Model, req: RefactoringRequest) -> list:
    rule = req.rule
    new = req.params["new"]
    old = req.params["old"]
    if rule == "rename_class":
        c = model.cls(old)
        if c is None:
            return [ContextViolation("E_UNKNOWN_CLASS", old, f"no class '{old}'")]
        if new == old:
            return [ContextViolation("E_SAME_NAME", old, "new name equals the old one")]
        out = []
        if model.cls(new) is not None or new in m.PRIMITIVES:
            out.append(ContextViolation("E_NAME_CLASH", new, f"a class or type '{new}' already exists"))
        if c.published and not req.allow_published:
            out.append(ContextViolation("E_PUBLISHED_IMPACT", old, f"class {old} is published"))
        return out
    owner = req.params["owner"]
    c = model.cls(owner)
    if c is None:
        return [ContextViolation("E_UNKNOWN_CLASS", owner, f"no class '{owner}'")]
    kind = "attribute" if rule == "rename_attribute" else "method"
    member = c.attribute(old) if kind == "attribute" else c.method(old)
    if member is None:
        return [ContextViolation("E_UNKNOWN_MEMBER", f"{owner}.{old}", f"{owner} does not declare {kind} '{old}'")]
    if new == old:
        return [ContextViolation("E_SAME_NAME", f"{owner}.{old}", "new name equals the old one")]
    out = []
    visible = model.ancestors(owner) + [d.name for d in model.descendants(owner)]
    for name in visible:
        cls = model.cls(name)
        if (cls.attribute(new) if kind == "attribute" else cls.method(new)) is not None:
            out.append(ContextViolation("E_NAME_CLASH", name, f"{name} already has {kind} '{new}'"))
    published = member.published
    if kind == "method":
        for anc in model.ancestors(owner)[1:]:
            if model.cls(anc).method(old) is not None:
                out.append(ContextViolation("E_OVERRIDES_ANCESTOR", anc,
                                            f"'{old}' overrides {anc}.{old}; rename it there"))
        for d in model.descendants(owner):
            if d.method(old) is not None and d.method(old).published:
                published = True
    if published and not req.allow_published:
        out.append(ContextViolation("E_PUBLISHED_IMPACT", f"{owner}.{old}", f"{kind} {owner}.{old} is published"))
    return out


class _Renamer:
    """Typed rewrite of navigations, calls and names across a model."""

    def __init__(self, model: m.Model, kind: str, owner: Optional[str], old: str, new: str):
        self.model = model
        self.kind = kind
        self.owner = owner
        self.old = old
        self.new = new
        self.typer = Typer(model)

    def in_family(self, t) -> bool:
        return t is not None and t.is_object and self.model.is_subclass(t.name, self.owner)

    def typeof(self, e, scope):
        try:
            return self.typer.type_of(e, scope)
        except TypeCheckError:
            return None

    def expr(self, e, scope):
        if isinstance(e, m.Nav):
            if self.kind == "attribute" and e.attr == self.old and self.in_family(self.typeof(e.source, scope)):
                e.attr = self.new
            self.expr(e.source, scope)
        elif isinstance(e, m.StateOf):
            self.expr(e.source, scope)
        elif isinstance(e, m.Unary):
            self.expr(e.operand, scope)
        elif isinstance(e, m.Binary):
            self.expr(e.left, scope)
            self.expr(e.right, scope)
        elif isinstance(e, m.SetOp):
            st = self.typeof(e.source, scope)
            self.expr(e.source, scope)
            if e.arg is not None:
                inner = scope
                if e.var is not None and st is not None and st.is_set:
                    inner = dict(scope)
                    inner[e.var] = m.TypeRef(st.name)
                self.expr(e.arg, inner)

    def block(self, stmts, scope):
        scope = dict(scope)
        for s in stmts:
            if isinstance(s, m.VarDecl):
                t = self.typeof(s.expr, scope)
                self.expr(s.expr, scope)
                if t is not None:
                    scope[s.name] = t
            elif isinstance(s, m.Assign):
                self.expr(s.target, scope)
                self.expr(s.expr, scope)
            elif isinstance(s, m.Return):
                self.expr(s.expr, scope)
            elif isinstance(s, m.If):
                self.expr(s.cond, scope)
                self.block(s.then, scope)
                if s.orelse is not None:
                    self.block(s.orelse, scope)
            elif isinstance(s, m.CallStmt):
                rt = self.typeof(s.receiver, scope)
                for a in s.args:
                    self.expr(a, scope)
                self.expr(s.receiver, scope)
                if self.kind == "method" and s.method == self.old and self.in_family(rt):
                    s.method = self.new

    def run(self):
        model = self.model
        # rewrite expressions first, while types still resolve under the old names
        for c in model.classes:
            for meth in c.methods:
                if meth.body is not None:
                    scope = {"self": m.TypeRef(c.name)}
                    scope.update({p.name: p.type for p in meth.params})
                    self.block(meth.body, scope)
        for sc in model.statecharts:
            found = {t.trigger: model.find_method(sc.owner, t.trigger) for t in sc.transitions}
            for t in sc.transitions:
                scope = {"self": m.TypeRef(sc.owner)}
                meth = found.get(t.trigger)
                if meth is not None:
                    scope.update({n: p.type for n, p in zip(t.params, meth[1].params)})
                for e in (t.guard, t.result):
                    if e is not None:
                        self.expr(e, scope)
                if t.actions is not None:
                    self.block(t.actions, scope)
        for inv in model.invariants:
            self.expr(inv.expr, {"self": m.TypeRef(inv.context)})
        self.rewrite_tests()
        self.rewrite_declarations()

    def fixture_scope(self, conf) -> dict:
        return {o.name: m.TypeRef(o.cls) for o in conf.objects} if conf is not None else {}

    def rewrite_tests(self):
        model = self.model
        done_sequences = set()
        for t in model.tests:
            fixture = model.config(t.fixture)
            scope = self.fixture_scope(fixture)
            seq = model.sequence(t.driver)
            if seq is not None and seq.name not in done_sequences:
                done_sequences.add(seq.name)
                fixtures = [self.fixture_scope(model.config(u.fixture)) for u in model.tests if u.driver == seq.name]
                for step in seq.steps:
                    if isinstance(step, m.AssertStep):
                        self.expr(step.expr, scope)
                    elif self.kind == "method" and step.method == self.old:
                        obj = step.target if isinstance(step, m.Stimulus) else step.callee
                        if any(self.in_family(f.get(obj)) for f in fixtures):
                            step.method = self.new
            if t.oracle is not None:
                oscope = dict(scope)
                pat = model.pattern(t.oracle.pattern) if t.oracle.pattern else None
                if pat is not None:
                    for o in pat.objects:
                        oscope.setdefault(o.name, m.TypeRef(o.cls))
                for a in t.oracle.asserts:
                    self.expr(a, oscope)

    def rewrite_declarations(self):
        model = self.model
        if self.kind == "attribute":
            model.cls(self.owner).attribute(self.old).name = self.new
            for conf in model.configs + model.patterns:
                for o in conf.objects:
                    if model.cls(o.cls) is not None and model.is_subclass(o.cls, self.owner):
                        for a in o.assignments:
                            if a.attr == self.old:
                                a.attr = self.new
        elif self.kind == "method":
            for c in [model.cls(self.owner)] + model.descendants(self.owner):
                meth = c.method(self.old)
                if meth is not None:
                    meth.name = self.new
            for sc in model.statecharts:
                if model.cls(sc.owner) is not None and model.is_subclass(sc.owner, self.owner):
                    for t in sc.transitions:
                        if t.trigger == self.old:
                            t.trigger = self.new


def _rename_class(model: m.Model, old: str, new: str):
    def fix(t):
        return m.TypeRef(new, t.is_set) if t is not None and t.name == old else t

    for c in model.classes:
        if c.name == old:
            c.name = new
        if c.superclass == old:
            c.superclass = new
        for a in c.attributes:
            a.type = fix(a.type)
        for meth in c.methods:
            meth.return_type = fix(meth.return_type)
            for p in meth.params:
                p.type = fix(p.type)
    for sc in model.statecharts:
        if sc.owner == old:
            sc.owner = new
    for inv in model.invariants:
        if inv.context == old:
            inv.context = new
    for conf in model.configs + model.patterns:
        for o in conf.objects:
            if o.cls == old:
                o.cls = new


def _rename_transform(model: m.Model, req: RefactoringRequest, warnings: list) -> list:
    if req.rule == "rename_class":
        _rename_class(model, req.params["old"], req.params["new"])
    else:
        kind = "attribute" if req.rule == "rename_attribute" else "method"
        _Renamer(model, kind, req.params["owner"], req.params["old"], req.params["new"]).run()
    return []


# -- engine -------------------------------------------------------------------

_CONDITIONS = {
    "pull_up_attribute": _attr_conditions,
    "pull_up_method": _method_conditions,
    "rename_class": _rename_conditions,
    "rename_attribute": _rename_conditions,
    "rename_method": _rename_conditions,
}
_TRANSFORMS = {
    "pull_up_attribute": _attr_transform,
    "pull_up_method": _method_transform,
    "rename_class": _rename_transform,
    "rename_attribute": _rename_transform,
    "rename_method": _rename_transform,
}


def _validate(req: RefactoringRequest):
    if req.rule not in RULES:
        raise RefactorError("E_UNKNOWN_RULE", f"unknown rule '{req.rule}'")
    missing = [n for n in RULES[req.rule] if n not in OPTIONAL_PARAMS and n not in req.params]
    if missing:
        raise RefactorError("E_BAD_ARGS", f"{req.rule} is missing {', '.join(missing)}")


def check_context(model: m.Model, request: RefactoringRequest) -> list:
    """Context-condition violations of ``request``; empty when it is applicable."""
    _validate(request)
    return _CONDITIONS[request.rule](model, request)


def apply(model: m.Model, request: RefactoringRequest, verify: bool = False) -> RefactoringReport:
    """Apply one catalog rule.  The input model is never modified."""
    violations = check_context(model, request)
    if violations:
        return RefactoringReport(request.rule, False, violations)
    after = copy.deepcopy(model)
    warnings = []
    changes = _TRANSFORMS[request.rule](after, request, warnings)
    seen = {c.test for c in changes}
    for change in _changed_tests(model, after):
        if change.test not in seen:
            changes.append(change)
    if not request.allow_published:
        for t in model.tests:
            if t.category == "acceptance" and test_text(model, t) != test_text(after, after.test(t.name)):
                raise RefactorError("E_INTERNAL", f"acceptance test {t.name} changed without allow_published")
    report = RefactoringReport(request.rule, True, [], after, changes, warnings=warnings)
    if verify:
        report.preservation = verify_preservation(model, after)
    return report


def apply_pull_up_attribute(model, super_name, attr, default, clone_values=(), allow_published=False,
                            verify=False) -> RefactoringReport:
    req = RefactoringRequest("pull_up_attribute", {"super": super_name, "attr": attr}, default,
                             list(clone_values), allow_published)
    return apply(model, req, verify)


def apply_pull_up_method(model, super_name, method, variant, donor=None, verify=False) -> RefactoringReport:
    params = {"super": super_name, "method": method, "variant": variant}
    if donor is not None:
        params["donor"] = donor
    return apply(model, RefactoringRequest("pull_up_method", params), verify)


def apply_rename(model, kind, owner, old, new, allow_published=False, verify=False) -> RefactoringReport:
    if kind == "class":
        req = RefactoringRequest("rename_class", {"old": old, "new": new}, allow_published=allow_published)
    else:
        req = RefactoringRequest(f"rename_{kind}", {"owner": owner, "old": old, "new": new},
                                 allow_published=allow_published)
    return apply(model, req, verify)


# -- obsolescence and preservation --------------------------------------------


@dataclass(frozen=True)
class ObsoleteWarning:
    test: str
    detail: str

    def render(self) -> str:
        return f"OBSOLETE {self.test} {self.detail}"


_DANGLING = ("E_UNRESOLVED", "E_UNKNOWN_CLASS", "E_UNKNOWN_MEMBER", "E_UNKNOWN_OBJECT", "E_ANCHOR_UNKNOWN")


def _state_literals(e, out):
    if isinstance(e, m.Binary):
        if e.op in ("=", "<>"):
            for a, b in ((e.left, e.right), (e.right, e.left)):
                if isinstance(a, m.StateOf) and isinstance(a.source, m.Name) \
                        and isinstance(b, m.Lit) and b.kind == "String":
                    out.append((a.source.ident, b.value))
        _state_literals(e.left, out)
        _state_literals(e.right, out)
    elif isinstance(e, m.Unary):
        _state_literals(e.operand, out)


def _generated_goal_missing(model: m.Model, name: str) -> Optional[str]:
    if not name.startswith("gen_"):
        return None
    for sc in model.statecharts:
        if name.startswith(test_prefix(sc.owner, "transition")):
            return None if name in transition_test_names(sc) else "goal transition no longer exists"
        if name.startswith(test_prefix(sc.owner, "state")):
            return None if name in {state_test_name(sc, s) for s in sc.states} else "goal state no longer exists"
        if name.startswith(test_prefix(sc.owner, "path")):
            return None
    if "__trans__" in name or "__state__" in name or "__path__" in name:
        return "statechart of the generated goal no longer exists"
    return None


def report_obsolete(model: m.Model) -> list:
    """Tests whose fixture, driver or oracle refer to elements that are gone."""
    warnings = []
    for t in model.tests:
        checker = Checker(model)
        checker.path = t.source
        fixture = model.config(t.fixture)
        if fixture is not None:
            checker.check_configuration(fixture, pattern=False)
        pat = model.pattern(t.oracle.pattern) if t.oracle and t.oracle.pattern else None
        if pat is not None:
            checker.check_configuration(pat, pattern=True)
        checker.check_test(t)
        details = [d.message for d in dict.fromkeys(checker.diags) if d.code in _DANGLING]
        missing = _generated_goal_missing(model, t.name)
        if missing:
            details.append(missing)
        if fixture is not None:
            classes = {o.name: o.cls for o in fixture.objects}
            exprs = list(t.oracle.asserts) if t.oracle else []
            seq = model.sequence(t.driver)
            if seq is not None:
                exprs += [s.expr for s in seq.steps if isinstance(s, m.AssertStep)]
            found = []
            for e in exprs:
                _state_literals(e, found)
            for obj, state in found:
                chart = model.chart_for_class(classes[obj]) if obj in classes else None
                if chart is not None and state not in chart.states:
                    details.append(f"state '{state}' no longer exists in statechart {chart.owner}")
        for d in dict.fromkeys(details):
            warnings.append(ObsoleteWarning(t.name, d))
    return warnings


def verify_preservation(before: m.Model, after: m.Model) -> PreservationResult:
    """Run the acceptance suite on both models and compare verdicts test by test."""
    rep_before = run_suite(before, ["acceptance"])
    rep_after = run_suite(after, ["acceptance"])
    warnings, differences = [], []
    if not rep_before.results:
        warnings.append("W_NO_OBSERVERS")
    vb, va = rep_before.verdicts(), rep_after.verdicts()
    for name in list(dict.fromkeys(list(vb) + list(va))):
        if vb.get(name) != va.get(name):
            show = lambda v: v.render() if v is not None else "missing"  # noqa: E731
            differences.append(f"{name} {show(vb.get(name))} -> {show(va.get(name))}")
    for t in before.tests:
        if t.category == "acceptance":
            other = after.test(t.name)
            if other is None or test_text(before, t) != test_text(after, other):
                warnings.append(f"W_ACCEPTANCE_CHANGED {t.name}")
    return PreservationResult(rep_before, rep_after, not differences, warnings, differences)
