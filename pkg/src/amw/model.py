"""In-memory representation of every notation the workbench understands.

Nodes are plain dataclasses.  Source positions and file paths are carried
along for diagnostics but excluded from equality, so two models compare
equal when they are structurally identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union


class Pos(NamedTuple):
    line: int
    column: int


def _pos():
    return field(default=None, compare=False, repr=False, kw_only=True)


PRIMITIVES = ("Int", "Bool", "String")
CATEGORIES = ("unit", "integration", "acceptance")


@dataclass(frozen=True)
class TypeRef:
    name: str
    is_set: bool = False

    @property
    def is_primitive(self) -> bool:
        return not self.is_set and self.name in PRIMITIVES

    @property
    def is_object(self) -> bool:
        return not self.is_set and self.name not in PRIMITIVES

    def __str__(self) -> str:
        return f"set<{self.name}>" if self.is_set else self.name


INT = TypeRef("Int")
BOOL = TypeRef("Bool")
STRING = TypeRef("String")


# -- expressions ------------------------------------------------------------


@dataclass
class Lit:
    value: Union[int, bool, str]
    # kept explicitly so that Lit(True) != Lit(1)
    kind: str = ""
    pos: Optional[Pos] = _pos()

    def __post_init__(self):
        if not self.kind:
            if isinstance(self.value, bool):
                self.kind = "Bool"
            elif isinstance(self.value, int):
                self.kind = "Int"
            else:
                self.kind = "String"


@dataclass
class Name:
    ident: str
    pos: Optional[Pos] = _pos()


@dataclass
class Nav:
    source: "Expr"
    attr: str
    pos: Optional[Pos] = _pos()


@dataclass
class StateOf:
    source: "Expr"
    pos: Optional[Pos] = _pos()


@dataclass
class Unary:
    op: str  # only "not"
    operand: "Expr"
    pos: Optional[Pos] = _pos()


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Optional[Pos] = _pos()


@dataclass
class SetOp:
    source: "Expr"
    op: str  # size | includes | forAll | exists
    var: Optional[str] = None
    arg: Optional["Expr"] = None
    pos: Optional[Pos] = _pos()


Expr = Union[Lit, Name, Nav, StateOf, Unary, Binary, SetOp]

BOOL_OPS = ("and", "or", "implies")
COMPARE_OPS = ("=", "<>", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*")
QUANTIFIERS = ("forAll", "exists")


# -- action language ----------------------------------------------------------


@dataclass
class VarDecl:
    name: str
    expr: Expr
    pos: Optional[Pos] = _pos()


@dataclass
class Assign:
    target: Expr  # Name (local) or Nav (slot)
    expr: Expr
    pos: Optional[Pos] = _pos()


@dataclass
class If:
    cond: Expr
    then: list
    orelse: Optional[list] = None
    pos: Optional[Pos] = _pos()


@dataclass
class Return:
    expr: Expr
    pos: Optional[Pos] = _pos()


@dataclass
class CallStmt:
    receiver: Expr
    method: str
    args: list = field(default_factory=list)
    pos: Optional[Pos] = _pos()


Statement = Union[VarDecl, Assign, If, Return, CallStmt]


# -- class diagrams -----------------------------------------------------------


@dataclass
class AttributeDef:
    name: str
    type: TypeRef
    published: bool = False
    pos: Optional[Pos] = _pos()


@dataclass
class Param:
    name: str
    type: TypeRef
    pos: Optional[Pos] = _pos()


@dataclass
class MethodDef:
    name: str
    params: list = field(default_factory=list)
    return_type: Optional[TypeRef] = None
    body: Optional[list] = None
    abstract: bool = False
    published: bool = False
    pos: Optional[Pos] = _pos()

    def signature(self) -> tuple:
        return tuple(p.type for p in self.params), self.return_type


@dataclass
class ClassDef:
    name: str
    superclass: Optional[str] = None
    abstract: bool = False
    published: bool = False
    attributes: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    pos: Optional[Pos] = _pos()
    source: Optional[str] = field(default=None, compare=False, repr=False, kw_only=True)

    def attribute(self, name: str) -> Optional[AttributeDef]:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def method(self, name: str) -> Optional[MethodDef]:
        for m in self.methods:
            if m.name == name:
                return m
        return None


# -- statecharts --------------------------------------------------------------


@dataclass
class TransitionDef:
    source: str
    target: str
    trigger: str
    params: list = field(default_factory=list)  # names bound to trigger args
    guard: Optional[Expr] = None
    actions: Optional[list] = None
    result: Optional[Expr] = None
    pos: Optional[Pos] = _pos()


@dataclass
class Statechart:
    owner: str
    initial: str
    states: list = field(default_factory=list)
    transitions: list = field(default_factory=list)
    pos: Optional[Pos] = _pos()
    source: Optional[str] = field(default=None, compare=False, repr=False, kw_only=True)

    @property
    def name(self) -> str:
        return self.owner


# -- object diagrams ----------------------------------------------------------


@dataclass
class SetValue:
    names: list = field(default_factory=list)
    pos: Optional[Pos] = _pos()


Value = Union[Lit, Name, SetValue]


@dataclass
class Assignment:
    attr: str
    value: Value
    pos: Optional[Pos] = _pos()


@dataclass
class ObjectDecl:
    name: str
    cls: str
    assignments: list = field(default_factory=list)
    anchor: bool = False
    pos: Optional[Pos] = _pos()

    def value_of(self, attr: str) -> Optional[Value]:
        for a in self.assignments:
            if a.attr == attr:
                return a.value
        return None


@dataclass
class ObjectConfiguration:
    name: str
    objects: list = field(default_factory=list)
    pos: Optional[Pos] = _pos()
    source: Optional[str] = field(default=None, compare=False, repr=False, kw_only=True)

    def object(self, name: str) -> Optional[ObjectDecl]:
        for o in self.objects:
            if o.name == name:
                return o
        return None


@dataclass
class PatternConfiguration(ObjectConfiguration):
    pass


# -- sequence diagrams --------------------------------------------------------


@dataclass
class Stimulus:
    target: str
    method: str
    args: list = field(default_factory=list)  # Lit or Name
    expect: Optional[Lit] = None
    pos: Optional[Pos] = _pos()


@dataclass
class ExpectMessage:
    caller: str
    callee: str
    method: str
    pos: Optional[Pos] = _pos()


@dataclass
class AssertStep:
    expr: Expr
    pos: Optional[Pos] = _pos()


@dataclass
class SequenceDefinition:
    name: str
    steps: list = field(default_factory=list)
    strict: bool = False
    pos: Optional[Pos] = _pos()
    source: Optional[str] = field(default=None, compare=False, repr=False, kw_only=True)


# -- invariants and tests -----------------------------------------------------


@dataclass
class NamedInvariant:
    name: str
    context: str
    expr: Expr
    pos: Optional[Pos] = _pos()
    source: Optional[str] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass
class Oracle:
    pattern: Optional[str] = None
    asserts: list = field(default_factory=list)
    pos: Optional[Pos] = _pos()


@dataclass
class TestCase:
    name: str
    category: str
    fixture: str
    driver: str
    oracle: Optional[Oracle] = None
    pos: Optional[Pos] = _pos()
    source: Optional[str] = field(default=None, compare=False, repr=False, kw_only=True)

    __test__ = False  # keep pytest from collecting this class


@dataclass
class Manifest:
    name: str
    files: list = field(default_factory=list)
    pos: Optional[Pos] = _pos()
    source: Optional[str] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass
class Model:
    classes: list = field(default_factory=list)
    statecharts: list = field(default_factory=list)
    configs: list = field(default_factory=list)
    patterns: list = field(default_factory=list)
    sequences: list = field(default_factory=list)
    invariants: list = field(default_factory=list)
    tests: list = field(default_factory=list)
    name: str = field(default="model", compare=False)
    manifest: Optional[Manifest] = None

    SECTIONS = ("classes", "statecharts", "configs", "patterns", "sequences", "invariants", "tests")

    def items(self):
        """All top-level items in canonical section order."""
        if self.manifest is not None:
            yield self.manifest
        for section in self.SECTIONS:
            yield from getattr(self, section)

    def cls(self, name: str) -> Optional[ClassDef]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def config(self, name: str) -> Optional[ObjectConfiguration]:
        for c in self.configs:
            if c.name == name:
                return c
        return None

    def pattern(self, name: str) -> Optional[PatternConfiguration]:
        for p in self.patterns:
            if p.name == name:
                return p
        return None

    def sequence(self, name: str) -> Optional[SequenceDefinition]:
        for s in self.sequences:
            if s.name == name:
                return s
        return None

    def test(self, name: str) -> Optional[TestCase]:
        for t in self.tests:
            if t.name == name:
                return t
        return None

    def chart_of(self, owner: str) -> Optional[Statechart]:
        for sc in self.statecharts:
            if sc.owner == owner:
                return sc
        return None

    # -- inheritance helpers (tolerant of ill-formed models) --

    def ancestors(self, name: str) -> list:
        """Class names from ``name`` upward, ``name`` first; stops on cycles."""
        chain, seen = [], set()
        current = self.cls(name)
        while current is not None and current.name not in seen:
            chain.append(current.name)
            seen.add(current.name)
            current = self.cls(current.superclass) if current.superclass else None
        return chain

    def is_subclass(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def subclasses(self, name: str) -> list:
        return [c for c in self.classes if c.superclass == name]

    def descendants(self, name: str) -> list:
        """Strict descendants of ``name`` in document order."""
        return [c for c in self.classes if c.name != name and self.is_subclass(c.name, name)]

    def chart_for_class(self, name: str) -> Optional[Statechart]:
        """The statechart governing instances of ``name`` (own or inherited)."""
        for anc in self.ancestors(name):
            sc = self.chart_of(anc)
            if sc is not None:
                return sc
        return None

    def all_attributes(self, name: str) -> list:
        """Attributes visible in ``name``: root-most ancestor's first."""
        result = []
        for anc in reversed(self.ancestors(name)):
            result.extend(self.cls(anc).attributes)
        return result

    def find_attribute(self, cls: str, attr: str):
        for anc in self.ancestors(cls):
            a = self.cls(anc).attribute(attr)
            if a is not None:
                return anc, a
        return None

    def find_method(self, cls: str, method: str):
        for anc in self.ancestors(cls):
            m = self.cls(anc).method(method)
            if m is not None:
                return anc, m
        return None


def lit(value) -> Lit:
    return Lit(value)
