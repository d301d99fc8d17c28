"""Evaluation of constraint expressions against a runtime object store.

Values are plain Python objects: ``int``, ``bool``, ``str``, :class:`Ref`,
``frozenset`` of :class:`Ref`, and the :data:`UNDEFINED` marker that an
unset reference slot holds.

Evaluation is strict and left to right, except that ``and``, ``or`` and
``implies`` short-circuit and the quantifiers stop at the first deciding
element.  Quantifiers visit set members in ascending object id.  Errors are
raised as :class:`EvalError` with one of these codes:

``E_NAV_UNSET``
    navigating (``.attr`` or ``@state``) through an unset reference
``E_OVERFLOW``
    an arithmetic result outside the signed 64-bit range
``E_UNBOUND_NAME``
    a free name with no binding
``E_TYPE``
    an operand of the wrong kind (only reachable for ill-typed input)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from . import model as m
from .diagnostics import AmwError
from .printer import quote

INT_MIN, INT_MAX = -(2 ** 63), 2 ** 63 - 1


@dataclass(frozen=True, order=True)
class Ref:
    id: int

    def __repr__(self):
        return f"Ref({self.id})"


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __reduce__(self):
        return (_Undefined, ())


UNDEFINED = _Undefined()


class EvalError(AmwError):
    pass


def kind_of(v) -> str:
    if isinstance(v, bool):
        return "Bool"
    if isinstance(v, int):
        return "Int"
    if isinstance(v, str):
        return "String"
    if isinstance(v, (Ref, _Undefined)):
        return "Ref"
    if isinstance(v, frozenset):
        return "Set"
    raise TypeError(f"not a value: {v!r}")


def values_equal(a, b) -> bool:
    if kind_of(a) != kind_of(b):
        raise EvalError("E_TYPE", f"cannot compare {kind_of(a)} with {kind_of(b)}")
    return a == b


def literal_value(lit: m.Lit):
    return lit.value


def default_value(t: m.TypeRef):
    if t.is_set:
        return frozenset()
    return {"Int": 0, "Bool": False, "String": ""}.get(t.name, UNDEFINED)


def render_value(v, names: Optional[dict] = None) -> str:
    """Canonical text of a value; ``names`` maps object ids to display names."""
    names = names or {}
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return quote(v)
    if isinstance(v, Ref):
        return names.get(v.id, f"#{v.id}")
    if v is UNDEFINED:
        return "undefined"
    if isinstance(v, frozenset):
        return "{" + ", ".join(render_value(r, names) for r in sorted(v)) + "}"
    raise TypeError(f"not a value: {v!r}")


@dataclass
class EvalContext:
    store: object  # runtime.ObjectStore or anything exposing .objects[id]
    bindings: dict = field(default_factory=dict)

    def bind(self, name: str, value) -> "EvalContext":
        if name == "self" and "self" in self.bindings:
            raise EvalError("E_TYPE", "'self' cannot be rebound")
        inner = dict(self.bindings)
        inner[name] = value
        return EvalContext(self.store, inner)


def _int(v, op):
    if isinstance(v, bool) or not isinstance(v, int):
        raise EvalError("E_TYPE", f"'{op}' needs Int operands")
    return v


def _bool(v, what):
    if not isinstance(v, bool):
        raise EvalError("E_TYPE", f"{what} must be Bool")
    return v


def _object(v, store):
    if v is UNDEFINED:
        raise EvalError("E_NAV_UNSET", "navigation through an unset reference")
    if not isinstance(v, Ref):
        raise EvalError("E_TYPE", "navigation needs an object")
    return store.objects[v.id]


def checked(n: int) -> int:
    if not INT_MIN <= n <= INT_MAX:
        raise EvalError("E_OVERFLOW", "arithmetic overflow")
    return n


def evaluate(e, ctx: EvalContext):
    """Value of ``e`` in ``ctx``; raises EvalError."""
    if isinstance(e, m.Lit):
        return e.value
    if isinstance(e, m.Name):
        try:
            return ctx.bindings[e.ident]
        except KeyError:
            raise EvalError("E_UNBOUND_NAME", f"no binding for '{e.ident}'") from None
    if isinstance(e, m.Nav):
        obj = _object(evaluate(e.source, ctx), ctx.store)
        if e.attr not in obj.slots:
            raise EvalError("E_TYPE", f"{obj.cls} has no attribute '{e.attr}'")
        return obj.slots[e.attr]
    if isinstance(e, m.StateOf):
        obj = _object(evaluate(e.source, ctx), ctx.store)
        if obj.state is None:
            raise EvalError("E_TYPE", f"{obj.cls} has no statechart")
        return obj.state
    if isinstance(e, m.Unary):
        return not _bool(evaluate(e.operand, ctx), "operand of 'not'")
    if isinstance(e, m.Binary):
        return _binary(e, ctx)
    if isinstance(e, m.SetOp):
        return _setop(e, ctx)
    raise TypeError(f"not an expression: {e!r}")


def _binary(e: m.Binary, ctx):
    op = e.op
    if op in m.BOOL_OPS:
        left = _bool(evaluate(e.left, ctx), f"left operand of '{op}'")
        if op == "and" and not left:
            return False
        if op == "or" and left:
            return True
        if op == "implies" and not left:
            return True
        return _bool(evaluate(e.right, ctx), f"right operand of '{op}'")
    left, right = evaluate(e.left, ctx), evaluate(e.right, ctx)
    if op == "=":
        return values_equal(left, right)
    if op == "<>":
        return not values_equal(left, right)
    a, b = _int(left, op), _int(right, op)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "+":
        return checked(a + b)
    if op == "-":
        return checked(a - b)
    return checked(a * b)


def _setop(e: m.SetOp, ctx):
    src = evaluate(e.source, ctx)
    if not isinstance(src, frozenset):
        raise EvalError("E_TYPE", f"'->{e.op}' needs a set")
    if e.op == "size":
        return len(src)
    if e.op == "includes":
        arg = evaluate(e.arg, ctx)
        if kind_of(arg) != "Ref":
            raise EvalError("E_TYPE", "'->includes' needs an object")
        return arg in src
    if e.var == "self":
        raise EvalError("E_TYPE", "'self' cannot be rebound")
    decided = e.op == "exists"  # value that ends the iteration early
    for member in sorted(src):
        if _bool(evaluate(e.arg, ctx.bind(e.var, member)), f"body of '->{e.op}'") == decided:
            return decided
    return not decided


# -- invariants ---------------------------------------------------------------


class InvariantResult(NamedTuple):
    invariant: str
    object_id: int
    verdict: str  # holds | fails | error
    reason: Optional[str] = None


def check_invariants(model: m.Model, store) -> list:
    """Evaluate every invariant on every live instance of its context class."""
    results = []
    for inv in model.invariants:
        for oid in sorted(store.objects):
            obj = store.objects[oid]
            if not model.is_subclass(obj.cls, inv.context):
                continue
            ctx = EvalContext(store, {**store.bindings(), "self": Ref(oid)})
            try:
                value = evaluate(inv.expr, ctx)
            except EvalError as exc:
                results.append(InvariantResult(inv.name, oid, "error", exc.code))
                continue
            if not isinstance(value, bool):
                results.append(InvariantResult(inv.name, oid, "error", "E_TYPE"))
            else:
                results.append(InvariantResult(inv.name, oid, "holds" if value else "fails"))
    return results
