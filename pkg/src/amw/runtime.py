"""Direct execution of models.

An :class:`ObjectStore` holds the objects of one run.  :func:`invoke`
dispatches a call either to the method's action body or, for body-less
methods, to the statechart governing the receiver, and records every call
and return in a :class:`Trace`.
"""

from __future__ import annotations

import copy
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional, Union

from . import model as m
from .diagnostics import AmwError
from .ocl import UNDEFINED, EvalContext, EvalError, Ref, default_value, evaluate, render_value

DRIVER = "DRIVER"


class ExecError(AmwError):
    """A failed invocation (E_NONDETERMINISM, E_NO_TRANSITION, E_BUDGET, ...)."""


@dataclass
class RuntimeObject:
    id: int
    cls: str
    slots: dict
    state: Optional[str] = None


@dataclass
class ObjectStore:
    objects: dict = field(default_factory=dict)
    next_id: int = 1
    name_index: dict = field(default_factory=dict)

    def add(self, cls: str, slots: dict, state=None, name=None) -> int:
        oid = self.next_id
        self.next_id += 1
        self.objects[oid] = RuntimeObject(oid, cls, slots, state)
        if name is not None:
            self.name_index[name] = oid
        return oid

    def id_of(self, name: str) -> int:
        return self.name_index[name]

    def names(self) -> dict:
        """id -> fixture name."""
        return {oid: n for n, oid in self.name_index.items()}

    def bindings(self) -> dict:
        return {n: Ref(oid) for n, oid in self.name_index.items()}

    def snapshot(self) -> tuple:
        """Hashable image of all object states, used for exploration and replay checks."""
        return tuple(
            (oid, o.cls, o.state, tuple(sorted(o.slots.items())))
            for oid, o in sorted(self.objects.items())
        )

    def copy(self) -> "ObjectStore":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str  # call | return
    caller: Union[int, str]
    callee: int
    method: str
    args: tuple = ()
    result: object = None
    error: Optional[str] = None

    def render(self, names: Optional[dict] = None) -> str:
        names = names or {}

        def who(x):
            return x if x == DRIVER else names.get(x, f"#{x}")

        args = ", ".join(render_value(a, names) for a in self.args)
        text = f"{self.seq} {self.kind} {who(self.caller)}->{who(self.callee)} {self.method}({args})"
        if self.kind == "return":
            if self.error is not None:
                text += f"=!{self.error}"
            elif self.result is not None:
                text += f"={render_value(self.result, names)}"
        return text


@dataclass(frozen=True)
class Firing:
    """One statechart transition taken during a run."""
    object_id: int
    chart: str
    index: int
    source: str
    target: str


@dataclass
class Trace:
    events: list = field(default_factory=list)
    firings: list = field(default_factory=list)

    def append(self, kind, caller, callee, method, args, result=None, error=None):
        self.events.append(TraceEvent(len(self.events) + 1, kind, caller, callee, method,
                                      tuple(args), result, error))

    def render(self, names: Optional[dict] = None) -> str:
        return "".join(e.render(names) + "\n" for e in self.events)

    def calls(self):
        return [e for e in self.events if e.kind == "call"]


@dataclass(frozen=True)
class ExecBudget:
    max_steps: int = 100000
    max_depth: int = 256

    def __post_init__(self):
        if self.max_steps <= 0 or self.max_depth <= 0:
            raise ValueError("budget limits must be positive")


# -- instantiation ------------------------------------------------------------


def initial_slots(model: m.Model, cls: str) -> dict:
    return {a.name: default_value(a.type) for a in model.all_attributes(cls)}


def new_object(model: m.Model, store: ObjectStore, cls: str, name=None) -> int:
    c = model.cls(cls)
    if c is None:
        raise ExecError("E_UNKNOWN_CLASS", f"no class '{cls}'")
    if c.abstract:
        raise ExecError("E_ABSTRACT_INSTANTIATION", f"cannot instantiate abstract class {cls}")
    chart = model.chart_for_class(cls)
    return store.add(cls, initial_slots(model, cls), chart.initial if chart else None, name)


def config_value(v, ids: dict):
    if isinstance(v, m.Lit):
        return v.value
    if isinstance(v, m.Name):
        return Ref(ids[v.ident])
    return frozenset(Ref(ids[n]) for n in v.names)


def instantiate(model: m.Model, config: m.ObjectConfiguration) -> ObjectStore:
    """Build a fresh store from an object configuration."""
    store = ObjectStore()
    ids = {}
    for decl in config.objects:
        ids[decl.name] = new_object(model, store, decl.cls, decl.name)
    for decl in config.objects:
        slots = store.objects[ids[decl.name]].slots
        for a in decl.assignments:
            slots[a.attr] = config_value(a.value, ids)
    return store


# -- execution ----------------------------------------------------------------


class _Return(Exception):
    def __init__(self, value):
        self.value = value


@contextmanager
def _recursion_room(depth: int):
    needed = depth * 40 + 1000
    old = sys.getrecursionlimit()
    if old < needed:
        sys.setrecursionlimit(needed)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


class Interpreter:
    def __init__(self, model: m.Model, store: ObjectStore, budget: ExecBudget, trace: Trace):
        self.model = model
        self.store = store
        self.budget = budget
        self.trace = trace
        self.steps = 0

    def tick(self):
        self.steps += 1
        if self.steps > self.budget.max_steps:
            raise ExecError("E_BUDGET", f"more than {self.budget.max_steps} steps")

    def eval(self, e, env):
        return evaluate(e, EvalContext(self.store, env))

    def call(self, caller, target: int, method: str, args: list, depth: int):
        if depth > self.budget.max_depth:
            raise ExecError("E_BUDGET", f"call depth exceeds {self.budget.max_depth}")
        obj = self.store.objects[target]
        found = self.model.find_method(obj.cls, method)
        if found is None:
            raise ExecError("E_UNKNOWN_MEMBER", f"{obj.cls} has no method '{method}'")
        meth = found[1]
        if len(args) != len(meth.params):
            raise ExecError("E_ARITY", f"'{method}' takes {len(meth.params)} argument(s)")
        self.trace.append("call", caller, target, method, args)
        try:
            if meth.body is not None:
                result = self.run_body(target, meth, args, depth)
            elif meth.abstract:
                raise ExecError("E_ABSTRACT_CALL", f"'{method}' is abstract in {obj.cls}")
            else:
                result = self.dispatch(target, meth, args, depth)
        except (ExecError, EvalError) as exc:
            self.trace.append("return", caller, target, method, args, error=exc.code)
            raise
        self.trace.append("return", caller, target, method, args, result)
        return result

    def run_body(self, target, meth: m.MethodDef, args, depth):
        env = {"self": Ref(target)}
        env.update({p.name: a for p, a in zip(meth.params, args)})
        try:
            self.run_block(meth.body, env, depth)
        except _Return as r:
            return r.value
        return None

    def dispatch(self, target, meth: m.MethodDef, args, depth):
        obj = self.store.objects[target]
        chart = self.model.chart_for_class(obj.cls)
        if chart is None:
            raise ExecError("E_NO_BEHAVIOR", f"'{meth.name}' has neither body nor statechart")
        self.tick()
        enabled = []
        for index, t in enumerate(chart.transitions):
            if t.source != obj.state or t.trigger != meth.name:
                continue
            env = {"self": Ref(target)}
            env.update(zip(t.params, args))
            if t.guard is None or self._guard(t.guard, env):
                enabled.append((index, t, env))
        if not enabled:
            raise ExecError("E_NO_TRANSITION", f"no transition for '{meth.name}' in state {obj.state}")
        if len(enabled) > 1:
            raise ExecError("E_NONDETERMINISM",
                            f"{len(enabled)} transitions enabled for '{meth.name}' in state {obj.state}")
        index, t, env = enabled[0]
        self.trace.firings.append(Firing(target, chart.owner, index, t.source, t.target))
        if t.actions is not None:
            self.run_block(t.actions, env, depth)
        obj.state = t.target
        return self.eval(t.result, env) if t.result is not None else None

    def _guard(self, guard, env) -> bool:
        value = self.eval(guard, env)
        if not isinstance(value, bool):
            raise EvalError("E_TYPE", "guard must be Bool")
        return value

    def run_block(self, stmts, env, depth):
        for s in stmts:
            self.tick()
            if isinstance(s, m.VarDecl):
                env[s.name] = self.eval(s.expr, env)
            elif isinstance(s, m.Assign):
                value = self.eval(s.expr, env)
                if isinstance(s.target, m.Name):
                    env[s.target.ident] = value
                else:
                    owner = self.eval(s.target.source, env)
                    if owner is UNDEFINED:
                        raise EvalError("E_NAV_UNSET", "assignment through an unset reference")
                    self.store.objects[owner.id].slots[s.target.attr] = value
            elif isinstance(s, m.If):
                cond = self.eval(s.cond, env)
                if not isinstance(cond, bool):
                    raise EvalError("E_TYPE", "condition must be Bool")
                branch = s.then if cond else (s.orelse or [])
                # locals declared inside a branch stay inside it
                inner = dict(env)
                self.run_block(branch, inner, depth)
                for k in env:
                    env[k] = inner[k]
            elif isinstance(s, m.Return):
                raise _Return(self.eval(s.expr, env))
            elif isinstance(s, m.CallStmt):
                receiver = self.eval(s.receiver, env)
                if receiver is UNDEFINED:
                    raise EvalError("E_NAV_UNSET", "call through an unset reference")
                args = [self.eval(a, env) for a in s.args]
                self.call(env["self"].id, receiver.id, s.method, args, depth + 1)


def invoke(model: m.Model, store: ObjectStore, caller, target: int, method: str, args: list,
           budget: Optional[ExecBudget] = None, trace: Optional[Trace] = None):
    """Run one call to completion; returns ``(result or None, trace)``.

    The store is updated in place.  On failure the ExecError or EvalError
    propagates after the failed call has been recorded in ``trace``.
    """
    budget = budget or ExecBudget()
    trace = trace if trace is not None else Trace()
    interp = Interpreter(model, store, budget, trace)
    with _recursion_room(budget.max_depth):
        result = interp.call(caller, target, method, list(args), 1)
    return result, trace
