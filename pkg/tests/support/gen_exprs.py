"""Random stores and constraint expressions over a one-class schema.

The schema is ``Node { i: Int; b: Bool; s: String; next: Node; kids: set<Node> }``
with a three-state statechart, so every expression form is reachable.
"""

from __future__ import annotations

import random

from amw import model as m
from amw.ocl import UNDEFINED, EvalContext, Ref
from amw.runtime import ObjectStore

from .naive_ocl import UNSET

SCHEMA = """
class Node {
  attr i: Int;
  attr b: Bool;
  attr s: String;
  attr next: Node;
  attr kids: set<Node>;
  method poke();
}

statechart for Node {
  initial A;
  state A;
  state B;
  state C;
  trans A -> B on poke();
}
"""

STATES = ("A", "B", "C")
STRINGS = ("", "x", "A", "B", "yy")
BIG = 2 ** 62


def random_store(rng: random.Random):
    """(ObjectStore, naive dict store, self id) with up to six objects."""
    n = rng.randint(1, 6)
    ids = list(range(1, n + 1))
    store = ObjectStore()
    naive = {}
    for oid in ids:
        nxt = rng.choice(ids) if rng.random() < 0.7 else None
        kids = frozenset(rng.sample(ids, rng.randint(0, n)))
        slots = {
            "i": rng.choice((0, 1, -1, 5, rng.randint(-20, 20), BIG, -BIG)),
            "b": rng.random() < 0.5,
            "s": rng.choice(STRINGS),
            "next": Ref(nxt) if nxt else UNDEFINED,
            "kids": frozenset(Ref(k) for k in kids),
        }
        state = rng.choice(STATES)
        name = f"n{oid}" if rng.random() < 0.5 else None
        store.add("Node", slots, state, name)
        naive[oid] = {
            "cls": "Node",
            "state": state,
            "slots": {**slots, "next": ("ref", nxt) if nxt else UNSET, "kids": ("set", kids)},
        }
    self_id = rng.choice(ids)
    return store, naive, self_id


def to_naive(v):
    if isinstance(v, Ref):
        return ("ref", v.id)
    if v is UNDEFINED:
        return UNSET
    if isinstance(v, frozenset):
        return ("set", frozenset(r.id for r in v))
    return v


def contexts(store: ObjectStore, self_id: int):
    bindings = {**store.bindings(), "self": Ref(self_id)}
    return EvalContext(store, bindings), {k: to_naive(v) for k, v in bindings.items()}


class ExprGen:
    """Type-directed generator; an occasional ill-typed or unbound leaf exercises error paths."""

    def __init__(self, rng: random.Random, names=()):
        self.rng = rng
        self.names = list(names)
        self.vars = []
        self.counter = 0

    def node(self, depth):
        r = self.rng
        if depth > 1 and r.random() < 0.3:
            return m.Nav(self.node(depth - 1), "next")
        pool = ["self"] + self.names + self.vars
        if r.random() < 0.03:
            return m.Name("ghost")
        return m.Name(r.choice(pool))

    def kids(self, depth):
        # the set operation and the navigation each take one level
        return m.Nav(self.node(depth - 2), "kids")

    def gen(self, t: str, depth: int):
        r = self.rng
        if depth <= 1 or r.random() < 0.2:
            return self.leaf(t)
        if r.random() < 0.03:
            t = r.choice(("Int", "Bool", "String"))  # deliberately ill-typed subterm
        if t == "Int":
            k = r.randrange(3)
            if k == 0:
                return m.Binary(r.choice("+-*"), self.gen("Int", depth - 1), self.gen("Int", depth - 1))
            if k == 1 and depth > 2:
                return m.SetOp(self.kids(depth), "size")
            return m.Nav(self.node(depth - 1), "i")
        if t == "String":
            if r.random() < 0.5:
                return m.StateOf(self.node(depth - 1))
            return m.Nav(self.node(depth - 1), "s")
        k = r.randrange(7)
        if k == 0:
            return m.Unary("not", self.gen("Bool", depth - 1))
        if k == 1:
            return m.Binary(r.choice(("and", "or", "implies")), self.gen("Bool", depth - 1),
                            self.gen("Bool", depth - 1))
        if k == 2:
            return m.Binary(r.choice(("<", "<=", ">", ">=")), self.gen("Int", depth - 1),
                            self.gen("Int", depth - 1))
        if k == 3:
            sub = r.choice(("Int", "Bool", "String", "Node"))
            mk = self.node if sub == "Node" else (lambda d: self.gen(sub, d))
            return m.Binary(r.choice(("=", "<>")), mk(depth - 1), mk(depth - 1))
        if k == 4 and depth > 2:
            return m.SetOp(self.kids(depth), "includes", None, self.node(depth - 1))
        if k == 5 and depth > 2:
            self.counter += 1
            var = f"q{self.counter}"
            src = self.kids(depth)
            self.vars.append(var)
            body = self.gen("Bool", depth - 1)
            self.vars.pop()
            return m.SetOp(src, r.choice(("forAll", "exists")), var, body)
        return m.Nav(self.node(depth - 1), "b")

    def leaf(self, t: str):
        r = self.rng
        if t == "Int":
            return m.Lit(r.choice((0, 1, -3, 7, BIG, -BIG)))
        if t == "Bool":
            return m.Lit(r.random() < 0.5)
        if t == "String":
            return m.Lit(r.choice(STRINGS))
        return self.node(1)


def depth_of(e) -> int:
    kids = []
    for attr in ("source", "operand", "left", "right", "arg"):
        child = getattr(e, attr, None)
        if child is not None and not isinstance(child, (str, int)):
            kids.append(child)
    return 1 + max((depth_of(k) for k in kids), default=0)
