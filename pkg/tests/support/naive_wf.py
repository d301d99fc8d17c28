"""Independent predicates for the class-level well-formedness invariants."""

from __future__ import annotations

PRIMS = ("Int", "Bool", "String")


def _chain(classes: dict, name: str):
    """Ancestor names starting at ``name``, or None on a cycle or dangling superclass."""
    out = []
    while name is not None:
        if name in out or name not in classes:
            return None
        out.append(name)
        name = classes[name].superclass
    return out


def _type_ok(t, classes) -> bool:
    if t.is_set:
        return t.name in classes and t.name not in PRIMS
    return t.name in PRIMS or t.name in classes


def violations(model) -> list:
    names = [c.name for c in model.classes]
    out = []
    if len(set(names)) != len(names):
        out.append("duplicate class")
        return out
    classes = {c.name: c for c in model.classes}
    chains = {}
    for c in model.classes:
        if c.name in PRIMS:
            out.append("reserved class name")
        chain = _chain(classes, c.name)
        if chain is None:
            out.append(f"bad hierarchy at {c.name}")
        chains[c.name] = chain
        for member in c.attributes + c.methods:
            if member.published and not c.published:
                out.append("published member in unpublished class")
        for a in c.attributes:
            if not _type_ok(a.type, classes):
                out.append("bad attribute type")
        attr_names = [a.name for a in c.attributes]
        meth_names = [x.name for x in c.methods]
        if len(set(attr_names)) != len(attr_names) or len(set(meth_names)) != len(meth_names):
            out.append("duplicate member")
        for x in c.methods:
            pn = [p.name for p in x.params]
            if len(set(pn)) != len(pn) or "self" in pn:
                out.append("bad parameter names")
            for t in [p.type for p in x.params] + ([x.return_type] if x.return_type else []):
                if not _type_ok(t, classes):
                    out.append("bad signature type")
            if x.abstract and x.body is not None:
                out.append("abstract method with body")
    for c in model.classes:
        chain = chains[c.name]
        if chain is None:
            continue
        above = [classes[n] for n in chain[1:]]
        inherited_attrs = {a.name for k in above for a in k.attributes}
        if any(a.name in inherited_attrs for a in c.attributes):
            out.append("shadowed attribute")
        for x in c.methods:
            base = next((k.method(x.name) for k in above if k.method(x.name) is not None), None)
            if base is not None and ([p.type for p in base.params], base.return_type) != \
                    ([p.type for p in x.params], x.return_type):
                out.append("override mismatch")
        if not c.abstract:
            # nearest definition of every method name visible in c
            visible = {}
            for k in reversed([classes[n] for n in chain]):
                for x in k.methods:
                    visible[x.name] = x
            if any(x.abstract for x in visible.values()):
                out.append("concrete class with abstract method")
    return out
