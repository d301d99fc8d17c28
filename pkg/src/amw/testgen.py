"""Test derivation from statecharts.

Exploration works on concrete configurations (state plus slot values)
rather than on the chart graph, because guards over attributes make the
bare graph unsound.  Trigger arguments come from small finite domains.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import model as m
from .ocl import EvalError, Ref
from .printer import format_literal, print_item
from .runtime import DRIVER, ExecError, ObjectStore, instantiate, invoke, new_object

NODE_CAP = 10000
DEFAULT_BOUND = 8
DEFAULT_K = 3
GEN_BEGIN = "// GEN-BEGIN"
GEN_END = "// GEN-END"


class TestgenError(Exception):
    pass


@dataclass(frozen=True)
class CoverageGoal:
    kind: str  # state | transition | path
    bound: int = DEFAULT_K

    def __post_init__(self):
        if self.kind not in ("state", "transition", "path"):
            raise ValueError(f"unknown coverage kind {self.kind!r}")
        if self.bound < 1:
            raise ValueError("path bound must be at least 1")


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    trigger: str
    args: tuple
    transition: Optional[int]


@dataclass
class ReachabilityGraph:
    chart: m.Statechart
    subject: str  # fixture name of the explored object
    subject_id: int
    stores: list = field(default_factory=list)  # node -> ObjectStore
    depth: list = field(default_factory=list)
    parent: list = field(default_factory=list)  # node -> edge index or None
    edges: list = field(default_factory=list)
    out: list = field(default_factory=list)  # node -> edge indices
    exploded: bool = False
    max_depth: int = 0

    def state(self, node: int) -> str:
        return self.stores[node].objects[self.subject_id].state

    def path_to(self, node: int) -> list:
        """Edges of the BFS-tree path from the root to ``node``."""
        path = []
        while self.parent[node] is not None:
            e = self.parent[node]
            path.append(e)
            node = self.edges[e].source
        return path[::-1]

    def discovered_transitions(self) -> set:
        return {e.transition for e in self.edges if e.transition is not None}

    def node_keys(self) -> set:
        return {s.snapshot() for s in self.stores}

    def edge_keys(self) -> set:
        keys = [s.snapshot() for s in self.stores]
        return {(keys[e.source], e.trigger, e.args, keys[e.target]) for e in self.edges}


def string_domain(model: m.Model, chart: m.Statechart, store: ObjectStore) -> list:
    """String literals used in guards, String slot values of the seed, and ""."""
    found = {""}

    def walk(e):
        if isinstance(e, m.Lit):
            if e.kind == "String":
                found.add(e.value)
        elif isinstance(e, (m.Nav, m.StateOf)):
            walk(e.source)
        elif isinstance(e, m.Unary):
            walk(e.operand)
        elif isinstance(e, m.Binary):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, m.SetOp):
            walk(e.source)
            if e.arg is not None:
                walk(e.arg)

    for t in chart.transitions:
        if t.guard is not None:
            walk(t.guard)
    for obj in store.objects.values():
        found.update(v for v in obj.slots.values() if isinstance(v, str))
    return sorted(found)


def param_domain(t: m.TypeRef, model, store: ObjectStore, strings: list, int_bound: int) -> list:
    if t == m.BOOL:
        return [False, True]
    if t == m.INT:
        return list(range(-int_bound, int_bound + 1))
    if t == m.STRING:
        return strings
    if t.is_set:
        return [frozenset()]
    return [Ref(oid) for oid, o in sorted(store.objects.items()) if model.is_subclass(o.cls, t.name)]


def seed_store(model: m.Model, chart: m.Statechart, seed: Optional[m.ObjectConfiguration]):
    """Instantiate the seed configuration; returns ``(store, subject name)``."""
    if seed is None:
        owner = model.cls(chart.owner)
        cls = chart.owner
        if owner.abstract:
            concrete = [c.name for c in model.descendants(chart.owner) if not c.abstract]
            if not concrete:
                raise TestgenError(f"no concrete class to instantiate for chart {chart.owner}")
            cls = concrete[0]
        store = ObjectStore()
        new_object(model, store, cls, "subject")
        return store, "subject"
    store = instantiate(model, seed)
    subjects = [d.name for d in seed.objects if model.is_subclass(d.cls, chart.owner)]
    if len(subjects) != 1:
        raise TestgenError(f"seed {seed.name} must hold exactly one {chart.owner} object, found {len(subjects)}")
    return store, subjects[0]


def _triggers(model, chart: m.Statechart, cls: str) -> list:
    names = list(dict.fromkeys(t.trigger for t in chart.transitions))
    result = []
    for name in names:
        found = model.find_method(cls, name)
        if found is not None:
            result.append(found[1])
    return result


def explore(model: m.Model, chart: m.Statechart, seed: Optional[m.ObjectConfiguration] = None,
            k: int = DEFAULT_K, int_bound: int = DEFAULT_BOUND, node_cap: int = NODE_CAP) -> ReachabilityGraph:
    """Breadth-first exploration of the configurations reachable by triggering the chart."""
    store, subject = seed_store(model, chart, seed)
    sid = store.id_of(subject)
    graph = ReachabilityGraph(chart, subject, sid, max_depth=k * len(chart.transitions))
    strings = string_domain(model, chart, store)
    triggers = _triggers(model, chart, store.objects[sid].cls)
    domains = {meth.name: [param_domain(p.type, model, store, strings, int_bound) for p in meth.params]
               for meth in triggers}

    seen = {store.snapshot(): 0}
    graph.stores.append(store)
    graph.depth.append(0)
    graph.parent.append(None)
    graph.out.append([])
    queue = deque([0])
    while queue:
        node = queue.popleft()
        if graph.depth[node] >= graph.max_depth:
            continue
        for meth in triggers:
            for args in itertools.product(*domains[meth.name]):
                trial = graph.stores[node].copy()
                try:
                    _, trace = invoke(model, trial, DRIVER, sid, meth.name, list(args))
                except (ExecError, EvalError):
                    continue
                fired = None
                if trace.firings and trace.firings[0].object_id == sid and trace.firings[0].chart == chart.owner:
                    fired = trace.firings[0].index
                key = trial.snapshot()
                target = seen.get(key)
                if target is None:
                    if len(graph.stores) >= node_cap:
                        graph.exploded = True
                        continue
                    target = len(graph.stores)
                    seen[key] = target
                    graph.stores.append(trial)
                    graph.depth.append(graph.depth[node] + 1)
                    graph.parent.append(len(graph.edges))
                    graph.out.append([])
                    queue.append(target)
                graph.out[node].append(len(graph.edges))
                graph.edges.append(Edge(node, target, meth.name, tuple(args), fired))
    return graph


# -- derivation ---------------------------------------------------------------


@dataclass
class GeneratedTest:
    name: str
    kind: str
    element: object  # state name, transition index, or tuple of transition indices
    stimuli: list = field(default_factory=list)  # (method, args)
    expected_state: Optional[str] = None
    coverable: bool = True
    reason: Optional[str] = None


@dataclass
class Derivation:
    chart: m.Statechart
    goal: CoverageGoal
    graph: ReachabilityGraph
    tests: list
    fixture: m.ObjectConfiguration
    fixture_generated: bool
    text: str


def test_prefix(owner: str, kind: str) -> str:
    short = {"state": "state", "transition": "trans", "path": "path"}[kind]
    return f"gen_{owner}__{short}__"


def transition_test_names(chart: m.Statechart) -> list:
    """Generated-test name for every transition, in document order."""
    names, counts = [], {}
    for t in chart.transitions:
        base = f"{test_prefix(chart.owner, 'transition')}{t.source}__{t.trigger}__{t.target}"
        counts[base] = counts.get(base, 0) + 1
        names.append(base if counts[base] == 1 else f"{base}__{counts[base]}")
    return names


def state_test_name(chart: m.Statechart, state: str) -> str:
    return f"{test_prefix(chart.owner, 'state')}{state}"


def _stimuli(graph: ReachabilityGraph, edges: list) -> list:
    return [(graph.edges[e].trigger, graph.edges[e].args) for e in edges]


def _first_edge_for(graph: ReachabilityGraph, index: int) -> Optional[int]:
    best = None
    for i, e in enumerate(graph.edges):
        if e.transition == index and (best is None or graph.depth[e.source] < graph.depth[graph.edges[best].source]):
            best = i
    return best


def chart_paths(chart: m.Statechart, k: int) -> list:
    """Transition-index paths from the initial state with at most k edges, each edge used at most twice."""
    paths = []

    def extend(path, state):
        for i, t in enumerate(chart.transitions):
            if t.source != state or path.count(i) >= 2:
                continue
            p = path + (i,)
            paths.append(p)
            if len(p) < k:
                extend(p, t.target)

    extend((), chart.initial)
    return paths


def realize_path(graph: ReachabilityGraph, path: tuple) -> Optional[list]:
    frontier = [(0, [])]
    for index in path:
        nxt, seen = [], set()
        for node, edges in frontier:
            for e in graph.out[node]:
                edge = graph.edges[e]
                if edge.transition == index and edge.target not in seen:
                    seen.add(edge.target)
                    nxt.append((edge.target, edges + [e]))
        if not nxt:
            return None
        frontier = nxt
    return frontier[0][1]


def derive(model: m.Model, chart: m.Statechart, goal: CoverageGoal,
           seed: Optional[m.ObjectConfiguration] = None, int_bound: int = DEFAULT_BOUND,
           graph: Optional[ReachabilityGraph] = None) -> Derivation:
    """Generate tests reaching every state, transition or bounded path."""
    if graph is None:
        graph = explore(model, chart, seed, goal.bound, int_bound)
    tests = []
    truncated = " (exploration truncated)" if graph.exploded else ""
    if goal.kind == "state":
        first = {}
        for node in range(len(graph.stores)):
            first.setdefault(graph.state(node), node)
        for s in chart.states:
            name = state_test_name(chart, s)
            if s in first:
                edges = graph.path_to(first[s])
                tests.append(GeneratedTest(name, "state", s, _stimuli(graph, edges), s))
            else:
                tests.append(GeneratedTest(name, "state", s, coverable=False,
                                           reason=f"state {s} not reached within depth {graph.max_depth}{truncated}"))
    elif goal.kind == "transition":
        reached = {graph.state(n) for n in range(len(graph.stores))}
        for index, (t, name) in enumerate(zip(chart.transitions, transition_test_names(chart))):
            e = _first_edge_for(graph, index)
            if e is not None:
                edges = graph.path_to(graph.edges[e].source) + [e]
                tests.append(GeneratedTest(name, "transition", index, _stimuli(graph, edges), t.target))
                continue
            if t.source not in reached:
                reason = f"source state {t.source} not reached within depth {graph.max_depth}"
            else:
                reason = "no argument in the parameter domain enables the guard (unsatisfiable or out of domain)"
            tests.append(GeneratedTest(name, "transition", index, coverable=False, reason=reason + truncated))
    else:
        for i, path in enumerate(chart_paths(chart, goal.bound), 1):
            name = f"{test_prefix(chart.owner, 'path')}{i}"
            edges = realize_path(graph, path)
            target = chart.transitions[path[-1]].target
            if edges is None:
                tests.append(GeneratedTest(name, "path", path, coverable=False,
                                           reason="no concrete run follows this path within the domain" + truncated))
            else:
                tests.append(GeneratedTest(name, "path", path, _stimuli(graph, edges), target))
    fixture, generated = _fixture(model, chart, graph, seed)
    text = render_tests(chart, goal, graph, tests, fixture, generated)
    return Derivation(chart, goal, graph, tests, fixture, generated, text)


def _fixture(model, chart, graph, seed):
    if seed is not None:
        return seed, False
    cls = graph.stores[0].objects[graph.subject_id].cls
    conf = m.ObjectConfiguration(f"gen_{chart.owner}_fixture", [m.ObjectDecl(graph.subject, cls)])
    return conf, True


def _arg_text(v, names) -> str:
    if isinstance(v, Ref):
        return names[v.id]
    return format_literal(m.Lit(v))


def render_tests(chart, goal, graph, tests, fixture, fixture_generated) -> str:
    """Concrete syntax for the generated tests: fixture, one sequence and one test each."""
    names = graph.stores[0].names()
    parts = [f"// {goal.kind} coverage for statechart {chart.owner}\n"]
    if fixture_generated:
        parts.append(print_item(fixture))
    for t in tests:
        if not t.coverable:
            parts.append(f"// UNCOVERABLE {t.name}: {t.reason}\n")
            continue
        steps = [m.Stimulus(graph.subject, meth, [m.Name(names[a.id]) if isinstance(a, Ref) else m.Lit(a)
                                                   for a in args])
                 for meth, args in t.stimuli]
        parts.append(print_item(m.SequenceDefinition(t.name, steps)))
        oracle = m.Oracle(None, [m.Binary("=", m.StateOf(m.Name(graph.subject)), m.Lit(t.expected_state))])
        parts.append(print_item(m.TestCase(t.name, "unit", fixture.name, t.name, oracle)))
    return "\n".join(parts)


def splice_generated(existing: Optional[str], generated: str, tag: str = "") -> str:
    """Replace the text between the GEN markers for ``tag``, keeping everything else."""
    begin = f"{GEN_BEGIN} {tag}".rstrip()
    end_marker = f"{GEN_END} {tag}".rstrip()
    block = f"{begin}\n{generated}\n{end_marker}\n"
    if existing is None:
        return block
    lines = existing.splitlines(keepends=True)
    stripped = [ln.rstrip("\r\n") for ln in lines]
    if begin in stripped and end_marker in stripped[stripped.index(begin):]:
        start = stripped.index(begin)
        end = stripped.index(end_marker, start)
        return "".join(lines[:start]) + block + "".join(lines[end + 1:])
    sep = "" if existing.endswith("\n") or not existing else "\n"
    return existing + sep + block
