"""Running model-defined tests: fixture, driver and oracle.

A test instantiates its fixture configuration, plays the driver sequence
against it, then checks expected interactions against the recorded trace,
matches the oracle pattern against the final store and evaluates the
oracle assertions.
"""

from __future__ import annotations

import fnmatch
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import model as m
from .diagnostics import AmwError
from .ocl import EvalContext, EvalError, Ref, evaluate, render_value
from .runtime import DRIVER, ExecBudget, ExecError, ObjectStore, Trace, instantiate, invoke

PASS, FAIL, ERROR = "PASS", "FAIL", "ERROR"


@dataclass(frozen=True)
class Verdict:
    kind: str  # PASS | FAIL | ERROR
    reasons: tuple = ()

    @classmethod
    def passed(cls):
        return cls(PASS)

    @classmethod
    def failed(cls, *reasons):
        return cls(FAIL, tuple(reasons))

    @classmethod
    def error(cls, reason):
        return cls(ERROR, (reason,))

    @property
    def ok(self) -> bool:
        return self.kind == PASS

    def render(self) -> str:
        return self.kind if not self.reasons else f"{self.kind} {'; '.join(self.reasons)}"


@dataclass
class MatchResult:
    matched: bool
    witness: dict = field(default_factory=dict)
    first_failure: Optional[str] = None


class PatternError(AmwError):
    pass


# -- pattern matching ---------------------------------------------------------


def _attr_ok(model, decl: m.ObjectDecl, obj) -> bool:
    if not model.is_subclass(obj.cls, decl.cls):
        return False
    for a in decl.assignments:
        if isinstance(a.value, m.Lit):
            if a.attr not in obj.slots:
                return False
            actual = obj.slots[a.attr]
            if type(actual) is not type(a.value.value) or actual != a.value.value:
                return False
    return True


def _links_ok(decl: m.ObjectDecl, obj, witness: dict) -> Optional[bool]:
    """Check reference constraints of ``decl`` whose targets are already mapped.

    Returns False on a violated constraint, None if some target is not mapped
    yet, True once every reference constraint is satisfied.
    """
    complete = True
    for a in decl.assignments:
        if isinstance(a.value, m.Lit):
            continue
        names = [a.value.ident] if isinstance(a.value, m.Name) else a.value.names
        if any(n not in witness for n in names):
            complete = False
            continue
        actual = obj.slots.get(a.attr)
        if isinstance(a.value, m.Name):
            if actual != Ref(witness[names[0]]):
                return False
        elif actual != frozenset(Ref(witness[n]) for n in names):
            return False
    return True if complete else None


def match_pattern(model: m.Model, pattern: m.PatternConfiguration, store: ObjectStore,
                  anchors: Optional[dict] = None) -> MatchResult:
    """Find the first injective embedding of ``pattern`` into ``store``.

    Pattern objects are bound in declaration order, each trying candidate
    objects in ascending id; explicit anchors and objects named in
    ``anchors`` are pinned to the given ids.
    """
    anchors = anchors or {}
    decls = list(pattern.objects)
    for d in decls:
        if d.anchor and d.name not in anchors:
            raise PatternError("E_ANCHOR_UNKNOWN", f"anchored object '{d.name}' has no fixture object")
    ids = sorted(store.objects)
    witness: dict = {}
    used: set = set()
    deepest = [0, None]

    def consistent(i) -> bool:
        # every reference constraint among the first i+1 pattern objects
        for d in decls[: i + 1]:
            if _links_ok(d, store.objects[witness[d.name]], witness) is False:
                return False
        return True

    def search(i) -> bool:
        if i == len(decls):
            return all(_links_ok(d, store.objects[witness[d.name]], witness) is True for d in decls)
        d = decls[i]
        candidates = [anchors[d.name]] if d.name in anchors else ids
        for oid in candidates:
            if oid in used or oid not in store.objects:
                continue
            if not _attr_ok(model, d, store.objects[oid]):
                continue
            witness[d.name] = oid
            used.add(oid)
            if consistent(i) and search(i + 1):
                return True
            del witness[d.name]
            used.discard(oid)
        if i >= deepest[0]:
            deepest[0], deepest[1] = i, d.name
        return False

    if search(0):
        return MatchResult(True, dict(witness))
    name = deepest[1]
    return MatchResult(False, {}, f"no object in the store matches pattern object '{name}'")


def witness_valid(model: m.Model, pattern: m.PatternConfiguration, store: ObjectStore,
                  witness: dict) -> bool:
    """Re-check class, attribute and link conditions for a complete witness."""
    if len(set(witness.values())) != len(witness) or set(witness) != {d.name for d in pattern.objects}:
        return False
    for d in pattern.objects:
        obj = store.objects[witness[d.name]]
        if not _attr_ok(model, d, obj) or _links_ok(d, obj, witness) is not True:
            return False
    return True


# -- expected interactions ----------------------------------------------------


def interaction_list(trace: Trace, names: dict) -> list:
    """Calls between model objects as ``(caller, callee, method)`` names."""
    def who(x):
        return names.get(x, f"#{x}")

    return [(who(e.caller), who(e.callee), e.method) for e in trace.calls() if e.caller != DRIVER]


def match_expectations(sequence: m.SequenceDefinition, trace: Trace, names: dict) -> Optional[str]:
    """None when the trace honours every ``expect`` step, else the first divergence."""
    expected = [(s.caller, s.callee, s.method) for s in sequence.steps if isinstance(s, m.ExpectMessage)]
    actual = interaction_list(trace, names)

    def show(x):
        return f"{x[0]}->{x[1]}:{x[2]}"

    if sequence.strict:
        for i in range(max(len(expected), len(actual))):
            exp = expected[i] if i < len(expected) else None
            act = actual[i] if i < len(actual) else None
            if exp != act:
                return (f"interaction {i + 1}: expected {show(exp) if exp else 'nothing'}, "
                        f"observed {show(act) if act else 'nothing'}")
        return None
    pos = 0
    for i, exp in enumerate(expected):
        while pos < len(actual) and actual[pos] != exp:
            pos += 1
        if pos == len(actual):
            return f"interaction {i + 1}: expected {show(exp)} not observed in order"
        pos += 1
    return None


# -- running tests ------------------------------------------------------------


@dataclass
class TestRun:
    verdict: Verdict
    trace: Trace
    store: ObjectStore

    __test__ = False


def _stimulus_args(step: m.Stimulus, store: ObjectStore):
    args = []
    for a in step.args:
        args.append(Ref(store.id_of(a.ident)) if isinstance(a, m.Name) else a.value)
    return args


def run_test(model: m.Model, test: m.TestCase, budget: Optional[ExecBudget] = None) -> TestRun:
    """Run one test in a fresh store.  Never raises for model-level failures."""
    trace = Trace()
    store = ObjectStore()
    try:
        fixture = model.config(test.fixture)
        driver = model.sequence(test.driver)
        if fixture is None or driver is None:
            return TestRun(Verdict.error(f"unresolved fixture or driver of {test.name}"), trace, store)
        store = instantiate(model, fixture)
        names = store.names()
        for index, step in enumerate(driver.steps, 1):
            if isinstance(step, m.Stimulus):
                if step.target not in store.name_index:
                    return TestRun(Verdict.error(f"step {index}: unknown object '{step.target}'"), trace, store)
                result, _ = invoke(model, store, DRIVER, store.id_of(step.target), step.method,
                                   _stimulus_args(step, store), budget, trace)
                if step.expect is not None:
                    wanted = step.expect.value
                    if result is None or type(result) is not type(wanted) or result != wanted:
                        got = "nothing" if result is None else render_value(result, names)
                        return TestRun(Verdict.failed(
                            f"step {index}: expected {render_value(wanted)}, got {got}"), trace, store)
            elif isinstance(step, m.AssertStep):
                value = evaluate(step.expr, EvalContext(store, store.bindings()))
                if value is not True:
                    if not isinstance(value, bool):
                        raise EvalError("E_TYPE", "assertion must be Bool")
                    return TestRun(Verdict.failed(f"step {index}: assertion failed"), trace, store)
        divergence = match_expectations(driver, trace, names)
        if divergence is not None:
            return TestRun(Verdict.failed(divergence), trace, store)
        if test.oracle is not None:
            verdict = _check_oracle(model, test.oracle, store)
            if verdict is not None:
                return TestRun(verdict, trace, store)
    except (ExecError, EvalError, PatternError) as exc:
        return TestRun(Verdict.error(f"{exc.code}: {exc.message}"), trace, store)
    return TestRun(Verdict.passed(), trace, store)


def _check_oracle(model, oracle: m.Oracle, store: ObjectStore) -> Optional[Verdict]:
    bindings = store.bindings()
    if oracle.pattern is not None:
        pattern = model.pattern(oracle.pattern)
        if pattern is None:
            return Verdict.error(f"unresolved pattern '{oracle.pattern}'")
        anchors = {d.name: store.name_index[d.name] for d in pattern.objects if d.name in store.name_index}
        result = match_pattern(model, pattern, store, anchors)
        if not result.matched:
            return Verdict.failed(f"pattern {pattern.name}: {result.first_failure}")
        for name, oid in result.witness.items():
            bindings.setdefault(name, Ref(oid))
    failures = []
    for i, a in enumerate(oracle.asserts, 1):
        value = evaluate(a, EvalContext(store, bindings))
        if not isinstance(value, bool):
            raise EvalError("E_TYPE", "oracle assertion must be Bool")
        if not value:
            failures.append(f"oracle assertion {i} failed")
    return Verdict.failed(*failures) if failures else None


# -- suites -------------------------------------------------------------------


@dataclass
class TestResult:
    name: str
    category: str
    verdict: Verdict

    __test__ = False


@dataclass
class SuiteReport:
    results: list = field(default_factory=list)
    coverage: dict = field(default_factory=dict)  # chart -> {"states": set, "transitions": set}
    wall_time: float = 0.0

    @property
    def counts(self) -> dict:
        counts = {PASS.lower(): 0, FAIL.lower(): 0, ERROR.lower(): 0}
        for r in self.results:
            counts[r.verdict.kind.lower()] += 1
        return counts

    @property
    def by_category(self) -> dict:
        counts = {c: 0 for c in m.CATEGORIES}
        for r in self.results:
            counts[r.category] += 1
        return counts

    @property
    def all_passed(self) -> bool:
        return all(r.verdict.ok for r in self.results)

    def verdicts(self) -> dict:
        return {r.name: r.verdict for r in self.results}

    def render_lines(self) -> str:
        """Machine-readable report, one ``TEST`` line per test."""
        lines = []
        for r in self.results:
            line = f"TEST {r.name} {r.category} {r.verdict.kind}"
            if r.verdict.reasons:
                line += " " + "; ".join(r.verdict.reasons)
            lines.append(line)
        return "".join(line + "\n" for line in lines)

    def render_text(self, model: Optional[m.Model] = None) -> str:
        out = []
        for r in self.results:
            out.append(f"{r.verdict.kind:5} {r.name} [{r.category}]")
            for reason in r.verdict.reasons:
                out.append(f"      {reason}")
        c = self.counts
        cats = ", ".join(f"{k} {v}" for k, v in self.by_category.items())
        out.append(f"{len(self.results)} tests: {c['pass']} passed, {c['fail']} failed, "
                   f"{c['error']} errors ({cats})")
        for chart, cov in sorted(self.coverage.items()):
            line = f"coverage {chart}: states {sorted(cov['states'])}, transitions {sorted(cov['transitions'])}"
            if model is not None and model.chart_of(chart) is not None:
                sc = model.chart_of(chart)
                line += (f" ({len(cov['states'])}/{len(sc.states)} states, "
                         f"{len(cov['transitions'])}/{len(sc.transitions)} transitions)")
            out.append(line)
        return "\n".join(out) + "\n"


def select_tests(model: m.Model, categories: Optional[Iterable[str]] = None,
                 pattern: Optional[str] = None) -> list:
    cats = set(categories) if categories else None
    return [t for t in model.tests
            if (cats is None or t.category in cats)
            and (pattern is None or fnmatch.fnmatchcase(t.name, pattern))]


def _record_coverage(coverage: dict, model: m.Model, run: TestRun):
    # every fixture object began in its chart's initial state
    for obj in run.store.objects.values():
        chart = model.chart_for_class(obj.cls)
        if chart is not None:
            cov = coverage.setdefault(chart.owner, {"states": set(), "transitions": set()})
            cov["states"].add(chart.initial)
    for f in run.trace.firings:
        cov = coverage.setdefault(f.chart, {"states": set(), "transitions": set()})
        cov["states"].update((f.source, f.target))
        cov["transitions"].add(f.index)


def run_suite(model: m.Model, categories: Optional[Iterable[str]] = None,
              pattern: Optional[str] = None, budget: Optional[ExecBudget] = None) -> SuiteReport:
    """Run the selected tests in document order, each in a fresh store."""
    started = time.perf_counter()
    report = SuiteReport()
    for t in select_tests(model, categories, pattern):
        run = run_test(model, t, budget)
        report.results.append(TestResult(t.name, t.category, run.verdict))
        _record_coverage(report.coverage, model, run)
    report.wall_time = time.perf_counter() - started
    return report
