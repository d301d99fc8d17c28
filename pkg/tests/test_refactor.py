import copy
import dataclasses

import pytest

from amw import model as m
from amw import refactor
from amw.check import check_wellformed
from amw.parser import parse_text
from amw.printer import print_model
from amw.testgen import CoverageGoal, derive
from amw.testkit import run_test

from conftest import CORPUS, corpus_model
from support.catalog import all_requests
from support.scenarios import SCENARIOS, check_golden

SWEEP = sorted(d.name for d in CORPUS.iterdir() if d.is_dir() and d.name != "hotel_broken")


@pytest.mark.parametrize("name", sorted(n for n in SCENARIOS if n.startswith("pull_up")))
def test_golden_reports(name):
    assert check_golden(name), f"{name} differs from its golden file"


def codes(report):
    return [v.code for v in report.violations]


def test_rename_to_the_same_name(hotel):
    report = refactor.apply_rename(hotel, "attribute", "Guest", "passwd", "passwd")
    assert not report.applied and codes(report) == ["E_SAME_NAME"]


def test_renaming_a_published_method_needs_the_flag(hotel):
    report = refactor.apply_rename(hotel, "method", "Guest", "checkPasswd", "verify")
    assert codes(report) == ["E_PUBLISHED_IMPACT"]
    allowed = refactor.apply_rename(hotel, "method", "Guest", "checkPasswd", "verify", allow_published=True)
    assert allowed.applied
    assert allowed.model_after.cls("Guest").method("verify") is not None
    assert allowed.model_after.cls("Guest").method("checkPasswd") is None
    assert allowed.model_after.cls("Staff").method("checkPasswd") is not None


def test_rename_class_onto_an_existing_name(hotel):
    report = refactor.apply_rename(hotel, "class", None, "Staff", "Guest")
    assert codes(report) == ["E_NAME_CLASH"]


def test_rename_attribute_updates_unit_tests_only(hotel):
    report = refactor.apply_rename(hotel, "attribute", "Guest", "passwd", "secret")
    assert report.applied
    after = report.model_after
    assert [c.test for c in report.test_changes] == ["lobbyCheckIn"]
    oracle = refactor.test_text(after, after.test("lobbyCheckIn"))
    assert "g.secret = s.passwd" in oracle
    accept = hotel.test("guestCheckIn")
    assert refactor.test_text(hotel, accept) == refactor.test_text(after, after.test("guestCheckIn"))
    assert check_wellformed(after) == []


def test_single_subclass_pull_up_touches_no_tests():
    model = parse_text("""
class A { }
class B extends A { attr n: Int; }
class Other { }
objects c { object o: Other { } }
sequence d { }
test t category unit { fixture c; driver d; }
""")
    report = refactor.apply_pull_up_attribute(model, "A", "n", m.Lit(0))
    assert report.applied and report.test_changes == []
    assert report.model_after.cls("A").attribute("n") is not None


def test_clone_names_are_numbered(hotel):
    report = refactor.apply_pull_up_attribute(hotel, "Person", "passwd", m.Lit(""),
                                              clone_values=[m.Lit("a"), m.Lit("b"), m.Lit("c")])
    after = report.model_after
    for i in (1, 2, 3):
        assert after.config(f"lobbyCheckIn_clone{i}") is not None
        assert after.test(f"lobbyCheckIn_clone{i}").fixture == f"lobbyCheckIn_clone{i}"


def test_pull_up_attribute_postcondition(hotel):
    report = refactor.apply_pull_up_attribute(hotel, "Person", "passwd", m.Lit(""))
    after = report.model_after
    assert after.cls("Person").attribute("passwd").type.name == "String"
    assert all(c.attribute("passwd") is None for c in after.subclasses("Person"))
    lobby = after.config("lobby")
    for obj in lobby.objects:
        assert any(a.attr == "passwd" for a in obj.assignments)
    assert after.config("frontDesk") == hotel.config("frontDesk")
    assert check_wellformed(after) == []
    assert print_model(hotel) == print_model(corpus_model("hotel"))


@pytest.mark.parametrize("name", SWEEP)
def test_context_conditions_decide_application(name):
    model = corpus_model(name)
    before = print_model(model)
    accept = {t.name: refactor.test_text(model, t) for t in model.tests if t.category == "acceptance"}
    for req in all_requests(model):
        violations = refactor.check_context(model, req)
        report = refactor.apply(model, req, verify=True)
        assert report.applied == (violations == []), (req, violations)
        assert print_model(model) == before
        if not report.applied:
            assert report.model_after is None
            continue
        after = report.model_after
        assert check_wellformed(after) == [], req
        assert report.preservation.preserved, (req, report.preservation.differences)
        for t, text in accept.items():
            assert refactor.test_text(after, after.test(t)) == text, (req, t)


def _substituted(model, run, owner, old, new):
    """The trace of ``run`` with calls of ``owner.old`` (and overrides below it) renamed."""
    events = []
    for e in run.trace.events:
        cls = run.store.objects[e.callee].cls
        if e.method == old and (cls == owner or model.is_subclass(cls, owner)):
            e = dataclasses.replace(e, method=new)
        events.append(e)
    return "".join(e.render() + "\n" for e in events)


@pytest.mark.parametrize("name", ["hotel", "login", "vending", "library"])
def test_rename_method_traces_differ_only_in_the_name(name):
    model = corpus_model(name)
    for cls in model.classes:
        for meth in cls.methods:
            report = refactor.apply_rename(model, "method", cls.name, meth.name, meth.name + "Z",
                                           allow_published=True)
            if not report.applied:
                continue
            after = report.model_after
            for t in model.tests:
                run_before = run_test(model, t)
                run_after = run_test(after, after.test(t.name))
                assert run_before.verdict == run_after.verdict
                expected = _substituted(model, run_before, cls.name, meth.name, meth.name + "Z")
                assert run_after.trace.render() == expected


def test_untouched_suite_has_no_obsolete_tests():
    for name in SWEEP:
        assert refactor.report_obsolete(corpus_model(name)) == [], name


def test_removed_transition_obsoletes_its_generated_test():
    model = corpus_model("login")
    d = derive(model, model.statecharts[0], CoverageGoal("transition"), model.config("desk"))
    generated = parse_text(d.text)
    model.configs += generated.configs
    model.sequences += generated.sequences
    model.tests += generated.tests
    assert refactor.report_obsolete(model) == []
    del model.statecharts[0].transitions[2]
    warnings = refactor.report_obsolete(model)
    assert warnings
    assert all(w.test.startswith("gen_") for w in warnings)
    assert any("transition no longer exists" in w.detail for w in warnings)


def test_deleted_class_leaves_dangling_names(hotel):
    model = copy.deepcopy(hotel)
    model.classes = [c for c in model.classes if c.name != "Staff"]
    warnings = refactor.report_obsolete(model)
    assert {w.test for w in warnings} == {"lobbyCheckIn"}
    assert any("Staff" in w.render() for w in warnings)


def test_no_acceptance_tests_warns():
    model = corpus_model("login")
    result = refactor.verify_preservation(model, model)
    assert result.preserved and "W_NO_OBSERVERS" in result.warnings


def test_broken_variant_is_not_preserving(hotel):
    result = refactor.verify_preservation(hotel, corpus_model("hotel_broken"))
    assert not result.preserved
    assert result.differences


def test_unknown_rule_and_bad_arguments():
    with pytest.raises(refactor.RefactorError) as info:
        refactor.RefactoringRequest.from_args("inline_class", ["A"])
    assert info.value.code == "E_UNKNOWN_RULE"
    with pytest.raises(refactor.RefactorError) as info:
        refactor.RefactoringRequest.from_args("rename_class", ["A"])
    assert info.value.code == "E_BAD_ARGS"
    with pytest.raises(refactor.RefactorError) as info:
        refactor.check_context(parse_text(""), refactor.RefactoringRequest("rename_class", {"old": "A"}))
    assert info.value.code == "E_BAD_ARGS"


def test_override_variant_keeps_the_donor_body(hotel):
    first = refactor.apply_pull_up_attribute(hotel, "Person", "passwd", m.Lit(""))
    report = refactor.apply_pull_up_method(first.model_after, "Person", "checkPasswd", "override", donor="Staff",
                                           verify=True)
    assert report.applied, report.render()
    after = report.model_after
    assert after.cls("Person").method("checkPasswd").body
    assert report.preservation.preserved
