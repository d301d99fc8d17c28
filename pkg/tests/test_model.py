import pytest

from amw import model as m
from amw.check import check_wellformed, is_wellformed, lookup_member, published_surface, type_of
from amw.diagnostics import ModelError, TypeCheckError
from amw.parser import parse_text

from conftest import CORPUS, corpus_model, expr
from support.gen_models import random_model, random_structure
from support.naive_wf import violations


def codes(text):
    return [d.code for d in check_wellformed(parse_text(text))]


def test_minimal_class_is_wellformed():
    assert codes("class A {}") == []


def test_self_inheritance_cycle():
    diags = check_wellformed(parse_text("class B extends B {}"))
    assert [d.code for d in diags] == ["E_INHERIT_CYCLE"]
    assert diags[0].line == 1


def test_hotel_sample_is_wellformed(hotel):
    assert check_wellformed(hotel) == []


@pytest.mark.parametrize("text, code", [
    ("class A {} class A {}", "E_DUPLICATE"),
    ("class A extends Z {}", "E_UNKNOWN_CLASS"),
    ("class A { attr x: Nope; }", "E_UNKNOWN_CLASS"),
    ("class A { attr x: set<Int>; }", "E_BAD_TYPE"),
    ("class A { attr x: Int; } class B extends A { attr x: Int; }", "E_SHADOWING"),
    ("class A { attr x: Int; attr x: Bool; }", "E_DUPLICATE_MEMBER"),
    ("class A { method f(): Int { return 1; } } class B extends A { method f(): Bool { return true; } }",
     "E_OVERRIDE_MISMATCH"),
    ("class A { abstract method f(); }", "E_ABSTRACT_METHOD"),
    ("abstract class A { abstract method f(); } class B extends A {}", "E_ABSTRACT_METHOD"),
    ("class A { published attr x: Int; }", "E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS"),
    ("class A { attr x: Int; method f() { self.x = true; } }", "E_TYPE"),
    ("class A { method f() { self.y = 1; } }", "E_UNRESOLVED"),
    ("class A { method f(); } statechart for A { initial S; state T; }", "E_UNKNOWN_STATE"),
    ("class A { method f(): Int { return 1; } } statechart for A { initial S; state S; trans S -> S on f(); }",
     "E_BAD_TRIGGER"),
    ("abstract class A {} objects c { object a: A {} }", "E_ABSTRACT_INSTANTIATION"),
])
def test_invariant_violations_are_reported(text, code):
    assert code in codes(text)


def test_diagnostics_are_in_document_order_and_deterministic():
    text = "class A extends Z {}\nclass B { attr x: Nope; }\nclass C extends C {}\n"
    first = check_wellformed(parse_text(text))
    assert [d.line for d in first] == sorted(d.line for d in first)
    assert [d.render() for d in first] == [d.render() for d in check_wellformed(parse_text(text))]


def test_acceptance_test_must_stay_on_published_surface():
    text = """
published class A { attr secret: Int; published method f(); }
statechart for A { initial S; state S; trans S -> S on f(); }
objects c { object a: A { secret = 1; } }
sequence d { call a.f(); }
test t category acceptance { fixture c; driver d; }
"""
    assert "E_UNPUBLISHED_REFERENCE" in codes(text)
    assert "E_UNPUBLISHED_REFERENCE" not in codes(text.replace("acceptance", "unit"))


# -- lookup_member ----------------------------------------------------------


def test_lookup_inherited_attribute(hotel):
    r = lookup_member(hotel, "Guest", "name")
    assert (r.defining_class, r.kind) == ("Person", "attribute")


def test_lookup_own_attribute(hotel):
    assert lookup_member(hotel, "Guest", "passwd").defining_class == "Guest"


def test_lookup_missing_member(hotel):
    with pytest.raises(ModelError) as exc:
        lookup_member(hotel, "Person", "passwd")
    assert exc.value.code == "E_UNKNOWN_MEMBER"


def test_lookup_subclass_only_status(hotel):
    assert lookup_member(hotel, "Guest", "passwd", relative_to="Person").subclass_only is True
    assert lookup_member(hotel, "Guest", "name", relative_to="Person").subclass_only is False


@pytest.mark.parametrize("seed", range(40))
def test_lookup_agrees_with_flattened_member_lists(seed):
    model = random_model(seed)
    for c in model.classes:
        flat = []
        for anc in model.ancestors(c.name):
            k = model.cls(anc)
            flat += [(x.name, anc) for x in k.attributes + k.methods]
        names = {n for n, _ in flat} | {"missing"}
        for name in sorted(names):
            expected = next((anc for n, anc in flat if n == name), None)
            if expected is None:
                with pytest.raises(ModelError):
                    lookup_member(model, c.name, name)
            else:
                assert lookup_member(model, c.name, name).defining_class == expected


# -- published surface --------------------------------------------------------


def test_published_surface_lists_classes_and_members():
    model = parse_text("published class Guest { published method checkPasswd(p: String): Bool; attr x: Int; }")
    assert published_surface(model) == {("Guest",), ("Guest", "checkPasswd")}


def test_published_surface_empty():
    assert published_surface(parse_text("class A { attr x: Int; }")) == frozenset()


def test_published_member_in_unpublished_class_is_an_error():
    with pytest.raises(ModelError) as exc:
        published_surface(parse_text("class A { published attr x: Int; }"))
    assert exc.value.code == "E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS"


# -- type_of ------------------------------------------------------------------


def test_type_of_arithmetic():
    assert type_of(expr("1 + 2"), {}) == m.INT


def test_type_of_mismatched_comparison(hotel):
    with pytest.raises(TypeCheckError) as exc:
        type_of(expr('self.passwd = 3'), {"self": m.TypeRef("Guest")}, hotel)
    assert exc.value.code == "E_TYPE"


def test_type_of_quantifier_and_size():
    model = parse_text("class Guest { attr passwd: String; } class Hotel { attr guests: set<Guest>; }")
    scope = {"self": m.TypeRef("Hotel")}
    assert type_of(expr('self.guests->forAll(g | g.passwd <> "")'), scope, model) == m.BOOL
    assert type_of(expr("self.guests->exists(g | true)"), scope, model) == m.BOOL
    assert type_of(expr("self.guests->size()"), scope, model) == m.INT


def test_type_of_state_requires_a_chart(hotel):
    assert type_of(expr("self@state"), {"self": m.TypeRef("Guest")}, hotel) == m.STRING
    with pytest.raises(TypeCheckError):
        type_of(expr("self@state"), {"self": m.TypeRef("Staff")}, hotel)


# -- properties ---------------------------------------------------------------


def test_checker_is_pure(hotel):
    before = check_wellformed(hotel)
    assert check_wellformed(hotel) == before


@pytest.mark.parametrize("chunk", range(5))
def test_checker_agrees_with_naive_predicates(chunk):
    for seed in range(chunk * 200, (chunk + 1) * 200):
        model = random_structure(seed)
        assert is_wellformed(model) == (violations(model) == []), seed


def test_random_models_are_wellformed():
    for seed in range(100):
        assert check_wellformed(random_model(seed)) == [], seed


def test_structure_generator_covers_both_outcomes():
    outcomes = {is_wellformed(random_structure(s)) for s in range(200)}
    assert outcomes == {True, False}


def test_corpus_is_wellformed():
    for project in sorted(p for p in CORPUS.iterdir() if p.is_dir()):
        assert check_wellformed(corpus_model(project.name)) == [], project.name


def test_model_generator_is_deterministic():
    assert random_model(3) == random_model(3)
