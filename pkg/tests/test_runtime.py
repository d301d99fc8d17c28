import pytest

from amw import model as m
from amw.diagnostics import AmwError
from amw.ocl import UNDEFINED, EvalError, Ref
from amw.parser import parse_text
from amw.runtime import DRIVER, ExecBudget, ExecError, ObjectStore, Trace, instantiate, invoke

from conftest import corpus_model
from support.gen_models import random_model

LOGIN_ONE = """
class Guest { attr passwd: String; attr name: String; method checkPasswd(p: String): Bool; }
statechart for Guest {
  initial LoggedOut;
  state LoggedOut;
  state LoggedIn;
  trans LoggedOut -> LoggedIn on checkPasswd(p) [p = self.passwd] returns true;
}
objects one { object g: Guest { passwd = "x"; } }
"""

LOGIN_TWO = LOGIN_ONE.replace(
    "returns true;\n",
    "returns true;\n  trans LoggedOut -> LoggedOut on checkPasswd(p) [p <> self.passwd] returns false;\n")


def login(text=LOGIN_ONE, passwd="x"):
    model = parse_text(text.replace('passwd = "x"', f'passwd = "{passwd}"'))
    store = instantiate(model, model.config("one"))
    return model, store, store.id_of("g")


def test_empty_config_gives_empty_store():
    model = parse_text("class A {} objects none {}")
    store = instantiate(model, model.config("none"))
    assert store.objects == {} and store.name_index == {}


def test_unassigned_slots_take_defaults():
    model = parse_text("""
class Guest { attr passwd: String; attr name: String; attr age: Int; attr vip: Bool;
              attr buddy: Guest; attr pals: set<Guest>; }
objects c { object g: Guest { passwd = "x"; } }
""")
    store = instantiate(model, model.config("c"))
    obj = store.objects[store.id_of("g")]
    assert obj.slots == {"passwd": "x", "name": "", "age": 0, "vip": False, "buddy": UNDEFINED,
                         "pals": frozenset()}
    assert obj.state is None


def test_set_links_resolve_to_ids():
    model = parse_text("""
class Guest {}
class Hotel { attr guests: set<Guest>; }
objects c { object hotel: Hotel { guests = {g1, g2}; } object g1: Guest {} object g2: Guest {} }
""")
    store = instantiate(model, model.config("c"))
    hotel = store.objects[store.id_of("hotel")]
    assert hotel.slots["guests"] == {Ref(store.id_of("g1")), Ref(store.id_of("g2"))}


def test_abstract_instantiation_is_rechecked():
    model = parse_text("abstract class A {} objects c { object a: A {} }")
    with pytest.raises(ExecError) as exc:
        instantiate(model, model.config("c"))
    assert exc.value.code == "E_ABSTRACT_INSTANTIATION"


def test_chart_objects_start_in_initial_state():
    _, store, g = login()
    assert store.objects[g].state == "LoggedOut"


def test_guarded_transition_fires():
    model, store, g = login()
    result, trace = invoke(model, store, DRIVER, g, "checkPasswd", ["x"])
    assert result is True
    assert store.objects[g].state == "LoggedIn"
    assert [(f.index, f.source, f.target) for f in trace.firings] == [(0, "LoggedOut", "LoggedIn")]


def test_second_transition_rejects_wrong_password():
    model, store, g = login(LOGIN_TWO, passwd="y")
    assert len(model.statecharts[0].transitions) == 2
    result, _ = invoke(model, store, DRIVER, g, "checkPasswd", ["x"])
    assert result is False
    assert store.objects[g].state == "LoggedOut"


def test_two_enabled_transitions_are_nondeterministic():
    text = LOGIN_ONE.replace("returns true;", "returns true;\n  trans LoggedOut -> LoggedOut on checkPasswd(p);")
    model, store, g = login(text)
    with pytest.raises(ExecError) as exc:
        invoke(model, store, DRIVER, g, "checkPasswd", ["x"])
    assert exc.value.code == "E_NONDETERMINISM"


def test_no_enabled_transition_is_traced_and_leaves_state():
    model, store, g = login(passwd="y")
    trace = Trace()
    with pytest.raises(ExecError) as exc:
        invoke(model, store, DRIVER, g, "checkPasswd", ["x"], trace=trace)
    assert exc.value.code == "E_NO_TRANSITION"
    assert store.objects[g].state == "LoggedOut"
    assert trace.render({g: "g"}) == '1 call DRIVER->g checkPasswd("x")\n2 return DRIVER->g checkPasswd("x")=!E_NO_TRANSITION\n'


def test_body_methods_and_nested_calls_are_traced():
    model = parse_text("""
class Counter {
  attr n: Int;
  attr peer: Counter;
  method bump(k: Int): Int {
    var next = self.n + k;
    if (next > 10) { next = 10; }
    self.n = next;
    return self.n;
  }
  method both(k: Int) {
    call self.bump(k);
    call self.peer.bump(k);
  }
}
objects c { object a: Counter { peer = b; } object b: Counter { n = 8; } }
""")
    store = instantiate(model, model.config("c"))
    a, b = store.id_of("a"), store.id_of("b")
    result, trace = invoke(model, store, DRIVER, a, "both", [5])
    assert result is None
    assert store.objects[a].slots["n"] == 5 and store.objects[b].slots["n"] == 10
    assert trace.render(store.names()) == (
        "1 call DRIVER->a both(5)\n"
        "2 call a->a bump(5)\n"
        "3 return a->a bump(5)=5\n"
        "4 call a->b bump(5)\n"
        "5 return a->b bump(5)=10\n"
        "6 return DRIVER->a both(5)\n"
    )


def test_unset_receiver_propagates_nav_error():
    model = parse_text("class A { attr other: A; method f() { call self.other.f(); } } objects c { object a: A {} }")
    store = instantiate(model, model.config("c"))
    with pytest.raises(EvalError) as exc:
        invoke(model, store, DRIVER, store.id_of("a"), "f", [])
    assert exc.value.code == "E_NAV_UNSET"


@pytest.mark.parametrize("budget, code", [(ExecBudget(max_depth=20), "E_BUDGET"), (ExecBudget(max_steps=50), "E_BUDGET")])
def test_runaway_recursion_hits_the_budget(budget, code):
    model = parse_text("class A { method f() { call self.f(); } } objects c { object a: A {} }")
    store = instantiate(model, model.config("c"))
    with pytest.raises(ExecError) as exc:
        invoke(model, store, DRIVER, store.id_of("a"), "f", [], budget)
    assert exc.value.code == code


def test_default_budget_allows_deep_recursion():
    model = parse_text("""
class A { attr n: Int; method down(k: Int) { if (k > 0) { self.n = self.n + 1; call self.down(k - 1); } } }
objects c { object a: A {} }
""")
    store = instantiate(model, model.config("c"))
    invoke(model, store, DRIVER, store.id_of("a"), "down", [200])
    assert store.objects[store.id_of("a")].slots["n"] == 200


def test_budget_limits_must_be_positive():
    with pytest.raises(ValueError):
        ExecBudget(max_steps=0)


def test_ids_are_never_reused():
    store = ObjectStore()
    ids = [store.add("A", {}) for _ in range(3)]
    del store.objects[ids[-1]]
    assert store.add("A", {}) == 4


def test_trace_renders_sets_in_id_order():
    model = parse_text("""
class G { method take(x: G): Bool { return true; } }
objects c { object a: G {} object b: G {} }
""")
    store = instantiate(model, model.config("c"))
    _, trace = invoke(model, store, DRIVER, store.id_of("a"), "take", [Ref(store.id_of("b"))])
    assert trace.render(store.names()) == "1 call DRIVER->a take(b)\n2 return DRIVER->a take(b)=true\n"


# -- properties over random models --------------------------------------------


def balanced(events) -> bool:
    stack = []
    for e in events:
        if e.kind == "call":
            stack.append((e.caller, e.callee, e.method))
        elif not stack or stack.pop() != (e.caller, e.callee, e.method):
            return False
    return not stack


def replay(model, test, budget):
    store = instantiate(model, model.config(test.fixture))
    trace = Trace()
    outcomes = []
    for step in model.sequence(test.driver).steps:
        if not isinstance(step, m.Stimulus):
            continue
        try:
            result, _ = invoke(model, store, DRIVER, store.id_of(step.target), step.method,
                               [a.value for a in step.args], budget, trace)
            outcomes.append(("ok", result))
        except AmwError as exc:
            outcomes.append(("err", exc.code))
    return store, trace, outcomes


@pytest.mark.parametrize("chunk", range(4))
def test_random_runs_are_balanced_deterministic_and_terminate(chunk):
    budget = ExecBudget(max_steps=2000, max_depth=40)
    for seed in range(chunk * 50, (chunk + 1) * 50):
        model = random_model(seed)
        for test in model.tests:
            store, trace, outcomes = replay(model, test, budget)
            assert balanced(trace.events), seed
            assert [e.seq for e in trace.events] == list(range(1, len(trace.events) + 1))
            again_store, again_trace, again = replay(model, test, budget)
            assert again == outcomes
            assert again_store.snapshot() == store.snapshot()
            assert again_trace.render(store.names()) == trace.render(store.names())


def test_corpus_stores_respect_slot_invariants():
    for name in ("hotel", "library", "bank", "cart", "elevator"):
        model = corpus_model(name)
        for conf in model.configs:
            store = instantiate(model, conf)
            for obj in store.objects.values():
                assert set(obj.slots) == {a.name for a in model.all_attributes(obj.cls)}
                assert (obj.state is not None) == (model.chart_for_class(obj.cls) is not None)
            assert set(store.name_index.values()) <= set(store.objects)
