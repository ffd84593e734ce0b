"""Bounded property checking, counterexamples and replay."""
import random
from dataclasses import replace

import pytest

from sreverify.decls import Property
from sreverify.dsl import parse, parse_term as T
from sreverify.properties import (
    FAILS, HOLDS, NOT_PROVEN, PropertyConfigError, _bind, check_property, expand,
    property_suite, replay,
)
from sreverify.terms import Const, ForAll, Logic
from sreverify.wimax import build_model, completion_cycle, inject, load_bundled, scenarios

PROPS = load_bundled("props.sre").properties
CORR = {"FL": {}, "PTL8": {"out.word": "out.data"}, "PTL4": {"out.word": "out.data"}}
BUG_FOR = {"P1": "B2", "P2": "B3", "P3": "B4"}


def check(level, prop, bug=None, which="single", model=None):
    m = model or build_model(level)
    if bug:
        m = inject(m, bug)
    return m, check_property(m, PROPS[prop], completion_cycle(level),
                             scenarios=scenarios(which), correspondence=CORR[level])


def test_output_equals_itself_holds():
    s = parse("system C { vars X; outputs X; init X(0) = 0; eq X(n) = X(n-1) + 1; }"
              ).systems["C"]
    v = check_property(s, Property("refl", "Global", T("X(n) = X(n)")), 3)
    assert v.holds and v.instances == 1


def test_p1_holds_on_fl_single_control():
    _, v = check("FL", "P1")
    assert v.status == HOLDS and v.instances == 8


def test_p3_holds_on_ptl8_at_rate_two_thirds():
    _, v = check("PTL8", "P3", which="5")
    assert v.status == HOLDS and v.scenarios == {"mode_5": HOLDS}


def test_p2_fails_with_changed_reference_array():
    m, v = check("FL", "P2", "B3")
    assert v.status == FAILS
    c = v.counterexample
    assert c.property == "P2" and c.signal == "rand.out[5]" and c.index == 5
    assert c.value is not c.expected
    assert replay(m, PROPS["P2"], c, 1, scenarios("single"))


def test_p1_fails_with_severed_coder_input():
    m, v = check("PTL4", "P1", "B2")
    c = v.counterexample
    assert v.status == FAILS and c.signal == "DATA_IN[3]"
    assert replay(m, PROPS["P1"], c, completion_cycle("PTL4"), scenarios("single"),
                  CORR["PTL4"])


def test_p3_fails_when_rates_are_swapped():
    m, v = check("PTL8", "P3", "B4", "multiple")
    assert v.status == FAILS
    assert {k for k, s in v.scenarios.items() if s == FAILS} >= {"mode_0"}
    assert v.counterexample.signal.startswith("punct.out[")


def test_horizon_is_required():
    fl = build_model("FL")
    with pytest.raises(PropertyConfigError):
        check_property(fl, PROPS["P2"], 0)
    with pytest.raises(PropertyConfigError):
        check_property(fl, PROPS["P2"], None)


def test_unresolved_variable_is_a_configuration_error():
    fl = build_model("FL")
    with pytest.raises(PropertyConfigError) as e:
        check_property(fl, Property("bad", "Global", T("nowhere.out(n) = 1")), 1)
    assert "nowhere.out" in str(e.value)


def test_property_scenario_filter():
    p = replace(PROPS["P2"], scenarios=("mode_3",))
    v = check_property(build_model("FL"), p, 1, scenarios=scenarios("multiple"))
    assert list(v.scenarios) == ["mode_3"]


def test_sampling_only_results_are_not_proven():
    s = parse("system Q { inputs A: num, B: num; vars Y; outputs Y; "
              "eq Y(n) = f(A(n), B(n)); }").systems["Q"]
    v = check_property(s, Property("comm", "Local", T("Y(n) = f(B(n), A(n))")), 1)
    assert v.status in (NOT_PROVEN, FAILS)
    if v.status == NOT_PROVEN:
        assert v.residual is not None and "residual" in v.to_json()


def test_empty_suite_is_empty():
    assert property_suite([(build_model("FL"), 1, {})], [], {"single": scenarios("single")}) == []


def test_suite_matrix_layout_and_parallel_determinism():
    models = [(build_model(l), completion_cycle(l), CORR[l]) for l in ("FL", "PTL8")]
    props = [PROPS["P2"], PROPS["P3"]]
    sets = {"single": scenarios("single"), "multiple": scenarios("0,2,5")}
    serial = property_suite(models, props, sets)
    parallel = property_suite(models, props, sets, jobs=2)
    key = [(c.model, c.property, c.scenario_set) for c in serial]
    assert key == [(m, p, s) for m in ("FL", "PTL8") for p in ("P2", "P3")
                   for s in ("single", "multiple")]
    assert [c.verdict.status for c in serial] == [c.verdict.status for c in parallel]
    assert all(c.to_json()["result"] == HOLDS for c in serial)


def test_suite_errors_are_per_cell():
    fl = build_model("FL")
    bad = Property("bad", "Global", T("nowhere(n) = 1"))
    cells = property_suite([(fl, 1, {})], [bad, PROPS["P2"]], {"single": scenarios("single")})
    assert cells[0].error and cells[0].to_json()["result"] == "error"
    assert cells[1].verdict.holds


def _instances_one_by_one(prop):
    body = prop.body
    assert isinstance(body, ForAll)
    lo, hi = int(body.lo.value), int(body.hi.value)
    return [replace(prop, name=f"{prop.name}_{k}", body=_bind(body.body, body.var, k))
            for k in range(lo, hi + 1)]


@pytest.mark.parametrize("prop,bug", [("P1", None), ("P1", "B2"), ("P2", None), ("P2", "B3")])
def test_expanded_agrees_with_incremental_evaluation(prop, bug):
    m = build_model("FL")
    if bug:
        m = inject(m, bug)
    whole = check_property(m, PROPS[prop], 1, scenarios=scenarios("single"))
    parts = [check_property(m, p, 1, scenarios=scenarios("single"))
             for p in _instances_one_by_one(PROPS[prop])]
    assert whole.holds == all(p.holds for p in parts)
    assert whole.instances <= sum(p.instances for p in parts)


def test_expand_splits_conjunctions_and_decided_conditionals():
    body = T("IF(True, forall i in 0..2: X(n)[i] = 1 and Y(n) = 2, False)")
    out = expand(body, lambda t: t)
    assert [i.index for i in out] == [0, 0, 1, 1, 2, 2]
    assert all(not isinstance(i.term, Logic) or i.term.op != "and" for i in out)


@pytest.mark.parametrize("level", ["FL", "PTL8"])
def test_verdict_is_stable_under_equation_reordering(level):
    m = inject(build_model(level), "B4")
    items = list(m.equations.items())
    random.Random(7).shuffle(items)
    shuffled = replace(m, equations=dict(items))
    a = check_property(m, PROPS["P3"], completion_cycle(level), scenarios=scenarios("multiple"),
                       correspondence=CORR[level])
    b = check_property(shuffled, PROPS["P3"], completion_cycle(level),
                       scenarios=scenarios("multiple"), correspondence=CORR[level])
    assert a.status == b.status and a.scenarios == b.scenarios
    assert a.counterexample.to_json() == b.counterexample.to_json()


def test_replay_rejects_a_counterexample_on_the_fixed_model():
    m, v = check("FL", "P2", "B3")
    assert not replay(build_model("FL"), PROPS["P2"], v.counterexample, 1, scenarios("single"))
    assert Const(True) is T("True")
