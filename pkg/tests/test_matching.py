"""MatchQ, three-valued term equivalence and trace checks."""
import random

from hypothesis import given, settings, strategies as st

from sreverify.dsl import parse, parse_term as T
from sreverify.library import _values_equal, evaluate
from sreverify.matching import (
    EQUAL, NOT_EQUAL, UNKNOWN, CheckError, equiv_terms, match_q, normalize, verify_expected,
)
from sreverify.patterns import instantiate
from sreverify.simulate import SimConfig, run
from sreverify.terms import Const, Hole, If, Wildcard

from termgen import BOOL_SYMS, bool_term, environments, random_term, value_or_error


def test_wildcard_matches_anything():
    out = match_q(If(T("$c:bool"), Const(1), Const(0)), If(Wildcard(), Const(1), Const(0)))
    assert out.matched and out.bindings == {}


def test_named_holes_bind_coefficients():
    e = normalize(T("2 * $x:num + 1"))
    out = match_q(e, T("?a * $x:num + ?b"))
    assert out.matched
    assert out.bindings == {"a": Const(2), "b": Const(1)}


def test_commutative_match_ignores_operand_order():
    assert match_q(T("and($a:bool, $b:bool)"), T("and($b:bool, ?p)")).matched


def test_mismatch_reports_the_deepest_position():
    out = match_q(T("f(g(1, 2), 3)"), T("f(g(1, 5), 3)"))
    assert not out.matched
    (m,) = out.mismatches
    assert m.path == (0, 1)
    assert m.expected is Const(5) and m.actual is Const(2)
    assert m.to_json()["path"] == [0, 1]


def test_repeated_hole_must_bind_consistently():
    out = match_q(T("f(1, 2)"), T("f(?a, ?a)"))
    assert not out.matched and out.mismatches[0].path == (1,)


def test_equiv_x_plus_x_is_two_x():
    r = equiv_terms(T("$x:num + $x:num"), T("2 * $x:num"))
    assert r.status == EQUAL and r.method == "normal-form"


def test_equiv_xor_expansion_by_truth_table():
    a = T("xor($a:bool, $b:bool)")
    b = T("or(and($a:bool, not($b:bool)), and(not($a:bool), $b:bool))")
    assert equiv_terms(a, b).status == EQUAL


def test_equiv_refutes_with_witness():
    r = equiv_terms(T("$a:bool"), T("not($a:bool)"))
    assert r.status == NOT_EQUAL
    assert r.witness == {"a": True} or r.witness == {"a": False}
    assert r.to_json()["witness"]


def test_equiv_unknown_when_only_sampling_agrees():
    # equal only on integers; sampling is over rationals but f is opaque and agrees
    a, b = T("f($x:num) * 0 + g($x:num)"), T("g($x:num)")
    assert equiv_terms(a, b).status == EQUAL
    r = equiv_terms(T("h($x:num, $y:num)"), T("h($y:num, $x:num)"))
    assert r.status in (NOT_EQUAL, UNKNOWN)
    nonlinear = equiv_terms(T("$x:num * $x:num - $y:num * $y:num"),
                            T("($x:num - $y:num) * ($x:num + $y:num)"))
    assert nonlinear.status == EQUAL


def test_equiv_labels_are_enumerated():
    a = T("IF($m:label = MODE_0, 1, 2)")
    b = T("IF($m:label = MODE_1, 2, 1)")
    r = equiv_terms(a, b)
    assert r.status == NOT_EQUAL and r.method == "exhaustive"


def test_verify_expected_preserves_order_and_reports_bad_cycles():
    s = parse("system C { vars X; init X(0) = 0; eq X(n) = X(n-1) + 1; }").systems["C"]
    tr = run(s, SimConfig(2, "symbolic"))
    assert verify_expected(tr, []) == []
    got = verify_expected(tr, [("X", 2, Const(2)), ("X", 1, Const(7)), ("X", 9, Hole("v")),
                               ("Y", 1, Wildcard())])
    assert got[0].matched and not got[1].matched
    assert isinstance(got[2], CheckError) and "outside trace" in got[2].message
    assert isinstance(got[3], CheckError) and "unknown variable" in got[3].message


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_match_is_reflexive(seed):
    e = normalize(random_term(seed))
    assert match_q(e, e).matched


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_match_bindings_instantiate_back(seed):
    r = random.Random(seed)
    e = normalize(random_term(seed))
    kids = e.children
    if not kids:
        return
    i = r.randrange(len(kids))
    p = e.rebuild(tuple(Hole("h") if j == i else k for j, k in enumerate(kids)))
    out = match_q(e, p)
    assert out.matched
    assert normalize(instantiate(p, out.bindings)) is e


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_equiv_is_sound_on_boolean_domains(seed):
    r = random.Random(seed)
    a, b = bool_term(r, 3, nums=()), bool_term(r, 3, nums=())
    res = equiv_terms(a, b)
    assert res.status != UNKNOWN
    differs = None
    for env in environments(seed, points=1):
        va, vb = value_or_error(a, env), value_or_error(b, env)
        if not _values_equal(va, vb):
            differs = env
            break
    if differs is None:
        assert res.status == EQUAL
    else:
        assert res.status == NOT_EQUAL
        w = {s.name: res.witness.get(s.name, False) for s in BOOL_SYMS}
        assert not _values_equal(evaluate(a, w), evaluate(b, w))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_equiv_agrees_with_itself_after_rewriting(seed):
    t = random_term(seed)
    assert equiv_terms(t, normalize(t)).status == EQUAL
