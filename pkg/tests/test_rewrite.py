"""Rewrite engine and the built-in rule classes."""
import random

import pytest
from hypothesis import given, settings, strategies as st

from sreverify.dsl import parse_rules, parse_term as T
from sreverify.library import _values_equal
from sreverify.rewrite import (
    NonTermination, RewriteRule, Rewriter, RuleSet, replace, replace_list, replace_repeated,
)
from sreverify.rules import abstraction_rules, builtin_ruleset, math_normal_form
from sreverify.system import sort_of
from sreverify.terms import Const, Func, Hole, Sym, Var

from termgen import (
    bool_term, environments, num_term, random_term, sample_points, value_or_error,
)

R_LOGIC = builtin_ruleset("R_Logic")
R_IF = builtin_ruleset("R_IF")
R_MATH = builtin_ruleset("R_Math")


def rule(text):
    (r,) = parse_rules(text).rules
    return r


def test_replace_substitutes_every_occurrence():
    assert replace(T("a + $x"), rule("$x => $t")) is T("a + $t")
    assert replace(T("$x"), rule("$y => $t")) is T("$x")
    assert replace(T("f($x, g($x))"), rule("$x => 1")) is T("f(1, g(1))")


def test_replace_with_pattern_variables():
    r = rule("f(?a, ?a) => ?a")
    assert replace(T("g(f(1, 1), f(1, 2))"), r) is T("g(1, f(1, 2))")


def test_replace_is_outermost_first_and_single_pass():
    r = rule("f(?x) => ?x")
    # one pass removes the outer f only; the exposed redex waits for the next pass
    assert replace(T("f(f(1))"), r) is T("f(1)")
    assert replace_repeated(T("f(f(1))"), RuleSet("u", (r,))) is Const(1)


def test_replace_list_examples():
    assert replace_list(T("not(not($a:bool))"), R_LOGIC) is T("$a:bool")
    assert replace_list(T("and($a:bool, $a:bool)"), R_LOGIC) is T("$a:bool")
    assert replace_list(Const(1), R_LOGIC) is Const(1)


def test_replace_repeated_if_examples():
    assert replace_repeated(T("IF(True, $a, $b)"), R_IF) is T("$a")
    assert replace_repeated(T("IF($x:bool, $y, $y)"), R_IF) is T("$y")
    assert (replace_repeated(T("f($a, IF($x:bool, $y, $z))"), R_IF)
            is T("IF($x:bool, f($a, $y), f($a, $z))"))


def test_math_normal_form_example():
    got = replace_repeated(T("$x:num + $x:num + 1"), R_MATH)
    assert got is T("1 + 2 * $x:num")
    for p in sample_points(1):
        env = {**p}
        assert _values_equal(value_or_error(got, env), value_or_error(T("2*$x:num + 1"), env))


def test_math_normal_form_is_unique():
    a = math_normal_form(T("($x:num + 1) * ($x:num - 1)"))
    b = math_normal_form(T("$x:num * $x:num - 1"))
    assert a is b


def test_builtin_classes():
    assert {"if_distribution", "if_constant_condition", "if_reduction"} <= set(R_IF.names())
    assert replace_repeated(T("xor($a:bool, $a:bool)"), R_LOGIC) is Const(False)
    with pytest.raises(KeyError):
        builtin_ruleset("R_Nope")


def test_abstraction_renames_and_drops_conversions():
    rs = abstraction_rules({"impl_out": "spec_out"})
    assert replace_repeated(Func("to_int", (Var("impl_out"),)), rs) is Var("spec_out")
    assert replace_repeated(Sym("impl_out_3", "bool"), rs) is Sym("spec_out_3", "bool")
    assert replace_repeated(Var("other", 1), rs) is Var("other", 1)


def test_non_termination_is_reported():
    rs = RuleSet("grow", (rule("f(?x) => f(g(?x))"),))
    with pytest.raises(NonTermination) as e:
        Rewriter(rs, max_iterations=50).replace_repeated(T("f(1)"))
    assert e.value.iterations == 50
    assert e.value.last is T("f(g(%s))" % e.value.previous.args[0])


def test_replacement_may_not_introduce_unbound_holes():
    with pytest.raises(ValueError):
        RewriteRule(Hole("a"), Hole("b"))


def test_rule_file_loading():
    rs = parse_rules("# comment\nf(?x) => ?x\ng(?x, ?y) => ?y;\n", name="file")
    assert rs.name == "file" and len(rs) == 2
    assert replace_repeated(T("g(1, f(2))"), rs) is Const(2)


def _sound(before, after, seed):
    for env in environments(seed, points=6):
        a = value_or_error(before, env)
        if a is ZeroDivisionError:
            continue
        b = value_or_error(after, env)
        assert b is not ZeroDivisionError and _values_equal(a, b), (before, after, env)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["R_Logic", "R_IF", "R_Math"]))
def test_each_class_is_sound(seed, name):
    t = random_term(seed)
    _sound(t, replace_repeated(t, builtin_ruleset(name)), seed)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_logic_never_grows_terms(seed):
    t = bool_term(random.Random(seed), 4)
    assert replace_repeated(t, R_LOGIC).size <= t.size


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_if_reduction_alone_never_grows_terms(seed):
    reduce_only = RuleSet("reduce", tuple(r for r in R_IF.rules
                                          if "distribut" not in r.name))
    t = num_term(random.Random(seed), 4)
    assert replace_repeated(t, reduce_only).size <= t.size


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_fixpoint_is_stable(seed):
    rs = R_LOGIC + R_IF + R_MATH
    s = replace_repeated(random_term(seed), rs)
    assert replace_list(s, rs) is s


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_rewriting_is_deterministic(seed):
    rs = R_LOGIC + R_IF + R_MATH
    t = random_term(seed)
    assert Rewriter(rs).replace_repeated(t) is Rewriter(rs).replace_repeated(t)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_rewriting_preserves_sorts(seed):
    t = random_term(seed)
    assert sort_of(replace_repeated(t, R_LOGIC + R_IF + R_MATH)) == sort_of(t)
