"""Random generators shared by the property-based and acceptance tests."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from sreverify.decls import JobDecl, Property, RulesetDecl, Scenario
from sreverify.dsl import SourceUnit
from sreverify.library import evaluate
from sreverify.system import Equation, SreSystem
from sreverify.terms import (
    BOOL, NUM, Arith, Bound, Compare, Const, ForAll, Func, Hole, If, Index, Label, Logic,
    SeqHole, Sym, Tuple, Var, Wildcard,
)

BOOL_SYMS = tuple(Sym(n, BOOL) for n in "abcd")
NUM_SYMS = tuple(Sym(n, NUM) for n in "xyz")


def _rational(r: random.Random) -> Fraction:
    if r.random() < 0.7:
        return Fraction(r.randint(-4, 4))
    return Fraction(r.randint(-9, 9), r.randint(1, 6))


def bool_term(r: random.Random, depth: int, bools=BOOL_SYMS, nums=NUM_SYMS):
    if depth <= 0 or r.random() < 0.2:
        if r.random() < 0.15:
            return Const(r.random() < 0.5)
        return r.choice(bools)
    d = depth - 1
    k = r.randrange(8)
    if k == 0:
        return Logic("not", (bool_term(r, d, bools, nums),))
    if k <= 3:
        op = r.choice(("and", "or", "xor", "nand", "nor"))
        return Logic(op, [bool_term(r, d, bools, nums) for _ in range(r.randint(2, 3))])
    if k == 4:
        op = r.choice(("=", "<>", "<", "<=", ">", ">="))
        return Compare(op, num_term(r, d, bools, nums), num_term(r, d, bools, nums))
    if k == 5:
        return Compare(r.choice(("=", "<>")), bool_term(r, d, bools, nums),
                       bool_term(r, d, bools, nums))
    return If(bool_term(r, d, bools, nums), bool_term(r, d, bools, nums),
              bool_term(r, d, bools, nums))


def num_term(r: random.Random, depth: int, bools=BOOL_SYMS, nums=NUM_SYMS):
    if depth <= 0 or r.random() < 0.2:
        if not nums or r.random() < 0.35:
            return Const(_rational(r))
        return r.choice(nums)
    d = depth - 1
    k = r.randrange(7)
    if k <= 1:
        return Arith("+", [num_term(r, d, bools, nums) for _ in range(r.randint(2, 3))])
    if k == 2:
        if r.random() < 0.3:
            return Arith("-", (num_term(r, d, bools, nums),))
        return Arith("-", (num_term(r, d, bools, nums), num_term(r, d, bools, nums)))
    if k == 3:
        return Arith("*", (num_term(r, d, bools, nums), num_term(r, d, bools, nums)))
    if k == 4:
        c = _rational(r) or Fraction(3)
        return Arith("/", (num_term(r, d, bools, nums), Const(c)))
    return If(bool_term(r, d, bools, nums), num_term(r, d, bools, nums),
              num_term(r, d, bools, nums))


def random_term(seed: int, max_depth: int = 5):
    """A well-sorted term of depth at most ``max_depth``; boolean or numeric."""
    r = random.Random(seed)
    depth = r.randint(1, max_depth - 1)
    return bool_term(r, depth) if r.random() < 0.5 else num_term(r, depth)


def depth_of(t) -> int:
    kids = t.children
    return 1 + max((depth_of(k) for k in kids), default=0)


def sample_points(seed: int, count: int = 20) -> list:
    """``count`` random rational points for the numeric symbols."""
    r = random.Random(seed)
    return [{s.name: Fraction(r.randint(-30, 30), r.randint(1, 11)) for s in NUM_SYMS}
            for _ in range(count)]


def environments(seed: int, points: int = 20):
    """Every boolean assignment crossed with ``points`` rational points."""
    pts = sample_points(seed, points)
    for values in itertools.product((False, True), repeat=len(BOOL_SYMS)):
        b = {s.name: v for s, v in zip(BOOL_SYMS, values)}
        for p in pts:
            yield {**b, **p}


def value_or_error(t, env):
    try:
        return evaluate(t, env)
    except ZeroDivisionError:
        return ZeroDivisionError


# ---------------------------------------------------------------- DSL units

_LABELS = ("MODE_0", "MODE_1", "RATE_12", "INVALID_DATA", "EMPTY")
_FUNCS = ("f", "g", "randFunc_01", "to_int")


def _dsl_term(r: random.Random, depth: int, variables: tuple, bound: tuple = (),
              patterns: bool = False):
    if depth <= 0 or r.random() < 0.25:
        k = r.randrange(7 if patterns else 6)
        if k == 0:
            return Const(r.random() < 0.5)
        if k == 1:
            return Const(_rational(r))
        if k == 2:
            return Label(r.choice(_LABELS))
        if k == 3 and bound:
            return Bound(r.choice(bound))
        if k == 4:
            return Sym(r.choice("abxy"), r.choice((BOOL, NUM, "any")))
        if k == 6:
            return r.choice((Wildcard(), Hole(r.choice("pq")), Hole("s", BOOL)))
        return Var(r.choice(variables), r.randint(0, 2))
    d = depth - 1

    def sub():
        return _dsl_term(r, d, variables, bound, patterns)

    k = r.randrange(10)
    if k == 0:
        return Logic("not", (sub(),))
    if k == 1:
        return Logic(r.choice(("and", "or", "xor", "nand", "nor")),
                     [sub() for _ in range(r.randint(2, 3))])
    if k == 2:
        return Compare(r.choice(("=", "<>", "<", "<=", ">", ">=")), sub(), sub())
    if k == 3:
        op = r.choice(("+", "*", "-", "/"))
        if op == "-" and r.random() < 0.3:
            return Arith("-", (sub(),))
        n = r.randint(2, 3) if op in "+*" else 2
        return Arith(op, [sub() for _ in range(n)])
    if k == 4:
        return If(sub(), sub(), sub())
    if k == 5:
        return Func(r.choice(_FUNCS), [sub() for _ in range(r.randint(0, 2))])
    if k == 6:
        return Tuple([sub() for _ in range(r.randint(0, 3))])
    if k == 7:
        return Index(sub(), Const(r.randint(0, 3)))
    if k == 8 and not patterns:
        name = r.choice("ijk")
        return ForAll(name, Const(0), Const(r.randint(0, 3)),
                      _dsl_term(r, d, variables, bound + (name,)))
    if k == 9 and patterns:
        return Func(r.choice(_FUNCS), [SeqHole(r.choice((None, "rest")))])
    return sub()


def random_unit(seed: int) -> SourceUnit:
    """A random but well-formed source unit covering every declaration kind."""
    r = random.Random(seed)
    u = SourceUnit()
    u.labels = tuple(sorted(set(r.sample(_LABELS, r.randint(0, 3)))))
    for s_i in range(r.randint(0, 2)):
        names = [f"X{s_i}_{k}" for k in range(r.randint(1, 3))]
        dotted = [f"blk{k}.out" for k in range(r.randint(0, 2))]
        variables = tuple(names + dotted)
        inputs = {"IN": r.choice((NUM, BOOL))}
        if r.random() < 0.5:
            from sreverify.terms import TupleSort

            inputs["WORD"] = TupleSort(BOOL, r.choice((2, 4, 8)))
        controls = {"CTRL": "label"} if r.random() < 0.5 else {}
        all_names = variables + tuple(inputs) + tuple(controls)
        eqs = {v: Equation(v, _dsl_term(r, r.randint(0, 4), all_names))
               for v in variables}
        initial = {}
        for v in variables:
            if r.random() < 0.5:
                initial[(v, 0)] = _dsl_term(r, 1, ("IN",))
        outputs = tuple(r.sample(variables, r.randint(0, len(variables))))
        sysname = f"S{s_i}"
        u.systems[sysname] = SreSystem(sysname, inputs, controls,
                                       {v: "any" for v in variables}, outputs, eqs, initial)
    for k in range(r.randint(0, 2)):
        rules = tuple((_dsl_term(r, 2, ("A",), patterns=True),
                       _dsl_term(r, 2, ("A",), patterns=True)) for _ in range(r.randint(0, 3)))
        u.rulesets[f"R{k}"] = RulesetDecl(f"R{k}", rules)
    for k in range(r.randint(0, 2)):
        cat = r.choice(("Global", "Local", "Control"))
        body = _dsl_term(r, 3, ("out", "blk.in"))
        scope = tuple(r.sample(("out", "blk.in", "blk.out"), r.randint(0, 2)))
        scen = tuple(r.sample(("mode_0", "mode_1"), r.randint(0, 2)))
        u.properties[f"P{k}"] = Property(f"P{k}", cat, body, scope, scen)
    for k in range(r.randint(0, 2)):
        b = {"CTRL": Label(r.choice(_LABELS)), "REP": Const(r.randint(1, 4))}
        u.scenarios[f"mode_{k}"] = Scenario(f"mode_{k}", b)
    if r.random() < 0.5:
        u.jobs["j"] = JobDecl(
            "j", "S0", "S1", spec_path=r.choice((None, "fl.sre")), impl_path=None,
            k_spec=r.randint(1, 3), k_imp=r.randint(1, 8),
            correspondence={"a.x": "b.y"} if r.random() < 0.5 else {},
            scenarios=("mode_0",) if r.random() < 0.5 else (),
            compare=(("out", "out.word"),) if r.random() < 0.5 else (),
            inputs=("IN",) if r.random() < 0.5 else (),
            rules=("R0",) if r.random() < 0.5 else ())
    return u
