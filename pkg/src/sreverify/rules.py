"""Built-in rule classes.

``R_Math``
    polynomial normal form: expanded sum of monomials over non-arithmetic
    atoms, like terms combined, rational coefficients, canonical order.
``R_Logic``
    flattening, constant folding, idempotence, complement, double
    negation and comparison folding. No CNF conversion.
``R_IF``
    IF distribution (restricted, see :func:`if_distribute`) followed by
    the reductions ``IF(True,x,y)=x``, ``IF(False,x,y)=y``, ``IF(c,y,y)=y``
    and a few boolean-branch identities.
``R_Func``
    evaluation of registered library functions, word indexing and
    word equality.
``R_Abst``
    signal renaming from an implementation to a specification plus
    elimination of integer-conversion calls.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional

from .library import DEFAULT, INVALID, Registry
from .rewrite import ProcRule, RewriteRule, RuleSet
from .terms import (
    ANY, BOOL, FALSE, NUM, TRUE, Arith, Bound, Compare, Const, ForAll, Func, Hole, If,
    Index, Label, Logic, Sym, Term, Tuple, Var, is_ground,
)

__all__ = [
    "builtin_ruleset", "simulation_rules", "abstraction_rules", "guess_sort",
    "to_poly", "from_poly", "math_normal_form", "RULE_CLASSES", "CONVERSIONS",
]

RULE_CLASSES = ("R_Math", "R_Logic", "R_IF", "R_Func", "R_Abst")
CONVERSIONS = ("to_int", "from_int", "int", "toInteger")


def guess_sort(t: Term, registry: Registry = None) -> str:
    """Cheap context-free sort guess: bool, num, label, tuple or any."""
    if isinstance(t, Const):
        return BOOL if t.is_bool else NUM
    if isinstance(t, (Logic, Compare, ForAll)):
        return BOOL
    if isinstance(t, (Arith, Bound)):
        return NUM
    if isinstance(t, Label):
        return "label"
    if isinstance(t, Tuple):
        return "tuple"
    if isinstance(t, Sym):
        return t.sort if isinstance(t.sort, str) else "tuple"
    if isinstance(t, If):
        a, b = guess_sort(t.then, registry), guess_sort(t.else_, registry)
        if a == b:
            return a
        if a == "label":
            return b
        if b == "label":
            return a
        return ANY
    if isinstance(t, Index) and isinstance(t.base, Tuple) and t.base.items:
        kinds = {guess_sort(i, registry) for i in t.base.items}
        return kinds.pop() if len(kinds) == 1 else ANY
    if isinstance(t, Func):
        lib = (registry or DEFAULT).get(t.name)
        if lib is not None and isinstance(lib.result, str):
            return lib.result
    return ANY


# ---------------------------------------------------------------- R_Math


def _mono_mul(a: tuple, b: tuple) -> tuple:
    return tuple(sorted(a + b, key=Term.order_key))


def _poly_add(p: dict, q: dict, scale: Fraction = Fraction(1)) -> dict:
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, Fraction(0)) + c * scale
    return out


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            out[m] = out.get(m, Fraction(0)) + c1 * c2
    return out


def _const_of(p: dict) -> Optional[Fraction]:
    nz = {m: c for m, c in p.items() if c != 0}
    if not nz:
        return Fraction(0)
    if set(nz) == {()}:
        return nz[()]
    return None


def to_poly(t: Term) -> dict:
    """Polynomial (monomial tuple -> coefficient) of an arithmetic term."""
    if isinstance(t, Const) and t.is_num:
        return {(): t.value}
    if isinstance(t, Arith):
        if t.op == "+":
            acc: dict = {}
            for a in t.args:
                acc = _poly_add(acc, to_poly(a))
            return acc
        if t.op == "-":
            if len(t.args) == 1:
                return {m: -c for m, c in to_poly(t.args[0]).items()}
            return _poly_add(to_poly(t.args[0]), to_poly(t.args[1]), Fraction(-1))
        if t.op == "*":
            acc = {(): Fraction(1)}
            for a in t.args:
                acc = _poly_mul(acc, to_poly(a))
            return acc
        num_p, den_p = to_poly(t.args[0]), to_poly(t.args[1])
        d = _const_of(den_p)
        if d is not None and d != 0:
            return {m: c / d for m, c in num_p.items()}
        atom = Arith("/", (from_poly(num_p), from_poly(den_p)))
        return {(atom,): Fraction(1)}
    return {(t,): Fraction(1)}


def from_poly(p: dict) -> Term:
    terms = []
    for m in sorted((m for m, c in p.items() if c != 0),
                    key=lambda m: (len(m), tuple(a.order_key() for a in m))):
        c = p[m]
        if not m:
            terms.append(Const(c))
        elif c == 1:
            terms.append(m[0] if len(m) == 1 else Arith("*", m))
        else:
            terms.append(Arith("*", (Const(c),) + m))
    if not terms:
        return Const(0)
    if len(terms) == 1:
        return terms[0]
    return Arith("+", terms)


def math_normal_form(t: Term) -> Term:
    return from_poly(to_poly(t))


def _numeric_side(t: Term) -> bool:
    return guess_sort(t) == NUM


def _math_rules() -> tuple:
    def poly(t: Arith):
        for a in t.args:
            if isinstance(a, Const) and a.is_bool:
                return None
        return from_poly(to_poly(t))

    def compare_poly(t: Compare):
        if not (_numeric_side(t.lhs) and _numeric_side(t.rhs)):
            return None
        if isinstance(t.lhs, Const) and isinstance(t.rhs, Const):
            return None  # R_Logic folds constants
        diff = _const_of(to_poly(Arith("-", (t.lhs, t.rhs))))
        if diff is None:
            return None
        return TRUE if _cmp(t.op, diff, Fraction(0)) else FALSE

    return (
        ProcRule("poly_normal_form", poly, (Arith,)),
        ProcRule("compare_difference", compare_poly, (Compare,)),
    )


# ---------------------------------------------------------------- R_Logic

_NEG = {"=": "<>", "<>": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_FLIP = {">": "<", ">=": "<="}


def _cmp(op: str, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _complement_of(x: Term) -> Term:
    if isinstance(x, Logic) and x.op == "not":
        return x.args[0]
    return Logic("not", (x,))


def _logic_rules() -> tuple:
    def not_rule(t: Logic):
        if t.op != "not":
            return None
        (x,) = t.args
        if isinstance(x, Const) and x.is_bool:
            return FALSE if x.value else TRUE
        if isinstance(x, Logic):
            if x.op == "not":
                return x.args[0]
            swap = {"or": "nor", "and": "nand", "nor": "or", "nand": "and"}.get(x.op)
            if swap:
                return Logic(swap, x.args)
        if isinstance(x, Compare) and (x.op in ("=", "<>") or
                                       (_numeric_side(x.lhs) and _numeric_side(x.rhs))):
            return Compare(_NEG[x.op], x.lhs, x.rhs)
        return None

    def and_or(t: Logic):
        op = t.op
        if op not in ("and", "or", "nand", "nor"):
            return None
        base = "and" if op in ("and", "nand") else "or"
        negated = op in ("nand", "nor")
        ident, annihil = (True, False) if base == "and" else (False, True)
        flat = []
        for a in t.args:
            if isinstance(a, Logic) and a.op == base:
                flat.extend(a.args)
            else:
                flat.append(a)
        out = []
        seen = set()
        for a in flat:
            if isinstance(a, Const) and a.is_bool:
                if a.value == annihil:
                    return Const(annihil != negated)
                continue
            if a in seen:
                continue
            seen.add(a)
            out.append(a)
        for a in out:
            if _complement_of(a) in seen:
                return Const(annihil != negated)
        if not out:
            return Const(ident != negated)
        if len(out) == 1:
            return Logic("not", (out[0],)) if negated else out[0]
        return Logic(op, out)

    def xor_rule(t: Logic):
        if t.op != "xor":
            return None
        parity = False
        pending = list(t.args)
        counts: dict = {}
        while pending:
            a = pending.pop()
            if isinstance(a, Const) and a.is_bool:
                parity ^= a.value
            elif isinstance(a, Logic) and a.op == "not":
                parity = not parity
                pending.append(a.args[0])
            elif isinstance(a, Logic) and a.op == "xor":
                pending.extend(a.args)
            else:
                counts[a] = counts.get(a, 0) + 1
        rest = [a for a, n in counts.items() if n % 2]
        if not rest:
            return Const(parity)
        core = rest[0] if len(rest) == 1 else Logic("xor", rest)
        return Logic("not", (core,)) if parity else core

    def compare_fold(t: Compare):
        a, b, op = t.lhs, t.rhs, t.op
        if a is b:
            return TRUE if op in ("=", "<=", ">=") else FALSE
        if isinstance(a, Const) and isinstance(b, Const):
            if a.is_bool != b.is_bool:
                return Const(op == "<>") if op in ("=", "<>") else None
            if a.is_bool and op not in ("=", "<>"):
                return None
            return Const(_cmp(op, a.value, b.value))
        if op in ("=", "<>"):
            distinct = _structurally_distinct(a, b)
            if distinct:
                return Const(op == "<>")
            # x = True, x <> False -> x; x = False, x <> True -> not x
            for x, y in ((a, b), (b, a)):
                if isinstance(y, Const) and y.is_bool and guess_sort(x) == BOOL:
                    keep = (op == "=") == y.value
                    return x if keep else Logic("not", (x,))
            if b.order_key() < a.order_key():
                return Compare(op, b, a)
            return None
        if op in _FLIP:
            return Compare(_FLIP[op], b, a)
        return None

    return (
        ProcRule("not", not_rule, (Logic,)),
        ProcRule("and_or", and_or, (Logic,)),
        ProcRule("xor", xor_rule, (Logic,)),
        ProcRule("compare_fold", compare_fold, (Compare,)),
    )


def _structurally_distinct(a: Term, b: Term) -> bool:
    """Ground values of different shape (label vs label, label vs word, ...)."""
    if isinstance(a, Label) and isinstance(b, Label):
        return a is not b
    kinds = []
    for x in (a, b):
        if isinstance(x, Label):
            kinds.append("label")
        elif isinstance(x, Tuple):
            kinds.append("tuple")
        elif isinstance(x, Const):
            kinds.append("bool" if x.is_bool else "num")
        else:
            return False
    if kinds[0] == kinds[1] == "tuple":
        return len(a.items) != len(b.items)
    return kinds[0] != kinds[1]


# ---------------------------------------------------------------- R_IF


def _if_rules(registry: Registry) -> tuple:
    def distribute(t: Term):
        kids = t.children
        pos = next((i for i, k in enumerate(kids) if isinstance(k, If)), None)
        if pos is None:
            return None
        if isinstance(t, Func):
            lib = registry.get(t.name)
            if lib is not None and not lib.distributes:
                return None
        elif not all(is_ground(k) for i, k in enumerate(kids) if i != pos):
            return None
        branch = kids[pos]
        then = t.rebuild(kids[:pos] + (branch.then,) + kids[pos + 1:])
        else_ = t.rebuild(kids[:pos] + (branch.else_,) + kids[pos + 1:])
        return If(branch.cond, then, else_)

    def const_cond(t: If):
        c = t.cond
        if isinstance(c, Const) and c.is_bool:
            return t.then if c.value else t.else_
        return None

    def same(t: If):
        return t.then if t.then is t.else_ else None

    def not_cond(t: If):
        c = t.cond
        if isinstance(c, Logic) and c.op == "not":
            return If(c.args[0], t.else_, t.then)
        return None

    def bool_branches(t: If):
        c, x, y = t.cond, t.then, t.else_
        xb = isinstance(x, Const) and x.is_bool
        yb = isinstance(y, Const) and y.is_bool
        if xb and yb:
            return c if x.value else Logic("not", (c,))
        if xb and guess_sort(y, registry) == BOOL:
            return Logic("or", (c, y)) if x.value else Logic("and", (Logic("not", (c,)), y))
        if yb and guess_sort(x, registry) == BOOL:
            return Logic("or", (Logic("not", (c,)), x)) if y.value else Logic("and", (c, x))
        return None

    def nested(t: If):
        c = t.cond
        x, y = t.then, t.else_
        if isinstance(x, If) and x.cond is c:
            return If(c, x.then, y)
        if isinstance(y, If) and y.cond is c:
            return If(c, x, y.else_)
        return None

    return (
        ProcRule("if_distribution", distribute, (Func, Arith, Logic, Compare, Index)),
        ProcRule("if_constant_condition", const_cond, (If,)),
        ProcRule("if_reduction", same, (If,)),
        ProcRule("if_negated_condition", not_cond, (If,)),
        ProcRule("if_boolean_branches", bool_branches, (If,)),
        ProcRule("if_nested_condition", nested, (If,)),
    )


# ---------------------------------------------------------------- R_Func


def _func_rules(registry: Registry) -> tuple:
    def lib_eval(t: Func):
        lib = registry.get(t.name)
        if lib is None:
            return None
        if not lib.symbolic and not all(is_ground(a) for a in t.args):
            return None
        return lib.impl(t.args)

    def index(t: Index):
        base, i = t.base, t.index
        if isinstance(base, Label):
            return base
        if not isinstance(base, Tuple) or not isinstance(i, Const) or i.is_bool:
            return None
        v = i.value
        if v.denominator != 1 or not 0 <= v < len(base.items):
            return INVALID
        return base.items[int(v)]

    def word_equality(t: Compare):
        if t.op not in ("=", "<>"):
            return None
        a, b = t.lhs, t.rhs
        if not (isinstance(a, Tuple) and isinstance(b, Tuple)):
            return None
        if len(a.items) != len(b.items):
            return Const(t.op == "<>")
        parts = [Compare("=", x, y) for x, y in zip(a.items, b.items)]
        if not parts:
            return Const(t.op == "=")
        return Logic("and" if t.op == "=" else "nand", parts)

    return (
        ProcRule("library_evaluation", lib_eval, (Func,)),
        ProcRule("word_index", index, (Index,)),
        ProcRule("word_equality", word_equality, (Compare,)),
    )


# ---------------------------------------------------------------- R_Abst


def abstraction_rules(correspondence: Mapping[str, str] = None,
                      conversions=CONVERSIONS, extra=()) -> RuleSet:
    """Rename implementation signals to specification signals.

    ``correspondence`` maps implementation identifiers to specification
    identifiers; it applies to variable references and to symbolic inputs
    (including per-bit symbols ``name_<k>``). Conversion calls such as
    ``to_int(x)`` are removed.
    """
    table = dict(correspondence or {})
    rules = [RewriteRule(Func(name, (Hole("x"),)), Hole("x"), name=f"drop_{name}")
             for name in conversions]

    def rename(t: Term):
        if isinstance(t, Var):
            new = table.get(t.name)
            return Var(new, t.offset) if new else None
        if isinstance(t, Sym):
            new = table.get(t.name)
            if new:
                return Sym(new, t.sort)
            stem, _, k = t.name.rpartition("_")
            if k.isdigit() and stem in table:
                return Sym(f"{table[stem]}_{k}", t.sort)
        return None

    if table:
        rules.append(ProcRule("rename_signals", rename, (Var, Sym)))
    rules.extend(extra)
    return RuleSet("R_Abst", tuple(rules))


# ---------------------------------------------------------------- registry of classes


def builtin_ruleset(name: str, correspondence: Mapping[str, str] = None,
                    registry: Registry = None) -> RuleSet:
    """The documented rule list of a built-in class."""
    registry = registry or DEFAULT
    if name == "R_Math":
        return RuleSet("R_Math", _math_rules())
    if name == "R_Logic":
        return RuleSet("R_Logic", _logic_rules())
    if name == "R_IF":
        return RuleSet("R_IF", _if_rules(registry))
    if name == "R_Func":
        return RuleSet("R_Func", _func_rules(registry))
    if name == "R_Abst":
        return abstraction_rules(correspondence)
    raise KeyError(f"unknown rule class {name!r}; known: {', '.join(RULE_CLASSES)}")


_SIM_CACHE: dict = {}


def simulation_rules(registry: Registry = None) -> RuleSet:
    """``R_Func + R_IF + R_Logic + R_Math``: the simplifier used by simulation."""
    registry = registry or DEFAULT
    key = id(registry)
    hit = _SIM_CACHE.get(key)
    if hit is None or hit[0] is not registry:
        rs = (builtin_ruleset("R_Func", registry=registry)
              + builtin_ruleset("R_IF", registry=registry)
              + builtin_ruleset("R_Logic")
              + builtin_ruleset("R_Math"))
        hit = _SIM_CACHE[key] = (registry, RuleSet("simplify", rs.rules))
    return hit[1]
