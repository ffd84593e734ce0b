"""Registry of named functions and the concrete evaluator.

A library function receives its argument terms and returns a result term,
or ``None`` when it cannot (yet) compute one. Functions flagged
``symbolic`` may run on non-ground arguments (e.g. a word of symbolic
bits); the others fire only once every argument is ground. Names without
a registration stay uninterpreted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

from .terms import (
    ANY, NUM, Arith, Bound, Compare, Const, ForAll, Func, If, Index,
    Label, Logic, Sort, Sym, Term, Tuple, Var, is_ground,
)

__all__ = [
    "LibFunction", "Registry", "DEFAULT", "register", "EvaluationError",
    "evaluate", "compile_term", "to_term", "from_term", "INVALID",
]

INVALID = Label("INVALID_DATA")


@dataclass(frozen=True)
class LibFunction:
    name: str
    impl: Callable[[tuple], Optional[Term]]
    symbolic: bool = False
    result: Sort = ANY
    distributes: bool = True
    doc: str = ""


@dataclass
class Registry:
    functions: dict = field(default_factory=dict)

    def register(self, name: str, impl=None, *, symbolic=False, result=ANY,
                 distributes=True):
        def deco(fn):
            self.functions[name] = LibFunction(name, fn, symbolic, result, distributes,
                                               (fn.__doc__ or "").strip())
            return fn

        return deco(impl) if impl is not None else deco

    def get(self, name: str) -> Optional[LibFunction]:
        return self.functions.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.functions

    def result_sorts(self) -> dict:
        return {n: f.result for n, f in self.functions.items()}

    def copy(self) -> "Registry":
        return Registry(dict(self.functions))


DEFAULT = Registry()
register = DEFAULT.register


@register("len", result=NUM)
def _len(args):
    """Length of a word."""
    (x,) = args
    if isinstance(x, Tuple):
        return Const(len(x.items))
    return None


@register("to_int", result=ANY)
def _to_int(args):
    """Representation conversion used by implementation models; identity on values."""
    (x,) = args
    return x if is_ground(x) else None


@register("from_int", result=ANY)
def _from_int(args):
    (x,) = args
    return x if is_ground(x) else None


# ---------------------------------------------------------------- values


class EvaluationError(Exception):
    pass


def to_term(value) -> Term:
    """Python value (bool, int, Fraction, Label, tuple) to a ground term."""
    if isinstance(value, Term):
        return value
    if isinstance(value, (bool, int, Fraction)):
        return Const(value)
    if isinstance(value, (tuple, list)):
        return Tuple(to_term(v) for v in value)
    raise TypeError(f"cannot convert {value!r} to a term")


def from_term(term: Term):
    """Ground term to a Python value; labels stay :class:`Label` objects."""
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Label):
        return term
    if isinstance(term, Tuple):
        return tuple(from_term(i) for i in term.items)
    raise EvaluationError(f"term is not ground: {term}")


# ---------------------------------------------------------------- evaluator


def evaluate(term: Term, env: Mapping = None, registry: Registry = None):
    """Concrete value of ``term``.

    ``env`` maps symbol names (and ``(name, offset)`` pairs for Var
    references) to Python values. Raises :class:`EvaluationError` for
    unbound names, uninterpreted functions and division by zero.
    """
    return compile_term(term, registry)(env or {})


_COMPILED: dict = {}


def compile_term(term: Term, registry: Registry = None) -> Callable[[Mapping], object]:
    """Compile ``term`` into a closure over an environment mapping."""
    registry = registry or DEFAULT
    key = (term, id(registry))
    fn = _COMPILED.get(key)
    if fn is None:
        if len(_COMPILED) > 200_000:
            _COMPILED.clear()
        fn = _COMPILED[key] = _compile(term, registry, {})
    return fn


def _truth(v):
    if not isinstance(v, bool):
        raise EvaluationError(f"expected boolean, got {v!r}")
    return v


def _number(v):
    if isinstance(v, bool) or not isinstance(v, Fraction):
        if isinstance(v, int) and not isinstance(v, bool):
            return Fraction(v)
        raise EvaluationError(f"expected number, got {v!r}")
    return v


_CMP = {
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _values_equal(a, b) -> bool:
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    if isinstance(a, Label) or isinstance(b, Label):
        return a is b
    if isinstance(a, tuple) or isinstance(b, tuple):
        return (isinstance(a, tuple) and isinstance(b, tuple) and len(a) == len(b)
                and all(_values_equal(x, y) for x, y in zip(a, b)))
    return a == b


def _compile(t: Term, reg: Registry, memo: dict):
    hit = memo.get(t)
    if hit is not None:
        return hit
    fn = _compile_node(t, reg, memo)
    memo[t] = fn
    return fn


def _compile_node(t: Term, reg: Registry, memo):
    c = lambda x: _compile(x, reg, memo)  # noqa: E731
    if isinstance(t, Const):
        v = t.value
        return lambda env: v
    if isinstance(t, Label):
        return lambda env: t
    if isinstance(t, Sym):
        name = t.name

        def sym(env):
            try:
                return env[name]
            except KeyError:
                raise EvaluationError(f"unbound symbol {name}") from None

        return sym
    if isinstance(t, Bound):
        name = t.name

        def bound(env):
            try:
                return env[name]
            except KeyError:
                raise EvaluationError(f"unbound index {name}") from None

        return bound
    if isinstance(t, Var):
        key = (t.name, t.offset)

        def var(env):
            try:
                return env[key]
            except KeyError:
                raise EvaluationError(f"unbound reference {t.name}(n-{t.offset})") from None

        return var
    if isinstance(t, Arith):
        fs = [c(a) for a in t.args]
        op = t.op
        if op == "+":
            return lambda env: sum((_number(f(env)) for f in fs), Fraction(0))

        if op == "*":
            def mul(env):
                acc = Fraction(1)
                for f in fs:
                    acc *= _number(f(env))
                return acc

            return mul
        if op == "-":
            if len(fs) == 1:
                f0 = fs[0]
                return lambda env: -_number(f0(env))
            f0, f1 = fs
            return lambda env: _number(f0(env)) - _number(f1(env))
        f0, f1 = fs

        def div(env):
            d = _number(f1(env))
            if d == 0:
                raise EvaluationError("division by zero")
            return _number(f0(env)) / d

        return div
    if isinstance(t, Logic):
        fs = [c(a) for a in t.args]
        op = t.op
        if op == "not":
            f0 = fs[0]
            return lambda env: not _truth(f0(env))
        if op == "and":
            return lambda env: all([_truth(f(env)) for f in fs])
        if op == "or":
            return lambda env: any([_truth(f(env)) for f in fs])
        if op == "nand":
            return lambda env: not all([_truth(f(env)) for f in fs])
        if op == "nor":
            return lambda env: not any([_truth(f(env)) for f in fs])

        def xor(env):
            acc = False
            for f in fs:
                acc ^= _truth(f(env))
            return acc

        return xor
    if isinstance(t, Compare):
        fa, fb = c(t.lhs), c(t.rhs)
        op = t.op
        if op in ("=", "<>"):
            want = op == "="
            return lambda env: _values_equal(fa(env), fb(env)) == want
        cmp = _CMP[op]
        return lambda env: cmp(_number(fa(env)), _number(fb(env)))
    if isinstance(t, If):
        fc, ft, fe = c(t.cond), c(t.then), c(t.else_)
        return lambda env: ft(env) if _truth(fc(env)) else fe(env)
    if isinstance(t, Tuple):
        fs = [c(i) for i in t.items]
        return lambda env: tuple(f(env) for f in fs)
    if isinstance(t, Index):
        fb, fi = c(t.base), c(t.index)

        def index(env):
            base = fb(env)
            i = _number(fi(env))
            if isinstance(base, Label):
                return base
            if not isinstance(base, tuple):
                raise EvaluationError(f"cannot index {base!r}")
            if i.denominator != 1 or not 0 <= i < len(base):
                return INVALID
            return base[int(i)]

        return index
    if isinstance(t, ForAll):
        flo, fhi, fbody = c(t.lo), c(t.hi), c(t.body)
        var = t.var

        def forall(env):
            lo, hi = _number(flo(env)), _number(fhi(env))
            inner = dict(env)
            for k in range(int(lo), int(hi) + 1):
                inner[var] = Fraction(k)
                if not _truth(fbody(inner)):
                    return False
            return True

        return forall
    if isinstance(t, Func):
        fs = [c(a) for a in t.args]
        lib = reg.get(t.name)
        name = t.name

        def call(env):
            if lib is None:
                raise EvaluationError(f"uninterpreted function {name}")
            args = tuple(to_term(f(env)) for f in fs)
            out = lib.impl(args)
            if out is None or not is_ground(out):
                raise EvaluationError(f"function {name} did not reduce on {args}")
            return from_term(out)

        return call
    raise EvaluationError(f"cannot evaluate {type(t).__name__}")

