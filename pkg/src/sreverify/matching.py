"""Trace matching: structural MatchQ and the three-valued term equivalence.

:func:`match_q` matches a normalized term against a pattern and, on
failure, reports the deepest sub-terms where the two disagree.
:func:`equiv_terms` decides equality of two terms by normal forms first,
then by exhaustive evaluation over small finite domains, then by random
sampling. Sampling can refute equality but never proves it.
"""
from __future__ import annotations

import itertools
import zlib
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .library import DEFAULT, EvaluationError, Registry, compile_term
from .patterns import match
from .rewrite import Rewriter
from .rules import simulation_rules
from .terms import (
    BOOL, COMMUTATIVE, LABEL, NUM, Arith, Compare, Const, Func, Hole, If, Index, Label,
    Logic, SeqHole, Sym, Term, Var, Wildcard, walk,
)

__all__ = [
    "MatchOutcome", "Mismatch", "match_q", "EquivResult", "equiv_terms", "verify_expected",
    "CheckError", "EQUAL", "NOT_EQUAL", "UNKNOWN", "normalize", "atom_sorts",
    "DEFAULT_BOOL_LIMIT", "DEFAULT_SAMPLES",
]

EQUAL, NOT_EQUAL, UNKNOWN = "Equal", "NotEqual", "Unknown"
DEFAULT_BOOL_LIMIT = 16
DEFAULT_SAMPLES = 64


@dataclass(frozen=True)
class Mismatch:
    path: tuple
    expected: Term
    actual: Optional[Term]

    def to_json(self) -> dict:
        return {"path": list(self.path), "expected": str(self.expected),
                "actual": None if self.actual is None else str(self.actual)}


@dataclass(frozen=True)
class MatchOutcome:
    matched: bool
    bindings: dict = field(default_factory=dict)
    mismatches: tuple = ()

    def __bool__(self) -> bool:
        return self.matched


def match_q(expr: Term, pattern: Term) -> MatchOutcome:
    """Structural match of ``expr`` against ``pattern``.

    Commutative operators match modulo operand order. On failure the
    mismatch list holds the deepest differing positions.
    """
    b = match(pattern, expr)
    if b is not None:
        return MatchOutcome(True, b)
    out: list = []
    _diff(pattern, expr, (), {}, out)
    if not out:
        out.append(Mismatch((), pattern, expr))
    return MatchOutcome(False, {}, tuple(out))


def _head(t: Term):
    return type(t), getattr(t, "op", None), t.name if isinstance(t, Func) else None


def _diff(p: Term, t: Term, path: tuple, b: dict, out: list):
    if isinstance(p, Wildcard):
        return
    if isinstance(p, Hole):
        if match(p, t, b) is None:
            out.append(Mismatch(path, b.get(p.name, p), t))
        else:
            b.setdefault(p.name, t)
        return
    if match(p, t, b) is not None:
        return
    if not p.children or not t.children or _head(p) != _head(t):
        out.append(Mismatch(path, p, t))
        return
    pk, tk = list(p.children), list(t.children)
    commutative = isinstance(p, (Arith, Logic)) and p.op in COMMUTATIVE
    if commutative:
        if any(isinstance(x, SeqHole) for x in pk):
            out.append(Mismatch(path, p, t))
            return
        # drop operands that agree, pair the rest by canonical position
        rest_t = list(tk)
        rest_p = []
        for x in pk:
            hit = next((y for y in rest_t if match(x, y, b) is not None), None)
            if hit is None:
                rest_p.append(x)
            else:
                rest_t.remove(hit)
        if len(rest_p) != len(rest_t):
            out.append(Mismatch(path, p, t))
            return
        for x, y in zip(rest_p, rest_t):
            _diff(x, y, path + (tk.index(y),), b, out)
        return
    if len(pk) != len(tk):
        out.append(Mismatch(path, p, t))
        return
    before = len(out)
    for i, (x, y) in enumerate(zip(pk, tk)):
        _diff(x, y, path + (i,), b, out)
    if len(out) == before:
        out.append(Mismatch(path, p, t))


# ---------------------------------------------------------------- equivalence


@dataclass(frozen=True)
class EquivResult:
    status: str
    witness: Optional[dict] = None
    method: str = ""
    residual: tuple = ()

    @property
    def equal(self) -> bool:
        return self.status == EQUAL

    def to_json(self) -> dict:
        d = {"status": self.status, "method": self.method}
        if self.witness is not None:
            d["witness"] = {str(k): _jsonable(v) for k, v in self.witness.items()}
        if self.residual:
            d["residual"] = [str(r) for r in self.residual]
        return d


def _jsonable(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    if isinstance(v, Label):
        return v.name
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return str(v)


_NORMALIZERS: dict = {}


def normalize(t: Term, registry: Registry = None) -> Term:
    registry = registry or DEFAULT
    rw = _NORMALIZERS.get(id(registry))
    if rw is None or rw[0] is not registry:
        rw = _NORMALIZERS[id(registry)] = (registry, Rewriter(simulation_rules(registry)))
    if len(rw[1]._fix) > 500_000:
        rw[1].clear()
    return rw[1].replace_repeated(t)


def _atom_key(a: Term):
    return a.name if isinstance(a, Sym) else (a.name, a.offset)


def atom_sorts(terms: Sequence[Term]) -> dict:
    """Free atoms (Sym and Var nodes) with a sort inferred from their use."""
    sorts: dict = {}
    for t in terms:
        for node in walk(t):
            if isinstance(node, Sym):
                if node.sort in (BOOL, NUM, LABEL):
                    sorts[node] = node.sort
                else:
                    sorts.setdefault(node, None)
            elif isinstance(node, Var):
                sorts.setdefault(node, None)

    def hint(x: Term, s: str):
        if x in sorts and sorts[x] is None:
            sorts[x] = s

    for t in terms:
        for node in walk(t):
            if isinstance(node, Logic):
                for a in node.args:
                    hint(a, BOOL)
            elif isinstance(node, If):
                hint(node.cond, BOOL)
            elif isinstance(node, Arith):
                for a in node.args:
                    hint(a, NUM)
            elif isinstance(node, Compare):
                if node.op not in ("=", "<>"):
                    hint(node.lhs, NUM)
                    hint(node.rhs, NUM)
                else:
                    for x, y in ((node.lhs, node.rhs), (node.rhs, node.lhs)):
                        if isinstance(y, Label):
                            hint(x, LABEL)
                        elif isinstance(y, Const):
                            hint(x, BOOL if y.is_bool else NUM)
            elif isinstance(node, Index):
                hint(node.index, NUM)
    return {a: (s or NUM) for a, s in sorts.items()}


def _labels_in(terms) -> list:
    found = {n for t in terms for n in walk(t) if isinstance(n, Label)}
    found.add(Label("OTHER_LABEL"))
    return sorted(found, key=Term.order_key)


class _Opaque(Registry):
    """Registry that interprets unknown functions by a fixed hash."""

    def __init__(self, base: Registry):
        super().__init__(dict(base.functions))

    def get(self, name):
        f = self.functions.get(name)
        if f is not None:
            return f
        from .library import LibFunction

        def impl(args, _name=name):
            key = f"{_name}({', '.join(map(str, args))})".encode()
            return Const(Fraction(zlib.crc32(key) % 1009))

        f = self.functions[name] = LibFunction(name, impl)
        return f


_OPAQUE: dict = {}


def _opaque(registry: Registry) -> Registry:
    hit = _OPAQUE.get(id(registry))
    if hit is None or hit[0] is not registry:
        hit = _OPAQUE[id(registry)] = (registry, _Opaque(registry))
    return hit[1]


def _env(assign: dict) -> dict:
    return {_atom_key(a): v for a, v in assign.items()}


def _compare_at(fa, fb, env):
    from .library import _values_equal

    try:
        va = fa(env)
    except (EvaluationError, ZeroDivisionError, TypeError):
        va = _UNDEF
    try:
        vb = fb(env)
    except (EvaluationError, ZeroDivisionError, TypeError):
        vb = _UNDEF
    if va is _UNDEF or vb is _UNDEF:
        return None
    return _values_equal(va, vb)


_UNDEF = object()


def _random_value(sort: str, rng: random.Random, labels: list):
    if sort == BOOL:
        return rng.random() < 0.5
    if sort == LABEL:
        return rng.choice(labels)
    if rng.random() < 0.5:
        return Fraction(rng.randint(-20, 20))
    return Fraction(rng.randint(-50, 50), rng.randint(1, 13))


def equiv_terms(a: Term, b: Term, bool_limit: int = DEFAULT_BOOL_LIMIT,
                samples: int = DEFAULT_SAMPLES, registry: Registry = None,
                seed: int = 0, normalized: bool = False) -> EquivResult:
    """Decide ``a == b`` for every value of their free symbols.

    Returns ``Equal`` when normal forms coincide or exhaustive evaluation
    over all boolean/label assignments agrees, ``NotEqual`` with a witness
    assignment when some evaluated point differs, and ``Unknown`` when only
    sampling was possible and found no difference.
    """
    registry = registry or DEFAULT
    if not normalized:
        a, b = normalize(a, registry), normalize(b, registry)
    if a is b:
        return EquivResult(EQUAL, method="normal-form")
    sorts = atom_sorts((a, b))
    atoms = sorted(sorts, key=Term.order_key)
    labels = _labels_in((a, b))
    reg = _opaque(registry)
    fa, fb = compile_term(a, reg), compile_term(b, reg)
    finite = all(sorts[x] in (BOOL, LABEL) for x in atoms)
    if finite:
        domains = [[False, True] if sorts[x] == BOOL else labels for x in atoms]
        size = 1
        for d in domains:
            size *= len(d)
        if size <= 2 ** bool_limit:
            for values in itertools.product(*domains):
                assign = dict(zip(atoms, values))
                same = _compare_at(fa, fb, _env(assign))
                if same is False:
                    return EquivResult(NOT_EQUAL, _named(assign), "exhaustive", (a, b))
            return EquivResult(EQUAL, method="exhaustive")
    rng = random.Random(seed)
    for _ in range(samples):
        assign = {x: _random_value(sorts[x], rng, labels) for x in atoms}
        if _compare_at(fa, fb, _env(assign)) is False:
            return EquivResult(NOT_EQUAL, _named(assign), "sampling", (a, b))
    return EquivResult(UNKNOWN, method="sampling", residual=(a, b))


def _named(assign: dict) -> dict:
    out = {}
    for a, v in assign.items():
        key = a.name if isinstance(a, Sym) else (a.name if a.offset == 0 else f"{a.name}(n-{a.offset})")
        out[key] = v
    return out


# ---------------------------------------------------------------- trace checks


@dataclass(frozen=True)
class CheckError:
    variable: str
    cycle: int
    message: str

    matched = False

    def __bool__(self) -> bool:
        return False


def verify_expected(trace, checks: Sequence[tuple]) -> list:
    """One :class:`MatchOutcome` (or :class:`CheckError`) per ``(var, cycle, pattern)``."""
    out = []
    for var, cycle, pattern in checks:
        state = trace.states.get(cycle)
        if state is None:
            out.append(CheckError(var, cycle, f"cycle {cycle} outside trace "
                                              f"[{min(trace.states)}, {trace.last}]"))
            continue
        if var not in state:
            out.append(CheckError(var, cycle, f"unknown variable {var}"))
            continue
        out.append(match_q(state[var], pattern))
    return out

