"""Recurrence equations, the SRE system container, sort inference and validation."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .terms import (
    ANY, BOOL, LABEL, NUM, Arith, Bound, Compare, Const, ForAll, Func, Hole, If,
    Index, Label, Logic, SeqHole, Sort, Sym, Term, Tuple, TupleSort, Var, Wildcard,
    walk,
)

__all__ = [
    "Equation", "SreSystem", "Diagnostic", "SortError", "sort_of", "compatible",
    "validate", "infer_sorts",
]


@dataclass(frozen=True)
class Equation:
    """``target(n) = body``."""

    target: str
    body: Term
    span: Optional[tuple] = field(default=None, compare=False)

    @property
    def delays(self) -> set:
        """The set of (variable, delay) pairs referenced by the body."""
        return {(n.name, n.offset) for n in walk(self.body) if isinstance(n, Var)}


@dataclass(frozen=True)
class SreSystem:
    """A deterministic system of recurrence equations.

    ``inputs``, ``controls`` and ``variables`` map identifiers to declared
    sorts (``"any"`` when undeclared). ``initial`` maps ``(variable, t)``
    with ``t <= 0`` to a constant or symbolic term.
    """

    name: str
    inputs: Mapping[str, Sort] = field(default_factory=dict)
    controls: Mapping[str, Sort] = field(default_factory=dict)
    variables: Mapping[str, Sort] = field(default_factory=dict)
    outputs: tuple = ()
    equations: Mapping[str, Equation] = field(default_factory=dict)
    initial: Mapping[tuple, Term] = field(default_factory=dict)
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)
    span: Optional[tuple] = field(default=None, compare=False)

    @property
    def max_delay(self) -> int:
        return max((off for eq in self.equations.values() for _, off in eq.delays), default=0)

    def declared(self, name: str) -> bool:
        return name in self.variables or name in self.inputs or name in self.controls

    def sort_env(self) -> dict:
        env = {}
        env.update(self.inputs)
        env.update(self.controls)
        env.update(self.variables)
        return env

    def with_equation(self, target: str, body: Term) -> "SreSystem":
        eqs = dict(self.equations)
        old = eqs.get(target)
        eqs[target] = Equation(target, body, old.span if old else None)
        return replace(self, equations=eqs)

    def renamed(self, name: str) -> "SreSystem":
        return replace(self, name=name)


@dataclass(frozen=True)
class Diagnostic:
    message: str
    equation: Optional[str] = None
    path: tuple = ()

    def __str__(self) -> str:
        where = ""
        if self.equation is not None:
            where = f"[{self.equation}"
            if self.path:
                where += " @" + ".".join(map(str, self.path))
            where += "] "
        return where + self.message


class SortError(Exception):
    def __init__(self, message: str, path: tuple = ()):
        super().__init__(message)
        self.path = path

    def __str__(self) -> str:
        loc = ".".join(map(str, self.path)) or "root"
        return f"{self.args[0]} (at {loc})"


# ---------------------------------------------------------------- sorts


def compatible(a: Sort, b: Sort) -> bool:
    """Whether values of the two sorts may meet in one IF or comparison.

    ``any`` unifies with everything, and labels act as sentinels that may
    stand in for any value (``INVALID_DATA`` in a word-valued IF).
    """
    if a == ANY or b == ANY or a == LABEL or b == LABEL:
        return True
    if isinstance(a, TupleSort) and isinstance(b, TupleSort):
        return compatible(a.elem, b.elem)
    return a == b


def _join(a: Sort, b: Sort) -> Sort:
    if a == b:
        return a
    if a in (ANY, LABEL):
        return b if b != LABEL else a
    if b in (ANY, LABEL):
        return a
    if isinstance(a, TupleSort) and isinstance(b, TupleSort):
        return TupleSort(_join(a.elem, b.elem), a.length if a.length == b.length else -1)
    return ANY


def sort_of(term: Term, context=None, functions=None, _path: tuple = ()) -> Sort:
    """Infer the sort of ``term``.

    ``context`` is an :class:`SreSystem` or a mapping from identifier to
    sort. ``functions`` optionally maps function names to result sorts.
    Raises :class:`SortError` at the first ill-sorted sub-term.
    """
    if isinstance(context, SreSystem):
        env = context.sort_env()
    else:
        env = dict(context or {})
    return _sort(term, env, functions or {}, _path)


def _sort(t: Term, env, funcs, path) -> Sort:
    if isinstance(t, Const):
        return BOOL if t.is_bool else NUM
    if isinstance(t, Label):
        return LABEL
    if isinstance(t, Var):
        if t.offset < 0:
            raise SortError(f"reference to future time {t.name}(n+{-t.offset})", path)
        if env and t.name not in env:
            raise SortError(f"unresolved reference {t.name}", path)
        return env.get(t.name, ANY)
    if isinstance(t, Sym):
        return t.sort
    if isinstance(t, Bound):
        return NUM
    if isinstance(t, (Wildcard, SeqHole)):
        return ANY
    if isinstance(t, Hole):
        return t.sort if t.sort is not None else ANY
    if isinstance(t, Arith):
        for i, a in enumerate(t.args):
            s = _sort(a, env, funcs, path + (i,))
            if not compatible(s, NUM) or s == LABEL:
                raise SortError(f"arithmetic operand must be numeric, got {_fmt(s)}", path + (i,))
        return NUM
    if isinstance(t, Logic):
        for i, a in enumerate(t.args):
            s = _sort(a, env, funcs, path + (i,))
            if not compatible(s, BOOL) or s == LABEL:
                raise SortError(f"logical operand must be boolean, got {_fmt(s)}", path + (i,))
        return BOOL
    if isinstance(t, Compare):
        a = _sort(t.lhs, env, funcs, path + (0,))
        b = _sort(t.rhs, env, funcs, path + (1,))
        if not compatible(a, b):
            raise SortError(f"cannot compare {_fmt(a)} with {_fmt(b)}", path + (1,))
        if t.op not in ("=", "<>") and (isinstance(a, TupleSort) or a in (BOOL,) or b in (BOOL,)):
            raise SortError(f"ordering {t.op!r} needs numeric operands", path)
        return BOOL
    if isinstance(t, If):
        c = _sort(t.cond, env, funcs, path + (0,))
        if not compatible(c, BOOL) or c == LABEL:
            raise SortError(f"IF condition must be boolean, got {_fmt(c)}", path + (0,))
        a = _sort(t.then, env, funcs, path + (1,))
        b = _sort(t.else_, env, funcs, path + (2,))
        if not compatible(a, b):
            raise SortError(f"IF branches disagree: {_fmt(a)} vs {_fmt(b)}", path + (2,))
        return _join(a, b)
    if isinstance(t, Tuple):
        elem: Sort = ANY
        for i, x in enumerate(t.items):
            s = _sort(x, env, funcs, path + (i,))
            elem = s if i == 0 else _join(elem, s)
        return TupleSort(elem, len(t.items))
    if isinstance(t, Index):
        b = _sort(t.base, env, funcs, path + (0,))
        i = _sort(t.index, env, funcs, path + (1,))
        if not compatible(i, NUM) or i == LABEL:
            raise SortError("index must be numeric", path + (1,))
        if isinstance(b, TupleSort):
            return b.elem
        if b in (ANY, LABEL):
            return ANY
        raise SortError(f"cannot index a {_fmt(b)}", path + (0,))
    if isinstance(t, ForAll):
        for i, x in enumerate((t.lo, t.hi)):
            if not compatible(_sort(x, env, funcs, path + (i,)), NUM):
                raise SortError("quantifier bounds must be numeric", path + (i,))
        body = _sort(t.body, env, funcs, path + (2,))
        if not compatible(body, BOOL) or body == LABEL:
            raise SortError("quantified body must be boolean", path + (2,))
        return BOOL
    if isinstance(t, Func):
        for i, a in enumerate(t.args):
            _sort(a, env, funcs, path + (i,))
        return funcs.get(t.name, ANY)
    raise SortError(f"unknown term {type(t).__name__}", path)


def _fmt(s: Sort) -> str:
    from .terms import format_sort

    return format_sort(s)


def infer_sorts(system: SreSystem, functions=None) -> dict:
    """Declared sorts, refined for undeclared variables from their equation bodies."""
    env = system.sort_env()
    for _ in range(len(system.equations) + 1):
        changed = False
        for name, eq in system.equations.items():
            if env.get(name, ANY) != ANY:
                continue
            try:
                s = sort_of(eq.body, env, functions)
            except SortError:
                continue
            if s != ANY:
                env[name] = s
                changed = True
        if not changed:
            break
    return env


# ---------------------------------------------------------------- validation


def validate(system: SreSystem, functions=None) -> list:
    """All well-formedness violations of ``system``; empty means well-formed."""
    diags: list = []
    add = diags.append
    defined = set(system.variables)

    for name in system.inputs:
        if name in system.variables or name in system.controls:
            add(Diagnostic(f"identifier {name} declared twice"))
        if name in system.equations:
            add(Diagnostic(f"equation defines input {name}", name))
    for name in system.controls:
        if name in system.variables:
            add(Diagnostic(f"identifier {name} declared twice"))
        if name in system.equations:
            add(Diagnostic(f"equation defines control {name}", name))
    for name in system.outputs:
        if name not in defined:
            add(Diagnostic(f"output {name} is not a declared variable"))
    for name in sorted(defined - set(system.equations)):
        add(Diagnostic(f"no equation defines variable {name}", name))
    for name in system.equations:
        if name not in defined and name not in system.inputs and name not in system.controls:
            add(Diagnostic(f"equation for undeclared variable {name}", name))

    env = infer_sorts(system, functions)
    for name, eq in system.equations.items():
        refs = [(path, t) for path, t in _positions(eq.body) if isinstance(t, Var)]
        if not refs:
            add(Diagnostic("delay set empty: body references no variable", name))
        unresolved = False
        for path, ref in refs:
            if not system.declared(ref.name):
                unresolved = True
                add(Diagnostic(f"unresolved reference {ref.name}", name, path))
            if ref.offset < 0:
                add(Diagnostic(f"reference to future time {ref.name}(n+{-ref.offset})", name, path))
        for path, t in _positions(eq.body):
            if isinstance(t, (Wildcard, Hole, SeqHole)):
                add(Diagnostic("pattern hole inside an equation", name, path))
            if isinstance(t, Bound) and not _bound_in_scope(eq.body, path):
                add(Diagnostic(f"unbound index variable {t.name}", name, path))
        if unresolved:
            continue
        try:
            s = sort_of(eq.body, env, functions)
        except SortError as exc:
            add(Diagnostic(f"sort error: {exc.args[0]}", name, exc.path))
        else:
            declared = system.variables.get(name, ANY)
            if not compatible(declared, s):
                add(Diagnostic(f"body sort {_fmt(s)} does not match declared {_fmt(declared)}", name))

    for (name, t), term in system.initial.items():
        if t > 0:
            add(Diagnostic(f"initial condition {name}({t}) must be at time <= 0", name))
        if name not in defined:
            add(Diagnostic(f"initial condition for undeclared variable {name}", name))
        if any(isinstance(n, Var) for _, n in _positions(term)):
            add(Diagnostic(f"initial condition {name}({t}) must not reference variables", name))

    for name, eq in system.equations.items():
        for ref, off in eq.delays:
            if ref not in defined or off == 0:
                continue
            for k in range(1, off + 1):
                if (ref, 1 - k) not in system.initial:
                    add(Diagnostic(f"missing initial condition {ref}({1 - k}) needed by delay {off}", name))
    # deduplicate while keeping order
    seen, out = set(), []
    for d in diags:
        if d not in seen:
            seen.add(d)
            out.append(d)
    return out


def _positions(t: Term, path: tuple = ()):
    yield path, t
    for i, c in enumerate(t.children):
        yield from _positions(c, path + (i,))


def _bound_in_scope(body: Term, path: tuple) -> bool:
    name = _at(body, path).name
    node = body
    for i in path:
        if isinstance(node, ForAll) and node.var == name and i == 2:
            return True
        node = node.children[i]
    return False


def _at(t: Term, path: tuple) -> Term:
    for i in path:
        t = t.children[i]
    return t
