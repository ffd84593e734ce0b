"""Structural matching of patterns (terms with holes) and instantiation."""
from __future__ import annotations

from typing import Iterator, Optional

from .terms import (
    COMMUTATIVE, ANY, Arith, Compare, ForAll, Func, Hole, If, Index, Logic, SeqHole,
    Term, Tuple, Wildcard,
)

__all__ = ["match", "matches", "instantiate", "holes", "is_pattern"]


def is_pattern(t: Term) -> bool:
    if isinstance(t, (Wildcard, Hole, SeqHole)):
        return True
    return any(is_pattern(c) for c in t.children)


def holes(t: Term) -> set:
    out = set()
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, (Hole, SeqHole)) and n.name:
            out.add(n.name)
        stack.extend(n.children)
    return out


def match(pattern: Term, term: Term, bindings: Optional[dict] = None) -> Optional[dict]:
    """First binding of the holes of ``pattern`` that makes it equal ``term``."""
    for b in _match(pattern, term, dict(bindings or {})):
        return b
    return None


def matches(pattern: Term, term: Term) -> Iterator[dict]:
    return _match(pattern, term, {})


def _same_head(p: Term, t: Term) -> bool:
    if type(p) is not type(t):
        return False
    if isinstance(p, (Arith, Logic, Compare)):
        return p.op == t.op
    if isinstance(p, Func):
        return p.name == t.name
    if isinstance(p, ForAll):
        return p.var == t.var
    return isinstance(p, (If, Tuple, Index))


def _commutative(p: Term) -> bool:
    return isinstance(p, (Arith, Logic)) and p.op in COMMUTATIVE


def _hole_sort_ok(hole: Hole, t: Term) -> bool:
    if hole.sort is None or hole.sort == ANY:
        return True
    from .system import SortError, compatible, sort_of

    try:
        s = sort_of(t)
    except SortError:
        return False
    return s == hole.sort or (s == ANY and compatible(s, hole.sort))


def _match(p: Term, t: Term, b: dict) -> Iterator[dict]:
    if isinstance(p, Wildcard):
        yield b
        return
    if isinstance(p, Hole):
        bound = b.get(p.name)
        if bound is not None:
            if bound is t:
                yield b
            return
        if _hole_sort_ok(p, t):
            nb = dict(b)
            nb[p.name] = t
            yield nb
        return
    if isinstance(p, SeqHole):
        yield from _bind_seq(p, (t,), b)
        return
    if not p.children:
        if p is t:
            yield b
        return
    if not _same_head(p, t):
        return
    if _commutative(p):
        yield from _match_multiset(list(p.children), list(t.children), b)
    else:
        yield from _match_seq(p.children, t.children, b)


def _bind_seq(p: SeqHole, items: tuple, b: dict) -> Iterator[dict]:
    if not p.name:
        yield b
        return
    bound = b.get(p.name)
    if bound is not None:
        if tuple(bound) == tuple(items):
            yield b
        return
    nb = dict(b)
    nb[p.name] = tuple(items)
    yield nb


def _match_seq(ps: tuple, ts: tuple, b: dict) -> Iterator[dict]:
    if len(ps) != len(ts):
        return
    if not ps:
        yield b
        return
    for nb in _match(ps[0], ts[0], b):
        yield from _match_seq(ps[1:], ts[1:], nb)


def _match_multiset(ps: list, ts: list, b: dict) -> Iterator[dict]:
    seqs = [p for p in ps if isinstance(p, SeqHole)]
    fixed = [p for p in ps if not isinstance(p, SeqHole)]
    # concrete sub-patterns first: they prune the search
    fixed.sort(key=lambda p: isinstance(p, (Hole, Wildcard)))
    if not seqs and len(fixed) != len(ts):
        return
    if len(fixed) > len(ts):
        return

    def go(i: int, remaining: list, b: dict):
        if i == len(fixed):
            if not seqs:
                if not remaining:
                    yield b
                return
            yield from _spread(seqs, remaining, b)
            return
        tried = set()
        for j, t in enumerate(remaining):
            if t in tried:
                continue
            tried.add(t)
            for nb in _match(fixed[i], t, b):
                yield from go(i + 1, remaining[:j] + remaining[j + 1:], nb)

    yield from go(0, list(ts), b)


def _spread(seqs: list, remaining: list, b: dict) -> Iterator[dict]:
    first, rest = seqs[0], seqs[1:]
    nb = b
    for s in rest:
        nb = next(_bind_seq(s, (), nb), None)
        if nb is None:
            return
    yield from _bind_seq(first, tuple(remaining), nb)


def instantiate(template: Term, bindings: dict) -> Term:
    """Replace every hole in ``template`` by its binding."""
    if isinstance(template, Hole):
        if template.name not in bindings:
            raise KeyError(f"unbound pattern variable ?{template.name}")
        return bindings[template.name]
    if isinstance(template, (Wildcard,)):
        raise ValueError("wildcard cannot appear in a replacement")
    if not template.children:
        return template
    kids = []
    for c in template.children:
        if isinstance(c, SeqHole):
            kids.extend(bindings.get(c.name, ()) if c.name else ())
        else:
            kids.append(instantiate(c, bindings))
    kids = tuple(kids)
    if kids == template.children:
        return template
    if _commutative(template) and not kids:
        from .terms import Const

        return Const(0) if template.op == "+" else Const(1) if template.op == "*" else \
            Const(template.op in ("and", "nor"))
    return template.rebuild(kids)
