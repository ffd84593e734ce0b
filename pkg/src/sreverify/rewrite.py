"""Substitution, rule lists and repetitive substitution to a fixpoint.

Traversal is outermost-first, left to right. A single :func:`replace` pass
rewrites every outermost redex once and does not descend into the
replacement it just produced. :func:`replace_list` runs each rule of a set
in order, and :func:`replace_repeated` repeats whole passes until the term
stops changing.
"""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .patterns import holes, instantiate, match
from .terms import Term

__all__ = [
    "RewriteRule", "ProcRule", "RuleSet", "NonTermination", "Rewriter",
    "replace", "replace_list", "replace_repeated", "rule", "DEFAULT_MAX_ITERATIONS",
]

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

DEFAULT_MAX_ITERATIONS = int(os.environ.get("SRE_MAX_ITERATIONS", "10000"))


class NonTermination(Exception):
    """Raised when a rule set does not reach a fixpoint within the iteration budget."""

    def __init__(self, iterations: int, previous: Term, last: Term):
        super().__init__(f"no fixpoint after {iterations} passes")
        self.iterations = iterations
        self.previous = previous
        self.last = last


@dataclass(frozen=True, eq=False)
class RewriteRule:
    """``pattern -> replacement`` with an optional guard on the bindings."""

    pattern: Term
    replacement: Term
    guard: Optional[Callable[[dict], bool]] = None
    name: str = ""

    def __post_init__(self):
        missing = holes(self.replacement) - holes(self.pattern)
        if missing:
            raise ValueError(f"replacement uses unbound pattern variables {sorted(missing)}")

    heads = None

    def at(self, t: Term) -> Optional[Term]:
        b = match(self.pattern, t)
        if b is None or (self.guard is not None and not self.guard(b)):
            return None
        out = instantiate(self.replacement, b)
        return None if out is t else out

    def __repr__(self) -> str:
        return f"{self.pattern} => {self.replacement}"


@dataclass(frozen=True, eq=False)
class ProcRule:
    """A rule whose redex test and contractum are computed by a function.

    ``fn`` returns the rewritten term or ``None``. ``heads`` restricts the
    node classes it is tried on.
    """

    name: str
    fn: Callable[[Term], Optional[Term]]
    heads: Optional[tuple] = None

    def at(self, t: Term) -> Optional[Term]:
        out = self.fn(t)
        return None if out is t else out

    def __repr__(self) -> str:
        return f"<{self.name}>"


def rule(name: str, *heads):
    """Decorator building a :class:`ProcRule`."""

    def deco(fn):
        return ProcRule(name, fn, heads or None)

    return deco


@dataclass(frozen=True, eq=False)
class RuleSet:
    name: str
    rules: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    def __add__(self, other: "RuleSet") -> "RuleSet":
        return RuleSet(f"{self.name}+{other.name}", self.rules + other.rules)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def names(self) -> list:
        return [getattr(r, "name", "") or repr(r) for r in self.rules]


class Rewriter:
    """Memoizing driver for one rule set.

    Every operation is a pure function of its arguments, so the per-rule
    caches only change the cost, never the result.
    """

    def __init__(self, rules, max_iterations: int = None):
        if isinstance(rules, RewriteRule) or isinstance(rules, ProcRule):
            rules = RuleSet("user", (rules,))
        self.rules: RuleSet = rules
        self.max_iterations = max_iterations or DEFAULT_MAX_ITERATIONS
        self._caches = [dict() for _ in self.rules.rules]
        self._fix: dict = {}
        self.passes = 0

    def replace(self, expr: Term, index: int = 0) -> Term:
        r = self.rules.rules[index]
        cache = self._caches[index]
        heads = r.heads
        at = r.at

        def go(t: Term) -> Term:
            hit = cache.get(t)
            if hit is not None:
                return hit
            out = None
            if heads is None or isinstance(t, heads):
                out = at(t)
            if out is None:
                kids = t.children
                if kids:
                    new = tuple(go(k) for k in kids)
                    out = t if all(a is b for a, b in zip(new, kids)) else t.rebuild(new)
                else:
                    out = t
            cache[t] = out
            return out

        return go(expr)

    def replace_list(self, expr: Term) -> Term:
        for i in range(len(self.rules.rules)):
            expr = self.replace(expr, i)
        return expr

    def replace_repeated(self, expr: Term) -> Term:
        done = self._fix.get(expr)
        if done is not None:
            return done
        start = expr
        seen = [expr]
        for i in range(self.max_iterations):
            self.passes += 1
            new = self.replace_list(expr)
            if new is expr:
                for s in seen:
                    self._fix[s] = new
                return new
            expr = new
            known = self._fix.get(expr)
            if known is not None:
                for s in seen:
                    self._fix[s] = known
                return known
            seen.append(expr)
        raise NonTermination(self.max_iterations, seen[-2] if len(seen) > 1 else start, expr)

    def clear(self):
        for c in self._caches:
            c.clear()
        self._fix.clear()


def _as_ruleset(rules) -> RuleSet:
    if isinstance(rules, RuleSet):
        return rules
    if isinstance(rules, (RewriteRule, ProcRule)):
        return RuleSet("user", (rules,))
    return RuleSet("user", tuple(rules))


def replace(expr: Term, rule_: "RewriteRule | ProcRule") -> Term:
    """Rewrite every outermost occurrence of ``rule_``'s redex once."""
    return Rewriter(_as_ruleset(rule_)).replace(expr, 0)


def replace_list(expr: Term, rules: "RuleSet | Sequence") -> Term:
    """Apply each rule in order, one :func:`replace` pass each."""
    return Rewriter(_as_ruleset(rules)).replace_list(expr)


def replace_repeated(expr: Term, rules: "RuleSet | Iterable", max_iterations: int = None) -> Term:
    """Repeat :func:`replace_list` until a fixpoint; raises :class:`NonTermination`."""
    return Rewriter(_as_ruleset(rules), max_iterations).replace_repeated(expr)
