"""Plain declaration records shared by the DSL, the checkers and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .terms import Term

__all__ = ["Property", "Scenario", "RulesetDecl", "JobDecl", "CATEGORIES"]

CATEGORIES = ("Global", "Local", "Control")


@dataclass(frozen=True)
class Property:
    """A bounded-horizon assertion over trace variables.

    ``body`` is a boolean term; ``forall`` nodes quantify over symbol
    indexes. ``scope`` names the signals or blocks the property is about and
    ``scenarios`` restricts it to named scenarios (empty means all).
    """

    name: str
    category: str
    body: Term
    scope: tuple = ()
    scenarios: tuple = ()
    span: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown property category {self.category!r}")


@dataclass(frozen=True)
class Scenario:
    """A named control binding (a mode of operation)."""

    name: str
    bindings: Mapping[str, Term]
    span: Optional[tuple] = field(default=None, compare=False)


@dataclass(frozen=True)
class RulesetDecl:
    name: str
    rules: tuple = ()  # (pattern, replacement) pairs
    span: Optional[tuple] = field(default=None, compare=False)

    def to_ruleset(self):
        from .rewrite import RewriteRule, RuleSet

        return RuleSet(self.name, tuple(RewriteRule(p, r, name=f"{self.name}#{i}")
                                        for i, (p, r) in enumerate(self.rules)))


@dataclass(frozen=True)
class JobDecl:
    """An equivalence job as written in a DSL file.

    ``correspondence`` maps implementation identifiers to specification
    identifiers; ``compare`` lists ``(spec_var, impl_var)`` pairs.
    """

    name: str
    spec: str
    impl: str
    spec_path: Optional[str] = None
    impl_path: Optional[str] = None
    k_spec: int = 1
    k_imp: int = 1
    correspondence: Mapping[str, str] = field(default_factory=dict)
    scenarios: tuple = ()
    compare: tuple = ()
    inputs: tuple = ()
    rules: tuple = ()
    span: Optional[tuple] = field(default=None, compare=False)
