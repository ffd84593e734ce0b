"""Bug injection: pure transforms from a model to a mutated copy.

B1  puncturing at code rate 1/2 inverts coded bit 2 (modes 0, 1 and 2)
B2  the data line into the convolutional coder loses bit 3 (tied to False)
B3  one bit of the randomizer reference list is flipped
B4  the puncturing rate checker confuses rate 1/2 and rate 2/3
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from ..system import SreSystem
from ..terms import FALSE, Func, Index, Label, Logic, Term, Tuple, TupleSort

__all__ = ["Bug", "BUGS", "inject", "InapplicableBug", "B3_BIT", "B1_BIT", "B2_BIT"]

B1_BIT = 2
B2_BIT = 3
B3_BIT = 5


class InapplicableBug(Exception):
    pass


@dataclass(frozen=True)
class Bug:
    name: str
    description: str
    variable: str
    transform: Callable[[Term, SreSystem], Term]


def _map_term(t: Term, fn) -> Term:
    out = fn(t)
    if out is not None:
        return out
    kids = t.children
    if not kids:
        return t
    new = tuple(_map_term(k, fn) for k in kids)
    return t if all(a is b for a, b in zip(new, kids)) else t.rebuild(new)


def _width(system: SreSystem) -> int:
    sort = system.inputs.get("DATA_IN")
    if isinstance(sort, TupleSort):
        return sort.length
    return int(system.meta.get("width", 8))


def _b1(body: Term, system: SreSystem) -> Term:
    coded = 2 * _width(system)

    def fn(t):
        if isinstance(t, Func) and t.name == "punct_12":
            (x,) = t.args
            bits = [Index(x, k) for k in range(coded)]
            bits[B1_BIT] = Logic("not", (bits[B1_BIT],))
            return Tuple(bits)
        return None

    return _map_term(body, fn)


def _b2(body: Term, system: SreSystem) -> Term:
    w = _width(system)
    return Tuple(FALSE if k == B2_BIT else Index(body, k) for k in range(w))


def _b3(body: Term, system: SreSystem) -> Term:
    def fn(t):
        if isinstance(t, Func) and t.name == "randomize":
            x, ref = t.args
            items = list(ref.items)
            items[B3_BIT] = Logic("not", (items[B3_BIT],))
            from ..matching import normalize

            return Func("randomize", (x, normalize(Tuple(items))))
        return None

    return _map_term(body, fn)


def _b4(body: Term, system: SreSystem) -> Term:
    swap = {Label("RATE_12"): Label("RATE_23"), Label("RATE_23"): Label("RATE_12")}
    return _map_term(body, lambda t: swap.get(t) if isinstance(t, Label) else None)


BUGS = {
    "B1": Bug("B1", "puncturing inverts coded bit 2 at code rate 1/2", "punct.out", _b1),
    "B2": Bug("B2", "data line into the convolutional coder cut at bit 3", "cc.in", _b2),
    "B3": Bug("B3", "randomizer reference bit 5 flipped", "rand.out", _b3),
    "B4": Bug("B4", "puncturing condition swaps rate 1/2 and rate 2/3", "punct.out", _b4),
}


def inject(model: SreSystem, bug) -> SreSystem:
    """Mutated copy of ``model``; the original is left untouched."""
    if isinstance(bug, str):
        if bug not in BUGS:
            raise InapplicableBug(f"unknown bug {bug!r}; known: {', '.join(BUGS)}")
        bug = BUGS[bug]
    eq = model.equations.get(bug.variable)
    if eq is None:
        raise InapplicableBug(f"{bug.name} needs an equation for {bug.variable} in {model.name}")
    new_body = bug.transform(eq.body, model)
    if new_body is eq.body:
        raise InapplicableBug(f"{bug.name} found nothing to mutate in {model.name}.{bug.variable}")
    mutated = model.with_equation(bug.variable, new_body)
    meta = dict(model.meta)
    meta["bug"] = {"name": bug.name, "variable": bug.variable, "description": bug.description}
    return replace(mutated, name=f"{model.name}_{bug.name}", meta=meta)
