"""Property checking over bounded implementation traces.

A property body is a boolean term over trace variables. It is evaluated at
the completion cycle ``T = t0 + k_imp`` of each scenario: ``X(n)`` reads the
abstracted trace at ``T`` and ``X(n-d)`` at ``T - d``. Bounded ``forall``
nodes, conjunctions and IF nodes whose condition is decided by the
scenario's controls are expanded into separate instances; every instance is
decided on its own so the first failing one becomes the counterexample.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .decls import Property, Scenario
from .library import DEFAULT, Registry, evaluate, from_term
from .matching import EQUAL, NOT_EQUAL, UNKNOWN, equiv_terms, normalize
from .rewrite import Rewriter, RuleSet
from .rules import abstraction_rules
from .simulate import SimConfig, Trace, peak_memory_bytes, run, symbolic_input
from .system import SreSystem
from .terms import (
    FALSE, TRUE, BOOL, Bound, Compare, Const, ForAll, Func, If, Index, Logic, Sym, Term,
    Tuple, Var, walk,
)

__all__ = [
    "PropertyConfigError", "Instance", "Counterexample", "PropVerdict", "check_property",
    "property_suite", "SuiteCell", "replay", "HOLDS", "FAILS", "NOT_PROVEN",
]

HOLDS, FAILS, NOT_PROVEN = "holds", "fails", "not proven"


class PropertyConfigError(Exception):
    pass


# ---------------------------------------------------------------- depends builtin


def _substitute(t: Term, mapping: Mapping[Term, Term]) -> Term:
    hit = mapping.get(t)
    if hit is not None:
        return hit
    kids = t.children
    if not kids:
        return t
    new = tuple(_substitute(k, mapping) for k in kids)
    return t if all(a is b for a, b in zip(new, kids)) else t.rebuild(new)


def _depends(args):
    """``depends(e, s)``: True iff the value of ``e`` changes with symbol ``s``."""
    if len(args) != 2 or not isinstance(args[1], Sym):
        return None
    e, s = args
    if s not in set(walk(e)):
        return FALSE
    hi, lo = _substitute(e, {s: TRUE}), _substitute(e, {s: FALSE})
    pairs = (list(zip(hi.items, lo.items)) if isinstance(hi, Tuple) and isinstance(lo, Tuple)
             and len(hi.items) == len(lo.items) else [(hi, lo)])
    unknown = False
    for a, b in pairs:
        r = equiv_terms(a, b)
        if r.status == NOT_EQUAL:
            return TRUE
        unknown |= r.status == UNKNOWN
    return None if unknown else FALSE


if "depends" not in DEFAULT:
    DEFAULT.register("depends", _depends, symbolic=True, result=BOOL, distributes=False)


# ---------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class Instance:
    """One expanded property instance: ``term`` over trace variables."""

    term: Term
    index: Optional[int] = None


@dataclass
class Counterexample:
    property: str
    scenario: str
    index: Optional[int]
    signal: str
    value: Term
    expected: Term
    instance: Term
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .matching import _jsonable

        return {
            "property": self.property, "scenario": self.scenario, "index": self.index,
            "signal": self.signal, "value": str(self.value), "expected": str(self.expected),
            "instance": str(self.instance),
            "witness": {k: _jsonable(v) for k, v in self.witness.items()},
        }


@dataclass
class PropVerdict:
    property: str
    status: str
    scenarios: dict = field(default_factory=dict)  # name -> status
    counterexample: Optional[Counterexample] = None
    residual: Optional[Term] = None
    instances: int = 0
    timing_ms: dict = field(default_factory=dict)
    memory: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    def to_json(self) -> dict:
        d = {"property": self.property, "result": self.status, "holds": self.holds,
             "scenarios": dict(self.scenarios), "instances": self.instances,
             "timing_ms": {k: round(v, 3) for k, v in self.timing_ms.items()},
             "memory": self.memory}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample.to_json()
        if self.residual is not None:
            d["residual"] = str(self.residual)
        return d


# ---------------------------------------------------------------- expansion


def _bind(t: Term, name: str, k: int) -> Term:
    return _substitute(t, {Bound(name): Const(k)})


def _int_of(t: Term, registry) -> int:
    v = normalize(t, registry)
    if not (isinstance(v, Const) and v.is_num and v.value.denominator == 1):
        raise PropertyConfigError(f"quantifier bound {t} is not a concrete integer")
    return int(v.value)


def expand(body: Term, resolve, registry: Registry = None, index=None) -> list:
    """Split ``body`` into instances; ``resolve`` maps a term to its trace value."""
    registry = registry or DEFAULT
    if isinstance(body, ForAll):
        lo = _int_of(resolve(body.lo), registry)
        hi = _int_of(resolve(body.hi), registry)
        out = []
        for k in range(lo, hi + 1):
            out += expand(_bind(body.body, body.var, k), resolve, registry, k)
        return out
    if isinstance(body, Logic) and body.op == "and":
        return [i for a in body.args for i in expand(a, resolve, registry, index)]
    if isinstance(body, If):
        c = normalize(resolve(body.cond), registry)
        if c is TRUE:
            return expand(body.then, resolve, registry, index)
        if c is FALSE:
            return expand(body.else_, resolve, registry, index)
    return [Instance(body, index)]


def _signal(inst: Term, registry) -> tuple:
    """Name and term of the first indexed (else plain) signal in ``inst``."""
    plain = None
    for node in walk(inst):
        if isinstance(node, Index) and isinstance(node.base, Var):
            i = normalize(node.index, registry)
            label = f"{node.base.name}[{i}]"
            return label, node
        if plain is None and isinstance(node, Var):
            plain = node
    if plain is not None:
        return plain.name, plain
    return "", inst


# ---------------------------------------------------------------- checking


def _scenario_parts(i: int, sc) -> tuple:
    if isinstance(sc, Scenario):
        return sc.name, dict(sc.bindings)
    if isinstance(sc, tuple) and len(sc) == 2 and isinstance(sc[0], str):
        return sc[0], dict(sc[1])
    return f"scenario_{i}", dict(sc)


def _resolver(states: Mapping[int, Mapping[str, Term]], T: int, names: set):
    cache = {}

    def resolve(t: Term) -> Term:
        hit = cache.get(t)
        if hit is not None:
            return hit
        mapping = {}
        for node in walk(t):
            if isinstance(node, Var) and node not in mapping:
                state = states.get(T - node.offset)
                if state is None or node.name not in state:
                    if node.name not in names:
                        raise PropertyConfigError(f"property variable {node.name} does not "
                                                  "resolve in the abstracted trace")
                    raise PropertyConfigError(f"{node.name}(n-{node.offset}) lies before the "
                                              "start of the trace; raise k_imp")
                mapping[node] = state[node.name]
        out = cache[t] = _substitute(t, mapping)
        return out

    return resolve


def abstracted_states(trace: Trace, rules: RuleSet, correspondence: Mapping[str, str]) -> dict:
    rw = Rewriter(rules)
    return {t: {correspondence.get(n, n): rw.replace_repeated(v) for n, v in st.items()}
            for t, st in trace.states.items()}


def _decide(prop: Property, scen: str, inst: Instance, resolve, registry) -> tuple:
    """(status, counterexample or residual)."""
    value = normalize(resolve(inst.term), registry)
    if value is TRUE:
        return HOLDS, None
    witness = {}
    if value is not FALSE:
        r = equiv_terms(value, TRUE, registry=registry, normalized=True)
        if r.status == EQUAL:
            return HOLDS, None
        if r.status == UNKNOWN:
            return NOT_PROVEN, value
        witness = dict(r.witness or {})
    name, sig = _signal(inst.term, registry)
    t = inst.term
    if isinstance(t, Compare) and t.op in ("=", "==") and sig in set(walk(t.rhs)) \
            and sig not in set(walk(t.lhs)):
        actual, expected = t.rhs, t.lhs
    elif isinstance(t, Compare):
        actual, expected = t.lhs, t.rhs
    else:
        actual, expected = t, TRUE
    actual = normalize(resolve(actual), registry)
    expected = normalize(resolve(expected), registry)
    return FAILS, Counterexample(prop.name, scen, inst.index, name, actual, expected, t, witness)


def check_property(impl: SreSystem, prop: Property, k_imp: int, abstraction: RuleSet = None,
                   scenarios: Sequence = (), correspondence: Mapping[str, str] = None,
                   inputs: Mapping[str, object] = None,
                   registry: Registry = None) -> PropVerdict:
    """Check ``prop`` on ``impl`` at cycle ``t0 + k_imp`` of every scenario.

    ``k_imp`` is the horizon and has no default: how long a property needs
    is a fact about the model. Data inputs are symbolic unless ``inputs``
    binds them. ``abstraction`` defaults to the conversion-dropping rules
    for ``correspondence``.
    """
    if k_imp is None or k_imp < 1:
        raise PropertyConfigError("k_imp (the property horizon) must be a positive integer")
    registry = registry or DEFAULT
    correspondence = dict(correspondence or {})
    rules = abstraction or abstraction_rules(correspondence)
    scen_list = list(scenarios) or [("default", {})]
    if prop.scenarios:
        scen_list = [s for i, s in enumerate(scen_list)
                     if _scenario_parts(i, s)[0] in prop.scenarios]
    timing = {"simulate": 0.0, "abstract": 0.0, "match": 0.0}
    per, cex, residual, count = {}, None, None, 0
    for i, sc in enumerate(scen_list):
        name, bindings = _scenario_parts(i, sc)
        t = time.perf_counter()
        cfg = SimConfig(k_imp, "mixed" if bindings else "symbolic",
                        {k: v for k, v in bindings.items() if k in impl.controls},
                        dict(inputs or {}), registry=registry)
        trace = run(impl, cfg)
        timing["simulate"] += (time.perf_counter() - t) * 1000
        t = time.perf_counter()
        states = abstracted_states(trace, rules, correspondence)
        timing["abstract"] += (time.perf_counter() - t) * 1000
        t = time.perf_counter()
        names = {correspondence.get(n, n) for n in
                 (*impl.variables, *impl.inputs, *impl.controls)}
        resolve = _resolver(states, trace.t0 + k_imp, names)
        status = HOLDS
        for inst in expand(prop.body, resolve, registry):
            count += 1
            s, detail = _decide(prop, name, inst, resolve, registry)
            if s == FAILS:
                status = FAILS
                cex = cex or detail
                break
            if s == NOT_PROVEN:
                status = NOT_PROVEN
                residual = residual if residual is not None else detail
        per[name] = status
        timing["match"] += (time.perf_counter() - t) * 1000
    statuses = set(per.values())
    overall = FAILS if FAILS in statuses else NOT_PROVEN if NOT_PROVEN in statuses else HOLDS
    return PropVerdict(prop.name, overall, per, cex, residual, count, timing,
                       {"peak_memory_bytes": peak_memory_bytes()})


# ---------------------------------------------------------------- replay


def _input_values(impl: SreSystem, witness: Mapping[str, object]) -> dict:
    """Concrete input words from a witness; unmentioned bits default to False."""
    out = {}
    for name, sort in impl.inputs.items():
        sym = symbolic_input(name, sort)
        if isinstance(sym, Tuple):
            out[name] = tuple(bool(witness.get(b.name, False)) for b in sym.items)
        else:
            v = witness.get(name, False if sort == BOOL else 0)
            out[name] = v
    return out


def _numeric_state(impl, k_imp, bindings, inputs, rules, correspondence, registry):
    cfg = SimConfig(k_imp, "numerical", {k: v for k, v in bindings.items()
                                         if k in impl.controls}, inputs, registry=registry)
    tr = run(impl, cfg)
    return abstracted_states(tr, rules, correspondence), tr.t0 + k_imp


def replay(impl: SreSystem, prop: Property, cex: Counterexample, k_imp: int,
           scenarios: Sequence = (), correspondence: Mapping[str, str] = None,
           abstraction: RuleSet = None, registry: Registry = None) -> bool:
    """Re-run the counterexample numerically; True iff the violation reproduces.

    ``depends(e, X(n)[i])`` is replayed by simulating twice with input bit
    ``i`` flipped and comparing ``e``.
    """
    registry = registry or DEFAULT
    correspondence = dict(correspondence or {})
    rules = abstraction or abstraction_rules(correspondence)
    bindings = {}
    for i, sc in enumerate(scenarios):
        name, b = _scenario_parts(i, sc)
        if name == cex.scenario:
            bindings = b
    inputs = _input_values(impl, cex.witness)
    states, T = _numeric_state(impl, k_imp, bindings, inputs, rules, correspondence, registry)
    names = set(states[T])
    resolve = _resolver(states, T, names)
    target = cex.instance
    dep = next((n for n in walk(target) if isinstance(n, Func) and n.name == "depends"), None)
    if dep is not None:
        e, bit = dep.args
        if not (isinstance(bit, Index) and isinstance(bit.base, Var)
                and bit.base.name in impl.inputs):
            return False
        k = _int_of(bit.index, registry)
        flipped = dict(inputs)
        word = list(flipped[bit.base.name])
        word[k] = not word[k]
        flipped[bit.base.name] = tuple(word)
        states2, _ = _numeric_state(impl, k_imp, bindings, flipped, rules, correspondence,
                                    registry)
        e1 = from_term(normalize(resolve(e), registry))
        e2 = from_term(normalize(_resolver(states2, T, names)(e), registry))
        changed = e1 != e2
        outer = _substitute(target, {dep: Const(changed)})
        return evaluate(normalize(resolve(outer), registry), {}, registry) is False
    try:
        return evaluate(normalize(resolve(target), registry), {}, registry) is False
    except Exception:
        return False


# ---------------------------------------------------------------- suites


@dataclass
class SuiteCell:
    model: str
    property: str
    scenario_set: str
    verdict: Optional[PropVerdict] = None
    error: Optional[str] = None

    def to_json(self) -> dict:
        d = {"model": self.model, "property": self.property, "scenario": self.scenario_set}
        if self.verdict is not None:
            d.update({"result": self.verdict.status,
                      "time_s": round(sum(self.verdict.timing_ms.values()) / 1000, 4),
                      "memory_bytes": self.verdict.memory.get("peak_memory_bytes")})
            if self.verdict.counterexample is not None:
                d["counterexample"] = self.verdict.counterexample.to_json()
        if self.error:
            d["result"] = "error"
            d["error"] = self.error
        return d


def _cell(args):
    model, prop, k, scen_name, scen, corr = args
    cell = SuiteCell(model.name, prop.name, scen_name)
    try:
        cell.verdict = check_property(model, prop, k, scenarios=scen, correspondence=corr)
    except Exception as e:  # a failing cell must not abort the matrix
        cell.error = f"{type(e).__name__}: {e}"
    return cell


def property_suite(models: Sequence, properties: Sequence[Property],
                   scenario_sets: Mapping[str, Sequence], jobs: int = 1) -> list:
    """Every ``model x property x scenario set`` cell, in that order.

    ``models`` holds ``(system, k_imp, correspondence)`` triples.
    """
    work = [(m, p, k, sname, list(scen), dict(corr))
            for (m, k, corr) in models for p in properties
            for sname, scen in scenario_sets.items()]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_cell, work))
    return [_cell(w) for w in work]
