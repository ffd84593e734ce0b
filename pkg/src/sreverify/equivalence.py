"""Computational equivalence of a specification and an implementation.

For every scenario both systems are simulated in mixed mode from the same
symbolic inputs, the specification for ``k_spec`` cycles and the
implementation for ``k_imp`` cycles. The implementation's final state is
rewritten with the abstraction rules (signal renaming, conversion
elimination) and each compared pair of variables is decided with
:func:`~sreverify.matching.equiv_terms`. Words are compared bit by bit so a
mismatch names the offending symbols, e.g. ``punct.out[2]``.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .library import DEFAULT, Registry
from .matching import EQUAL, UNKNOWN, equiv_terms
from .rewrite import Rewriter, RuleSet
from .rules import abstraction_rules
from .simulate import SimConfig, peak_memory_bytes, run, symbolic_input
from .system import SreSystem
from .terms import Term, Tuple

__all__ = [
    "EquivJob", "EquivVerdict", "SymbolOutcome", "CorrespondenceGap", "check_equivalence",
    "localize", "abstract_state", "job_from_decl", "EQUIVALENT", "NOT_EQUIVALENT",
]

EQUIVALENT, NOT_EQUIVALENT = "Equivalent", "NotEquivalent"


class CorrespondenceGap(Exception):
    pass


@dataclass
class EquivJob:
    """What to compare, over which scenarios, at which cycles.

    ``correspondence`` maps implementation identifiers to specification
    identifiers and feeds the abstraction rules; ``extra_rules`` are
    appended to them. ``compare_vars`` holds ``(spec_var, impl_var)`` pairs
    and defaults to the declared outputs matched through the
    correspondence. ``inputs`` lists the specification inputs driven by
    shared symbolic values (default: all of them).
    """

    spec: SreSystem
    impl: SreSystem
    k_spec: int = 1
    k_imp: int = 1
    correspondence: Mapping[str, str] = field(default_factory=dict)
    scenarios: Sequence = ()
    compare_vars: Sequence[tuple] = ()
    inputs: Sequence[str] = ()
    extra_rules: Sequence = ()
    name: str = "job"
    registry: Optional[Registry] = None

    def __post_init__(self):
        if self.k_spec < 1 or self.k_imp < 1:
            raise ValueError("k_spec and k_imp must be at least 1")
        if not self.compare_vars:
            inverse = {v: k for k, v in self.correspondence.items()}
            self.compare_vars = tuple((o, inverse.get(o, o)) for o in self.spec.outputs)

    def abstraction(self) -> RuleSet:
        return abstraction_rules(self.correspondence, extra=tuple(self.extra_rules))


@dataclass(frozen=True)
class SymbolOutcome:
    scenario: str
    spec_var: str
    impl_var: str
    index: Optional[int]
    status: str
    witness: Optional[dict] = None
    spec_value: Optional[Term] = None
    impl_value: Optional[Term] = None

    @property
    def symbol(self) -> str:
        return self.spec_var + ("" if self.index is None else f"[{self.index}]")

    def to_json(self) -> dict:
        from .matching import _jsonable

        d = {"scenario": self.scenario, "symbol": self.symbol, "impl_var": self.impl_var,
             "status": self.status}
        if self.witness is not None:
            d["witness"] = {k: _jsonable(v) for k, v in self.witness.items()}
        if self.status != EQUAL:
            d["spec_value"] = str(self.spec_value)
            d["impl_value"] = str(self.impl_value)
        return d


@dataclass
class EquivVerdict:
    overall: str
    job: str
    scenarios: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    timing_ms: dict = field(default_factory=dict)
    memory: dict = field(default_factory=dict)
    compare_order: tuple = ()
    notes: list = field(default_factory=list)

    @property
    def equivalent(self) -> bool:
        return self.overall == EQUIVALENT

    @property
    def mismatches(self) -> list:
        return [o for o in self.outcomes if o.status != EQUAL]

    @property
    def unknown(self) -> list:
        return [o for o in self.outcomes if o.status == UNKNOWN]

    def mismatch_modes(self) -> set:
        return {o.scenario for o in self.mismatches}

    def to_json(self) -> dict:
        d = {
            "overall": self.overall,
            "job": self.job,
            "scenarios": list(self.scenarios),
            "compared": len(self.outcomes),
            "mismatches": [o.to_json() for o in self.mismatches],
            "timing_ms": {k: round(v, 3) for k, v in self.timing_ms.items()},
            "memory": self.memory,
        }
        if self.unknown:
            d["caveat"] = "some symbols could only be sampled; reported as not equivalent"
        if self.notes:
            d["notes"] = list(self.notes)
        if not self.equivalent:
            d["localization"] = localize(self)
        return d


def _scenario_parts(i: int, sc) -> tuple:
    name = getattr(sc, "name", None) or f"mode_{i}"
    return name, dict(getattr(sc, "bindings", sc))


def abstract_state(state: Mapping[str, Term], rules: RuleSet, correspondence: Mapping[str, str],
                   rewriter: Rewriter = None) -> dict:
    """Rename an implementation state's variables and rewrite its values."""
    rw = rewriter or Rewriter(rules)
    out = {}
    for name, value in state.items():
        out[correspondence.get(name, name)] = rw.replace_repeated(value)
    return out


def _shared_inputs(job: EquivJob) -> tuple:
    names = tuple(job.inputs) or tuple(job.spec.inputs)
    spec_in = {n: symbolic_input(n, job.spec.inputs[n]) for n in names if n in job.spec.inputs}
    impl_in = {}
    for name in job.impl.inputs:
        spec_name = job.correspondence.get(name, name)
        if spec_name in spec_in:
            impl_in[name] = spec_in[spec_name]
    return spec_in, impl_in


def check_equivalence(job: EquivJob) -> EquivVerdict:
    """Bounded-trace equivalence of ``job.spec`` and ``job.impl``."""
    registry = job.registry or DEFAULT
    timing = {"simulate": 0.0, "abstract": 0.0, "match": 0.0}
    spec_in, impl_in = _shared_inputs(job)
    rules = job.abstraction()
    rw = Rewriter(rules)
    # conversions are representation only; dropping them on both sides keeps
    # verdicts symmetric when spec and impl swap roles
    spec_rw = Rewriter(abstraction_rules())
    scen_list = list(job.scenarios) or [{}]
    outcomes, names = [], []
    for i, sc in enumerate(scen_list):
        name, bindings = _scenario_parts(i, sc)
        names.append(name)
        mode = "mixed" if bindings else "symbolic"
        t = time.perf_counter()
        spec_tr = run(job.spec, SimConfig(job.k_spec, mode, _only(bindings, job.spec.controls),
                                          spec_in, registry=job.registry))
        impl_tr = run(job.impl, SimConfig(job.k_imp, mode, _only(bindings, job.impl.controls),
                                          impl_in, registry=job.registry))
        timing["simulate"] += (time.perf_counter() - t) * 1000
        t = time.perf_counter()
        spec_state = abstract_state(spec_tr.states[spec_tr.t0 + job.k_spec], spec_rw.rules,
                                    {}, spec_rw)
        impl_state = abstract_state(impl_tr.states[impl_tr.t0 + job.k_imp], rules,
                                    job.correspondence, rw)
        timing["abstract"] += (time.perf_counter() - t) * 1000
        t = time.perf_counter()
        for spec_var, impl_var in job.compare_vars:
            impl_key = job.correspondence.get(impl_var, impl_var)
            if spec_var not in spec_state:
                raise CorrespondenceGap(f"specification has no variable {spec_var}")
            if impl_key not in impl_state:
                raise CorrespondenceGap(f"implementation has no counterpart {impl_var} for "
                                        f"{spec_var}")
            outcomes.extend(_compare(name, spec_var, impl_var, spec_state[spec_var],
                                     impl_state[impl_key], registry))
        timing["match"] += (time.perf_counter() - t) * 1000
    overall = EQUIVALENT if all(o.status == EQUAL for o in outcomes) else NOT_EQUIVALENT
    mem = {"peak_memory_bytes": peak_memory_bytes()}
    return EquivVerdict(overall, job.name, names, outcomes, timing, mem,
                        tuple(s for s, _ in job.compare_vars), suggest_k(job))


def suggest_k(job: EquivJob) -> list:
    """Notes for compare cycles below each system's maximum delay."""
    notes = []
    for role, system, k in (("k_spec", job.spec, job.k_spec), ("k_imp", job.impl, job.k_imp)):
        if k < system.max_delay:
            notes.append(f"{role} = {k} is below the maximum delay {system.max_delay} of "
                         f"{system.name}; consider {role} >= {system.max_delay}")
    return notes


def _only(bindings: dict, declared) -> dict:
    return {k: v for k, v in bindings.items() if k in declared}


def _compare(scenario, spec_var, impl_var, a: Term, b: Term, registry) -> list:
    if isinstance(a, Tuple) and isinstance(b, Tuple) and len(a.items) == len(b.items):
        out = []
        for k, (x, y) in enumerate(zip(a.items, b.items)):
            r = equiv_terms(x, y, registry=registry, normalized=True) if x is not y else None
            if r is None:
                out.append(SymbolOutcome(scenario, spec_var, impl_var, k, EQUAL))
            else:
                out.append(SymbolOutcome(scenario, spec_var, impl_var, k, r.status, r.witness,
                                         x, y))
        return out
    if a is b:
        return [SymbolOutcome(scenario, spec_var, impl_var, None, EQUAL)]
    r = equiv_terms(a, b, registry=registry, normalized=True)
    return [SymbolOutcome(scenario, spec_var, impl_var, None, r.status, r.witness, a, b)]


# ---------------------------------------------------------------- localization

_MODE_NUM = re.compile(r"(\d+)$")


def _mode_id(name: str):
    m = _MODE_NUM.search(name)
    return int(m.group(1)) if m else name


def _block(var: str) -> str:
    return var.split(".", 1)[0]


def localize(verdict: EquivVerdict) -> dict:
    """Group mismatching symbols into ``block x modes`` suspicion sets.

    The suspect is the most upstream mismatching block of each scenario
    (compare order is pipeline order); blocks downstream of it are listed
    as propagated. When every compared block mismatches the grouping
    degenerates to ``all`` and is flagged low confidence.
    """
    bad = verdict.mismatches
    if not bad:
        return {"groups": [], "low_confidence": False}
    order = [_block(v) for v in verdict.compare_order]
    rank = {}
    for i, b in enumerate(order):
        rank.setdefault(b, i)
    by_scen: dict = {}
    for o in bad:
        by_scen.setdefault(o.scenario, set()).add(_block(o.spec_var))
    origin: dict = {}
    propagated: dict = {}
    for scen, blocks in by_scen.items():
        first = min(blocks, key=lambda b: rank.get(b, len(rank)))
        origin.setdefault(first, set()).add(scen)
        for b in blocks - {first}:
            propagated.setdefault(b, set()).add(scen)
    all_blocks = set(rank)
    low = any(blocks >= all_blocks for blocks in by_scen.values()) and len(all_blocks) > 1

    def group(block, scens, role):
        syms = sorted({o.symbol for o in bad if _block(o.spec_var) == block
                       and o.scenario in scens})
        modes = sorted((_mode_id(s) for s in scens), key=lambda m: (isinstance(m, str), m))
        return {"block": block, "modes": modes, "role": role, "symbols": syms}

    groups = [group(b, s, "origin") for b, s in origin.items()]
    groups.sort(key=lambda g: (len(g["modes"]), rank.get(g["block"], 0)))
    prop = [group(b, s, "propagated") for b, s in propagated.items()]
    prop.sort(key=lambda g: rank.get(g["block"], 0))
    if low:
        modes = sorted({m for g in groups for m in g["modes"]},
                       key=lambda m: (isinstance(m, str), m))
        return {"groups": [{"block": "all", "modes": modes, "role": "origin",
                            "symbols": sorted({o.symbol for o in bad})}],
                "low_confidence": True, "suspects": groups}
    return {"groups": groups + prop, "low_confidence": False}


# ---------------------------------------------------------------- DSL jobs


def job_from_decl(decl, systems: Mapping[str, SreSystem], scenarios: Mapping = None,
                  rulesets: Mapping = None) -> EquivJob:
    """Build an :class:`EquivJob` from a parsed ``job`` declaration."""
    scenarios = scenarios or {}
    try:
        spec, impl = systems[decl.spec], systems[decl.impl]
    except KeyError as e:
        raise CorrespondenceGap(f"job {decl.name}: unknown system {e.args[0]}") from None
    scen = []
    for s in decl.scenarios:
        if s not in scenarios:
            raise CorrespondenceGap(f"job {decl.name}: unknown scenario {s}")
        scen.append(scenarios[s])
    extra = []
    for r in decl.rules:
        if not rulesets or r not in rulesets:
            raise CorrespondenceGap(f"job {decl.name}: unknown ruleset {r}")
        extra.extend(rulesets[r].to_ruleset().rules)
    return EquivJob(spec, impl, decl.k_spec, decl.k_imp, dict(decl.correspondence), scen,
                    tuple(decl.compare), tuple(decl.inputs), tuple(extra), decl.name)



