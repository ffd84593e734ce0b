"""Symbolic, numerical and mixed simulation of an SRE system.

At every cycle ``t`` each equation body is instantiated with the bindings
already computed for earlier cycles (the trace rules), then simplified to a
fixpoint under ``R_Func + R_IF + R_Logic + R_Math``. Zero-delay dependencies
between variables of the same cycle are resolved in delta cycles: variables
are evaluated in topological order of those dependencies, and strongly
connected groups are re-evaluated until their bindings stop changing.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .library import DEFAULT, Registry, to_term
from .rewrite import NonTermination, Rewriter
from .rules import simulation_rules
from .system import SreSystem, validate
from .terms import ANY, BOOL, Label, Sym, Term, TupleSort, Var, is_ground, walk, word

__all__ = [
    "SimConfig", "Trace", "Simulator", "run", "run_multi_control", "sym_sim_step",
    "DeltaCycleLimit", "UnboundInput", "ModelError", "ModeFailure", "symbolic_input",
    "delta_order", "peak_memory_bytes", "DEFAULT_DELTA_LIMIT",
]

DEFAULT_DELTA_LIMIT = int(os.environ.get("SRE_DELTA_LIMIT", "100"))
MODES = ("symbolic", "numerical", "mixed")


class DeltaCycleLimit(Exception):
    """A zero-delay loop did not settle within the delta-cycle limit."""

    def __init__(self, variables, cycle: int, limit: int):
        self.variables = tuple(variables)
        self.cycle = cycle
        super().__init__(f"combinational loop through {', '.join(self.variables)} did not "
                         f"settle within {limit} delta cycles at t={cycle}")


class UnboundInput(Exception):
    pass


class ModelError(Exception):
    """The system does not validate."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(map(str, self.diagnostics)))


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``input_bindings`` values may be a term, a Python value, a string (the
    name of a fresh symbolic input, expanded to a word of symbolic bits for
    ``bits[w]`` inputs) or a list giving one value per cycle from ``t0`` on,
    the last one held afterwards.
    """

    steps: int = 1
    mode: str = "mixed"
    control_bindings: Mapping[str, object] = field(default_factory=dict)
    input_bindings: Mapping[str, object] = field(default_factory=dict)
    delta_cycle_limit: int = DEFAULT_DELTA_LIMIT
    max_iterations: Optional[int] = None
    t0: int = 0
    registry: Optional[Registry] = field(default=None, compare=False)
    validate: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.delta_cycle_limit < 1:
            raise ValueError("delta_cycle_limit must be positive")


@dataclass
class Trace:
    """Per-cycle bindings of every variable, input and control.

    ``states[t]`` maps identifiers to fully simplified terms. Cycles before
    ``t0`` hold initial conditions only.
    """

    system: str
    t0: int
    states: dict = field(default_factory=dict)
    delta_cycles: dict = field(default_factory=dict)
    mode: str = "mixed"
    scenario: Optional[str] = None
    wall_time_ms: float = 0.0
    rewrite_passes: int = 0

    @property
    def last(self) -> int:
        return max(self.states)

    @property
    def cycles(self) -> int:
        return self.last - self.t0

    def __getitem__(self, t: int) -> dict:
        return self.states[t]

    def value(self, name: str, t: Optional[int] = None) -> Term:
        t = self.last if t is None else t
        try:
            return self.states[t][name]
        except KeyError:
            raise KeyError(f"no binding for {name} at t={t}") from None

    def final(self) -> dict:
        return self.states[self.last]

    def node_count(self) -> int:
        seen = set()
        for state in self.states.values():
            for term in state.values():
                if term in seen:
                    continue
                for node in walk(term):
                    seen.add(node)
        return len(seen)

    def metadata(self) -> dict:
        meta = {
            "cycles": self.cycles,
            "delta_cycles": {str(t): n for t, n in sorted(self.delta_cycles.items())},
            "wall_time_ms": round(self.wall_time_ms, 3),
            "node_count": self.node_count(),
            "rewrite_passes": self.rewrite_passes,
        }
        peak = peak_memory_bytes()
        if peak is not None:
            meta["peak_memory_bytes"] = peak
        return meta

    def to_json(self, variables: Sequence[str] = None) -> dict:
        from .dsl import format_term

        cycles = []
        for t in sorted(self.states):
            state = self.states[t]
            names = [v for v in (variables or state) if v in state]
            cycles.append({"t": t, "bindings": {v: format_term(state[v]) for v in names}})
        return {
            "system": self.system,
            "mode": self.mode,
            "scenario": self.scenario,
            "cycles": cycles,
            "metadata": self.metadata(),
        }


def peak_memory_bytes() -> Optional[int]:
    try:
        import resource
    except ImportError:  # pragma: no cover - non-POSIX
        return None
    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # kilobytes on Linux, bytes on macOS
    return int(rss if os.uname().sysname == "Darwin" else rss * 1024)


def symbolic_input(name: str, sort) -> Term:
    """The default symbolic value of an input of the given declared sort."""
    if isinstance(sort, TupleSort):
        if sort.elem == BOOL:
            return word(name, sort.length)
        from .terms import Tuple

        return Tuple(Sym(f"{name}_{i}", sort.elem if isinstance(sort.elem, str) else ANY)
                     for i in range(sort.length))
    return Sym(name, sort if isinstance(sort, str) else ANY)


# ---------------------------------------------------------------- ordering


def delta_order(system: SreSystem) -> list:
    """Strongly connected groups of zero-delay dependencies, dependencies first.

    Deterministic: ties are broken by variable name, so the order never
    depends on how the equations were listed.
    """
    names = sorted(system.equations)
    deps = {}
    for v in names:
        deps[v] = sorted({n for n, off in system.equations[v].delays
                          if off == 0 and n in system.equations})
    index, low, on_stack, stack, out = {}, {}, set(), [], []
    counter = [0]

    def strong(v):
        # iterative Tarjan keeps deep dependency chains off the Python stack
        work = [(v, iter(deps[v]))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(deps[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                group = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    group.append(w)
                    if w == node:
                        break
                cyclic = len(group) > 1 or node in deps[node]
                out.append((tuple(sorted(group)), cyclic))

    for v in names:
        if v not in index:
            strong(v)
    return out


# ---------------------------------------------------------------- simulator


class Simulator:
    """One simulation run; owns its rewriter so repeated runs stay independent."""

    def __init__(self, system: SreSystem, config: SimConfig):
        self.system = system
        self.config = config
        self.registry = config.registry or DEFAULT
        if config.validate:
            diags = validate(system, self.registry.result_sorts())
            if diags:
                raise ModelError(diags)
        self.rewriter = Rewriter(simulation_rules(self.registry), config.max_iterations)
        self.order = delta_order(system)
        self.levels = self._levels()
        self.controls = self._bind_controls()
        self.inputs = self._bind_inputs()

    def _levels(self) -> int:
        depth = {}
        for group, _ in self.order:
            d = 0
            for v in group:
                for n, off in self.system.equations[v].delays:
                    if off == 0 and n in depth and n not in group:
                        d = max(d, depth[n])
            for v in group:
                depth[v] = d + 1
        return max(depth.values(), default=0)

    def _value(self, v) -> Term:
        return to_term(v) if not isinstance(v, Term) else v

    def _bind_controls(self) -> dict:
        out = {}
        mode = self.config.mode
        for name, sort in self.system.controls.items():
            if name in self.config.control_bindings:
                v = self._value(self.config.control_bindings[name])
                if isinstance(v, str):
                    v = symbolic_input(v, sort)
                if mode != "symbolic" and not is_ground(v):
                    raise UnboundInput(f"control {name} must be bound to a constant in {mode} mode")
                out[name] = v
            elif mode == "symbolic":
                out[name] = Sym(name, sort if isinstance(sort, str) else ANY)
            else:
                raise UnboundInput(f"control {name} is not bound ({mode} mode)")
        unknown = set(self.config.control_bindings) - set(self.system.controls)
        if unknown:
            raise UnboundInput(f"binding for undeclared control(s) {', '.join(sorted(unknown))}")
        return out

    def _bind_inputs(self) -> dict:
        out = {}
        mode = self.config.mode
        for name, sort in self.system.inputs.items():
            spec = self.config.input_bindings.get(name)
            if spec is None:
                if mode == "numerical":
                    raise UnboundInput(f"input {name} is not bound (numerical mode)")
                out[name] = [symbolic_input(name, sort)]
                continue
            values = list(spec) if isinstance(spec, list) else [spec]
            terms = []
            for v in values:
                t = symbolic_input(v, sort) if isinstance(v, str) else self._value(v)
                if mode == "numerical" and not is_ground(t):
                    raise UnboundInput(f"input {name} must be a constant in numerical mode")
                terms.append(t)
            if not terms:
                raise UnboundInput(f"empty schedule for input {name}")
            out[name] = terms
        return out

    def input_at(self, name: str, t: int) -> Term:
        seq = self.inputs[name]
        return seq[min(max(t - self.config.t0, 0), len(seq) - 1)]

    def initial_trace(self) -> Trace:
        cfg = self.config
        tr = Trace(self.system.name, cfg.t0, mode=cfg.mode)
        for (name, t), term in sorted(self.system.initial.items(), key=lambda kv: kv[0][1]):
            tr.states.setdefault(cfg.t0 + t, {})[name] = self.simplify(term)
        state = tr.states.setdefault(cfg.t0, {})
        for name in self.system.inputs:
            state[name] = self.input_at(name, cfg.t0)
        state.update(self.controls)
        return tr

    def simplify(self, term: Term) -> Term:
        return self.rewriter.replace_repeated(term)

    def _instantiate(self, body: Term, t: int, tr: Trace, current: dict) -> Term:
        memo = {}

        def sub(node: Term) -> Term:
            hit = memo.get(node)
            if hit is not None:
                return hit
            if isinstance(node, Var):
                out = self._lookup(node, t, tr, current)
            elif node.children:
                kids = node.children
                new = tuple(sub(k) for k in kids)
                out = node if all(a is b for a, b in zip(new, kids)) else node.rebuild(new)
            else:
                out = node
            memo[node] = out
            return out

        return sub(body)

    def _lookup(self, ref: Var, t: int, tr: Trace, current: dict) -> Term:
        s = t - ref.offset
        name = ref.name
        if name in self.controls:
            return self.controls[name]
        if name in self.inputs:
            return self.input_at(name, s)
        if ref.offset == 0:
            try:
                return current[name]
            except KeyError:
                raise KeyError(f"{name}(n) used before it was computed at t={t}") from None
        state = tr.states.get(s)
        if state is None or name not in state:
            raise KeyError(f"no value for {name} at t={s} (missing initial condition?)")
        return state[name]

    def step(self, tr: Trace) -> Trace:
        """Compute cycle ``tr.last + 1`` in place and return ``tr``."""
        t = tr.last + 1
        eqs = self.system.equations
        current = {name: self.input_at(name, t) for name in self.system.inputs}
        current.update(self.controls)
        deltas = self.levels
        for group, cyclic in self.order:
            if not cyclic:
                (v,) = group
                current[v] = self.simplify(self._instantiate(eqs[v].body, t, tr, current))
                continue
            prev = tr.states.get(t - 1, {})
            for v in group:
                if v not in current:
                    current[v] = prev.get(v, Label("UNDEFINED"))
            for i in range(self.config.delta_cycle_limit):
                changed = False
                for v in group:
                    new = self.simplify(self._instantiate(eqs[v].body, t, tr, current))
                    if new is not current[v]:
                        current[v] = new
                        changed = True
                if not changed:
                    deltas += i
                    break
            else:
                raise DeltaCycleLimit(group, t, self.config.delta_cycle_limit)
        tr.states[t] = current
        tr.delta_cycles[t] = deltas
        tr.rewrite_passes = self.rewriter.passes
        return tr

    def run(self) -> Trace:
        start = time.perf_counter()
        tr = self.initial_trace()
        for _ in range(self.config.steps):
            self.step(tr)
        tr.wall_time_ms = (time.perf_counter() - start) * 1000.0
        return tr


def sym_sim_step(state: Trace, system: SreSystem, config: SimConfig = None) -> Trace:
    """Return a new trace extended by one cycle; ``state`` is left untouched."""
    config = config or SimConfig(mode="symbolic")
    sim = Simulator(system, config)
    tr = Trace(state.system, state.t0, {t: dict(s) for t, s in state.states.items()},
               dict(state.delta_cycles), state.mode, state.scenario)
    return sim.step(tr)


def run(system: SreSystem, config: SimConfig = None) -> Trace:
    """Simulate ``config.steps`` cycles starting from the initial conditions."""
    return Simulator(system, config or SimConfig()).run()


@dataclass(frozen=True)
class ModeFailure:
    """A per-mode error recorded by :func:`run_multi_control`."""

    scenario: str
    error: str
    kind: str


def _scenario_name(i: int, mode) -> str:
    return getattr(mode, "name", None) or f"mode_{i}"


def _scenario_bindings(mode) -> dict:
    return dict(getattr(mode, "bindings", mode))


def _run_one(args):
    system, config, name = args
    try:
        tr = run(system, config)
        tr.scenario = name
        return tr
    except (DeltaCycleLimit, NonTermination, UnboundInput, ModelError, KeyError) as e:
        return ModeFailure(name, str(e), type(e).__name__)


def run_multi_control(system: SreSystem, modes: Sequence, config: SimConfig = None,
                      jobs: int = 1) -> list:
    """One independent run per control binding, in the order given.

    ``modes`` holds mappings or :class:`~sreverify.decls.Scenario` objects.
    Failing modes yield a :class:`ModeFailure` entry instead of aborting the
    batch. ``jobs > 1`` distributes the runs over worker processes.
    """
    config = config or SimConfig()
    tasks = []
    for i, mode in enumerate(modes):
        cfg = SimConfig(config.steps, config.mode, _scenario_bindings(mode),
                        config.input_bindings, config.delta_cycle_limit,
                        config.max_iterations, config.t0, config.registry, config.validate)
        tasks.append((system, cfg, _scenario_name(i, mode)))
    if jobs > 1 and len(tasks) > 1 and config.registry is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]

