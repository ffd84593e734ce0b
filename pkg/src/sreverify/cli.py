"""Command-line front end: validate, simulate, equiv, check and bench.

Every run prints exactly one JSON report (to ``--out`` or standard output)
and exits with 0 (success, holds, equivalent), 1 (negative verdict), 2
(usage or input error) or 3 (an internal limit was hit: NonTermination or
DeltaCycleLimit). Diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import gc
import json
import os
import random
import statistics
import sys
import time
from typing import Optional

from . import __version__
from .dsl import DslError, SourceUnit, load, parse
from .equivalence import CorrespondenceGap, check_equivalence, job_from_decl, localize
from .properties import FAILS, HOLDS, PropertyConfigError, check_property, replay
from .rewrite import NonTermination
from .simulate import (
    DeltaCycleLimit, ModeFailure, ModelError, SimConfig, UnboundInput, peak_memory_bytes,
    run_multi_control,
)
from .system import SreSystem
from .terms import walk
from .wimax import BUGS, InapplicableBug, MODE_TABLE, build_model, completion_cycle, inject
from .wimax.models import LEVELS, data_dir

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3

# output correspondence used when a bundled pipelined model is checked
# against properties written for the functional model
DEFAULT_MAP = {"out.word": "out.data"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _resolve_path(path: str) -> str:
    """``path`` itself, else the bundled file of that name."""
    if os.path.exists(path):
        return path
    bundled = os.path.join(data_dir(), os.path.basename(path))
    if os.path.exists(bundled):
        return bundled
    raise UsageError(f"no such file: {path}")


def _load(path: str, timing: dict) -> SourceUnit:
    t = time.perf_counter()
    resolved = _resolve_path(path)
    unit = load(resolved)
    with open(resolved, "rb") as fh:
        unit.own_systems = tuple(parse(fh.read(), resolved).systems)
    timing["parse"] = timing.get("parse", 0.0) + (time.perf_counter() - t) * 1000
    return unit


def _pick_system(unit: SourceUnit, name: Optional[str]) -> SreSystem:
    if name:
        if name not in unit.systems:
            raise UsageError(f"no system {name!r}; available: {', '.join(unit.systems)}")
        return unit.systems[name]
    own = [unit.systems[n] for n in getattr(unit, "own_systems", ())]
    candidates = own or list(unit.systems.values())
    if len(candidates) != 1:
        raise UsageError("file defines several systems; choose one with --system")
    return candidates[0]


def _scenarios(unit: SourceUnit, which: Optional[str]) -> list:
    """Scenario selection: ``single``, ``multiple``, or names/indexes."""
    known = list(unit.scenarios.values())
    if not which:
        return []
    if which == "single":
        return known[:1]
    if which in ("multiple", "all"):
        return known
    out = []
    for part in which.split(","):
        part = part.strip()
        if not part:
            continue
        if part in unit.scenarios:
            out.append(unit.scenarios[part])
        elif part.isdigit() and f"mode_{part}" in unit.scenarios:
            out.append(unit.scenarios[f"mode_{part}"])
        else:
            raise UsageError(f"unknown scenario {part!r}")
    return out


def _parse_map(items) -> dict:
    out = {}
    for item in items or ():
        if "->" not in item:
            raise UsageError(f"--map expects impl->spec, got {item!r}")
        a, b = (s.strip() for s in item.split("->", 1))
        out[a] = b
    return out


def _parse_value(text: str):
    if text in ("True", "False"):
        return text == "True"
    if set(text) <= {"0", "1"} and len(text) > 1:
        return tuple(c == "1" for c in text)
    try:
        return int(text)
    except ValueError:
        return text  # a name: symbolic input


def _node_count(terms) -> int:
    seen = set()
    for t in terms:
        if t not in seen:
            seen.update(walk(t))
    return len(seen)


def _report(command: str, inputs: dict, timing: dict) -> dict:
    return {
        "tool": "sreverify",
        "version": __version__,
        "command": command,
        "inputs": inputs,
        "verdicts": [],
        "counterexamples": [],
        "timing": {k: round(timing.get(k, 0.0), 3)
                   for k in ("parse", "simulate", "abstract", "match")},
        "memory": {"node_count": 0, "peak_memory_bytes": peak_memory_bytes()},
    }


def _inject(system: SreSystem, bug: Optional[str]) -> SreSystem:
    if not bug:
        return system
    if bug not in BUGS:
        raise UsageError(f"unknown bug {bug!r}; known: {', '.join(BUGS)}")
    return inject(system, bug)


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> tuple:
    timing = {}
    unit = _load(args.path, timing)
    from .library import DEFAULT
    from .system import validate

    rep = _report("validate", {"path": args.path}, timing)
    code = EXIT_OK
    for s in unit.systems.values():
        diags = validate(s, DEFAULT.result_sorts())
        rep["verdicts"].append({"system": s.name, "valid": not diags,
                                "diagnostics": [str(d) for d in diags]})
        for d in diags:
            print(f"{args.path}: {s.name}: {d}", file=sys.stderr)
        if diags:
            code = EXIT_INPUT
    rep["declarations"] = {k: sorted(getattr(unit, k)) for k in
                           ("systems", "rulesets", "properties", "scenarios", "jobs")}
    rep["memory"]["node_count"] = _node_count(
        [e.body for s in unit.systems.values() for e in s.equations.values()])
    return rep, code


def cmd_simulate(args) -> tuple:
    timing = {}
    unit = _load(args.path, timing)
    system = _inject(_pick_system(unit, args.system), args.bug)
    scen = _scenarios(unit, args.scenario) or [{}]
    inputs = {}
    for item in args.input or ():
        if "=" not in item:
            raise UsageError(f"--input expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        inputs[k.strip()] = _parse_value(v.strip())
    cfg = SimConfig(args.steps, args.mode, input_bindings=inputs)
    t = time.perf_counter()
    traces = run_multi_control(system, scen, cfg, jobs=args.jobs)
    timing["simulate"] = (time.perf_counter() - t) * 1000
    rep = _report("simulate", {"path": args.path, "system": system.name, "mode": args.mode,
                               "steps": args.steps, "scenarios": args.scenario}, timing)
    code = EXIT_OK
    rep["traces"] = []
    terms = []
    for tr in traces:
        if isinstance(tr, ModeFailure):
            rep["verdicts"].append({"scenario": tr.scenario, "error": tr.error,
                                    "kind": tr.kind})
            print(f"{tr.scenario}: {tr.kind}: {tr.error}", file=sys.stderr)
            limit = tr.kind in ("DeltaCycleLimit", "NonTermination")
            code = max(code, EXIT_LIMIT if limit else EXIT_INPUT)
            continue
        variables = args.var or None
        rep["traces"].append(tr.to_json(variables))
        rep["verdicts"].append({"scenario": tr.scenario, "ok": True})
        terms += [v for st in tr.states.values() for v in st.values()]
    rep["memory"]["node_count"] = _node_count(terms)
    return rep, code


def _bundled_job_unit(name: str):
    base = os.path.splitext(os.path.basename(name))[0]
    unit = load(os.path.join(data_dir(), "jobs.sre"))
    if base not in unit.jobs:
        raise UsageError(f"no such file or bundled job: {name}")
    return unit, base


def cmd_equiv(args) -> tuple:
    timing = {}
    try:
        path = _resolve_path(args.jobfile)
    except UsageError:
        path = None
    if path is not None:
        unit = _load(path, timing)
        names = [args.job] if args.job else list(unit.jobs)
    else:
        t = time.perf_counter()
        unit, base = _bundled_job_unit(args.jobfile)
        timing["parse"] = (time.perf_counter() - t) * 1000
        names = [args.job or base]
    if not names:
        raise UsageError(f"{args.jobfile} declares no job")
    rep = _report("equiv", {"jobfile": args.jobfile, "jobs": names, "bug": args.bug}, timing)
    code = EXIT_OK
    nodes = 0
    for name in names:
        if name not in unit.jobs:
            raise UsageError(f"no job {name!r}")
        decl = unit.jobs[name]
        job = job_from_decl(decl, unit.systems, unit.scenarios, unit.rulesets)
        if args.scenarios:
            job.scenarios = _scenarios(unit, args.scenarios)
        job.impl = _inject(job.impl, args.bug)
        v = check_equivalence(job)
        for k in ("simulate", "abstract", "match"):
            timing[k] = timing.get(k, 0.0) + v.timing_ms.get(k, 0.0)
        cell = {"job": name, "spec": decl.spec, "impl": decl.impl, "result": v.overall,
                "scenarios": v.scenarios, "compared_symbols": len(v.outcomes)}
        if not v.equivalent:
            cell["localization"] = localize(v)
            code = EXIT_NEGATIVE
            for o in v.mismatches:
                rep["counterexamples"].append({"job": name, **o.to_json()})
        if v.unknown:
            cell["caveat"] = "some symbols were only sampled"
        if v.notes:
            cell["notes"] = list(v.notes)
        rep["verdicts"].append(cell)
        nodes += _node_count([t for o in v.mismatches for t in (o.spec_value, o.impl_value)])
    rep["timing"] = {k: round(timing.get(k, 0.0), 3)
                     for k in ("parse", "simulate", "abstract", "match")}
    rep["memory"]["node_count"] = nodes
    return rep, code


def cmd_check(args) -> tuple:
    timing = {}
    model_unit = _load(args.modelfile, timing)
    prop_unit = _load(args.propfile, timing)
    system = _pick_system(model_unit, args.system)
    level = system.name if system.name in LEVELS else None
    k = args.horizon or (completion_cycle(level) if level else None)
    if k is None:
        raise UsageError("--horizon is required for models other than the bundled levels")
    corr = _parse_map(args.map)
    if not corr and level and level != "FL":
        corr = dict(DEFAULT_MAP)
    impl = _inject(system, args.bug)
    merged = prop_unit.merge(model_unit)
    scen = _scenarios(merged, args.scenarios or "single")
    props = list(prop_unit.properties.values())
    if args.property:
        missing = set(args.property) - set(prop_unit.properties)
        if missing:
            raise UsageError(f"unknown property {', '.join(sorted(missing))}")
        props = [prop_unit.properties[p] for p in args.property]
    rep = _report("check", {"model": args.modelfile, "properties": args.propfile,
                            "system": system.name, "bug": args.bug, "horizon": k,
                            "scenarios": [s.name for s in scen]}, timing)
    code = EXIT_OK
    for p in props:
        v = check_property(impl, p, k, scenarios=scen, correspondence=corr)
        for key in ("simulate", "abstract", "match"):
            timing[key] = timing.get(key, 0.0) + v.timing_ms.get(key, 0.0)
        cell = {"property": p.name, "category": p.category, "result": v.status,
                "scenarios": v.scenarios, "instances": v.instances}
        if v.status == FAILS:
            code = EXIT_NEGATIVE
            cex = v.counterexample.to_json()
            cex["replayed"] = replay(impl, p, v.counterexample, k, scen, corr)
            rep["counterexamples"].append(cex)
        elif v.status != HOLDS:
            code = max(code, EXIT_NEGATIVE)
            cell["residual"] = str(v.residual)
        rep["verdicts"].append(cell)
    rep["timing"] = {key: round(timing.get(key, 0.0), 3)
                     for key in ("parse", "simulate", "abstract", "match")}
    return rep, code


def _parse_int_list(text: str, lo: int, hi: int) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            out += list(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    for m in out:
        if not lo <= m <= hi:
            raise UsageError(f"value {m} out of range {lo}..{hi}")
    return out


def _r_squared(xs, ys) -> Optional[float]:
    if len(xs) < 2 or len(set(xs)) < 2:
        return None
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - my) ** 2 for y in ys)
    return 1.0 if ss_tot == 0 else 1 - ss_res / ss_tot


class _NoGC:
    """Collect first, then keep the collector out of the timed region (as timeit does)."""

    def __enter__(self):
        gc.collect()
        self.was_enabled = gc.isenabled()
        gc.disable()

    def __exit__(self, *exc):
        if self.was_enabled:
            gc.enable()


def _time_symbolic(model, k, modes, jobs) -> float:
    with _NoGC():
        t = time.perf_counter()
        out = run_multi_control(model, modes, SimConfig(k, "mixed"), jobs=jobs)
        elapsed = (time.perf_counter() - t) * 1000
    bad = [r for r in out if isinstance(r, ModeFailure)]
    if bad:
        raise ModelError([f"{b.scenario}: {b.error}" for b in bad])
    return elapsed


def _time_numeric(model, k, modes, vectors) -> float:
    from .simulate import run

    with _NoGC():
        t = time.perf_counter()
        for m in modes:
            for bits in vectors:
                run(model, SimConfig(k, "numerical", m.bindings, {"DATA_IN": bits}))
        return (time.perf_counter() - t) * 1000


def cmd_bench(args) -> tuple:
    from .wimax import scenarios as mode_scenarios

    levels = [m.strip() for m in args.models.split(",") if m.strip()]
    for lv in levels:
        if lv not in LEVELS:
            raise UsageError(f"unknown model {lv!r}; expected {', '.join(LEVELS)}")
    counts = _parse_int_list(args.modes, 1, len(MODE_TABLE))
    if args.repeat < 1:
        raise UsageError("--repeat must be positive")
    rng = random.Random(args.seed)
    rep = _report("bench", {"models": levels, "modes": counts, "repeat": args.repeat,
                            "vectors": args.vectors, "width": args.width}, {})
    rows, fits = [], {}
    sim_total = 0.0
    for lv in levels:
        model = build_model(lv, args.width)
        k = completion_cycle(lv)
        vectors = [tuple(rng.random() < 0.5 for _ in range(args.width))
                   for _ in range(args.vectors)]
        sym_medians = []
        # untimed pass so first-use costs (term interning, rule caches) do not
        # land on the smallest mode count
        _time_symbolic(model, k, mode_scenarios(",".join(map(str, range(max(counts))))), 1)
        for m in counts:
            modes = mode_scenarios(",".join(str(i) for i in range(m)))
            sym = [_time_symbolic(model, k, modes, args.jobs) for _ in range(args.repeat)]
            row = {"model": lv, "modes": m, "scenario": "single" if m == 1 else "multiple",
                   "symbolic_ms": round(statistics.median(sym), 3),
                   "symbolic_runs": m}
            if vectors:
                num = [_time_numeric(model, k, modes, vectors) for _ in range(args.repeat)]
                row["numeric_ms"] = round(statistics.median(num), 3)
                row["numeric_runs"] = m * len(vectors)
            sim_total += sum(sym)
            sym_medians.append(statistics.median(sym))
            rows.append(row)
        r2 = _r_squared(counts, sym_medians)
        fits[lv] = {"r_squared": None if r2 is None else round(r2, 4)}
    rep["verdicts"] = rows
    rep["linear_fit"] = fits
    rep["timing"]["simulate"] = round(sim_total, 3)
    return rep, EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sreverify", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="report path (default: standard output)")
        return sp

    v = common(sub.add_parser("validate", help="parse and sort-check a .sre file"))
    v.add_argument("path")

    s = common(sub.add_parser("simulate", help="simulate a system"))
    s.add_argument("path")
    s.add_argument("--system")
    s.add_argument("--mode", choices=("symbolic", "numerical", "mixed"), default="mixed")
    s.add_argument("--scenario", help="single, multiple, or names/indexes like 0,3")
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--input", action="append", metavar="NAME=VALUE",
                   help="bind an input: True/False, an integer, a bit string, or a name")
    s.add_argument("--var", action="append", help="only report these variables")
    s.add_argument("--bug", help="inject a catalogued bug first")
    s.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes for independent scenarios")

    e = common(sub.add_parser("equiv", help="run equivalence jobs"))
    e.add_argument("jobfile", help="a .sre file with job declarations, or a bundled job name")
    e.add_argument("--job")
    e.add_argument("--scenarios")
    e.add_argument("--bug", help="inject a catalogued bug into the implementation")

    c = common(sub.add_parser("check", help="check properties on a model"))
    c.add_argument("modelfile")
    c.add_argument("propfile")
    c.add_argument("--system")
    c.add_argument("--scenarios", help="single (default), multiple, or names/indexes")
    c.add_argument("--property", action="append")
    c.add_argument("--horizon", type=int, help="cycles to simulate (k_imp)")
    c.add_argument("--map", action="append", metavar="IMPL->SPEC")
    c.add_argument("--bug")

    b = common(sub.add_parser("bench", help="timing over models and mode counts"))
    b.add_argument("--models", default="FL,PTL8,PTL4")
    b.add_argument("--modes", default="1,3,5,7", help="mode counts, e.g. 1,3,5,7 or 1..7")
    b.add_argument("--repeat", type=int, default=5)
    b.add_argument("--vectors", type=int, default=16,
                   help="random numeric vectors per mode for the comparison (0 disables)")
    b.add_argument("--width", type=int, default=8)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--jobs", type=int, default=1,
                   help="worker processes (default 1 keeps timings comparable)")
    return p


COMMANDS = {"validate": cmd_validate, "simulate": cmd_simulate, "equiv": cmd_equiv,
            "check": cmd_check, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        if e.code == 0:  # --help / --version
            return EXIT_OK
        rep = _report(None, {"argv": list(argv if argv is not None else sys.argv[1:])}, {})
        rep["error"] = {"kind": "usage", "message": "invalid command line"}
        rep["exit_code"] = EXIT_INPUT
        sys.stdout.write(json.dumps(rep, indent=2, default=str) + "\n")
        return EXIT_INPUT
    if getattr(args, "jobs", 1) < 1:
        args.jobs = 1
    start = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except DslError as e:
        print(str(e), file=sys.stderr)
        report, code = _error_report(args, "syntax", str(e)), EXIT_INPUT
    except (UsageError, CorrespondenceGap, PropertyConfigError, InapplicableBug,
            UnboundInput, ModelError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        report, code = _error_report(args, type(e).__name__, str(e)), EXIT_INPUT
    except (NonTermination, DeltaCycleLimit, RecursionError) as e:
        print(f"limit: {type(e).__name__}: {e}", file=sys.stderr)
        report, code = _error_report(args, type(e).__name__, str(e)), EXIT_LIMIT
    report["exit_code"] = code
    report["wall_ms"] = round((time.perf_counter() - start) * 1000, 3)
    text = json.dumps(report, indent=2, default=str) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def _error_report(args, kind: str, message: str) -> dict:
    rep = _report(args.command, {k: v for k, v in vars(args).items() if k != "command"}, {})
    rep["error"] = {"kind": kind, "message": message}
    return rep


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

