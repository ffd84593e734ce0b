"""Acceptance criteria 1-9, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured
figures, visible in ``pytest -v`` output. Run the file directly
(``python3 tests/test_acceptance.py``) to get just the nine lines.
"""
import json
import os
import random
import subprocess
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import chain  # noqa: E402
from termgen import depth_of, environments, random_term, random_unit  # noqa: E402

from sreverify.dsl import parse, serialize  # noqa: E402
from sreverify.equivalence import check_equivalence, job_from_decl, localize  # noqa: E402
from sreverify.library import _values_equal, compile_term, from_term  # noqa: E402
from sreverify.matching import NOT_EQUAL, normalize  # noqa: E402
from sreverify.properties import FAILS, HOLDS, check_property, replay  # noqa: E402
from sreverify.rewrite import NonTermination, Rewriter  # noqa: E402
from sreverify.rules import builtin_ruleset  # noqa: E402
from sreverify.simulate import SimConfig, run  # noqa: E402
from sreverify.terms import BOOL, NUM, Sym, walk  # noqa: E402
from sreverify.wimax import (  # noqa: E402
    LEVELS, build_model, bundled_files, completion_cycle, inject, load_bundled, mode_bindings,
    scenarios,
)

CORR = {"FL": {}, "PTL8": {"out.word": "out.data"}, "PTL4": {"out.word": "out.data"}}
PROPERTY_BUGS = (("P1", "B2"), ("P2", "B3"), ("P3", "B4"))
CORPUS = 1000


_CAPTURE = {}


@pytest.fixture(autouse=True)
def _capture_manager(pytestconfig):
    _CAPTURE["manager"] = pytestconfig.pluginmanager.getplugin("capturemanager")


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    manager = _CAPTURE.get("manager")
    if manager is not None:
        with manager.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)
    assert ok, line


def _soundness_corpus():
    rs = builtin_ruleset("R_Logic") + builtin_ruleset("R_IF") + builtin_ruleset("R_Math")
    return rs, [random_term(seed) for seed in range(CORPUS)]


# ---------------------------------------------------------------- 1, 2


def test_criterion_1_rewrite_soundness():
    t0 = time.perf_counter()
    rs, corpus = _soundness_corpus()
    rw = Rewriter(rs)
    violations, checked = [], 0
    for seed, t in enumerate(corpus):
        assert depth_of(t) <= 5
        syms = {n for n in walk(t) if isinstance(n, Sym)}
        assert sum(s.sort == BOOL for s in syms) <= 4 and sum(s.sort == NUM for s in syms) <= 3
        s = rw.replace_repeated(t)
        fa, fb = compile_term(t), compile_term(s)
        for env in environments(seed, points=20):
            checked += 1
            a = _safe(fa, env)
            if a is ZeroDivisionError:
                continue
            b = _safe(fb, env)
            if b is ZeroDivisionError or not _values_equal(a, b):
                violations.append(seed)
                break
    elapsed = time.perf_counter() - t0
    report(1, not violations and elapsed < 60,
           f"{len(corpus)} terms, {checked} evaluations, {len(violations)} violations, "
           f"{elapsed:.1f} s (limit 60 s)")


def _safe(f, env):
    try:
        return f(env)
    except ZeroDivisionError:
        return ZeroDivisionError


def test_criterion_2_fixpoint():
    rs, corpus = _soundness_corpus()
    rw = Rewriter(rs)
    changed, nonterm = 0, 0
    for t in corpus:
        try:
            s = rw.replace_repeated(t)
        except NonTermination:
            nonterm += 1
            continue
        if rw.replace_list(s) is not s:
            changed += 1
    report(2, changed == 0 and nonterm == 0,
           f"{len(corpus)} terms, {changed} changed by a further pass, "
           f"{nonterm} NonTermination at default limits")


# ---------------------------------------------------------------- 3


def test_criterion_3_equivalence_verdict_pattern():
    unit = load_bundled("jobs.sre")
    problems, slowest = [], 0.0
    for pair in ("fl_vs_ptl8", "ptl8_vs_ptl4"):
        for suffix in ("", "_multi"):
            for bug in (None, "B1"):
                decl = unit.jobs[pair + suffix]
                systems = dict(unit.systems)
                if bug:
                    systems[decl.impl] = inject(systems[decl.impl], bug)
                job = job_from_decl(decl, systems, unit.scenarios, unit.rulesets)
                t = time.perf_counter()
                v = check_equivalence(job)
                slowest = max(slowest, time.perf_counter() - t)
                tag = f"{pair}{suffix}{'+' + bug if bug else ''}"
                if bug is None and not v.equivalent:
                    problems.append(f"{tag}: {v.overall}")
                if bug:
                    if v.equivalent:
                        problems.append(f"{tag}: Equivalent")
                        continue
                    modes = sorted({m for g in localize(v)["groups"] if g["role"] == "origin"
                                    for m in g["modes"]})
                    want = [0] if suffix == "" else [0, 1, 2]
                    if modes != want:
                        problems.append(f"{tag}: localized modes {modes}, want {want}")
    report(3, not problems and slowest < 120,
           f"8 jobs, slowest {slowest:.2f} s (limit 120 s)"
           + (f"; problems: {problems}" if problems else "; B1 localized to modes {0,1,2}"))


# ---------------------------------------------------------------- 4, 8


def _property_matrix():
    props = load_bundled("props.sre").properties
    cells = []
    for level in LEVELS:
        model, k = build_model(level), completion_cycle(level)
        for prop, bug in PROPERTY_BUGS:
            for which in ("single", "multiple"):
                sc = scenarios(which)
                for mutant in (None, bug):
                    m = inject(model, mutant) if mutant else model
                    v = check_property(m, props[prop], k, scenarios=sc,
                                       correspondence=CORR[level])
                    cells.append((level, prop, which, mutant, m, k, sc, props[prop], v))
    return cells


_MATRIX = {}


def matrix():
    if "cells" not in _MATRIX:
        t = time.perf_counter()
        _MATRIX["cells"] = _property_matrix()
        _MATRIX["seconds"] = time.perf_counter() - t
    return _MATRIX["cells"], _MATRIX["seconds"]


def test_criterion_4_property_verdict_pattern():
    cells, seconds = matrix()
    problems = []
    for level, prop, which, bug, _, _, _, _, v in cells:
        tag = f"{level}/{prop}/{which}/{bug or 'orig'}"
        if bug is None and v.status != HOLDS:
            problems.append(f"{tag}: {v.status}")
        if bug is not None:
            c = v.counterexample
            if v.status != FAILS or c is None:
                problems.append(f"{tag}: {v.status}")
            elif c.property != prop or not c.signal:
                problems.append(f"{tag}: counterexample lacks property/signal")
    originals = sum(1 for c in cells if c[3] is None)
    report(4, not problems and seconds < 600,
           f"{originals} original cells hold, {len(cells) - originals} bug cells fail with "
           f"named signals, matrix {seconds:.1f} s (limit 600 s)"
           + (f"; problems: {problems}" if problems else ""))


def test_criterion_8_counterexample_replay():
    cells, _ = matrix()
    total, reproduced = 0, 0
    for level, prop, which, bug, m, k, sc, p, v in cells:
        if v.counterexample is None:
            continue
        total += 1
        reproduced += replay(m, p, v.counterexample, k, sc, CORR[level])
    # equivalence witnesses are counterexamples too: replay them numerically
    unit = load_bundled("jobs.sre")
    for name in ("fl_vs_ptl8_multi", "ptl8_vs_ptl4_multi"):
        decl = unit.jobs[name]
        systems = dict(unit.systems)
        systems[decl.impl] = inject(systems[decl.impl], "B1")
        job = job_from_decl(decl, systems, unit.scenarios, unit.rulesets)
        for o in check_equivalence(job).mismatches:
            if o.status != NOT_EQUAL:
                continue
            total += 1
            reproduced += _witness_reproduces(job, o)
    report(8, total > 0 and reproduced == total,
           f"{reproduced}/{total} counterexamples reproduced numerically")


def _witness_reproduces(job, o) -> bool:
    mode = int(o.scenario.rsplit("_", 1)[1])
    bits = tuple(bool(o.witness.get(f"DATA_IN_{i}", False)) for i in range(8))
    spec = run(job.spec, SimConfig(job.k_spec, "numerical", mode_bindings(mode),
                                   {"DATA_IN": bits}))
    impl = run(job.impl, SimConfig(job.k_imp, "numerical", mode_bindings(mode),
                                   {"DATA_IN": bits}))
    a = normalize(spec.value(o.spec_var, job.k_spec))
    b = normalize(impl.value(o.impl_var, job.k_imp))
    pick = (lambda t: t.items[o.index]) if o.index is not None else (lambda t: t)
    return from_term(normalize(pick(a))) != from_term(normalize(pick(_strip(b))))


def _strip(t):
    from sreverify.terms import Func

    return t.args[0] if isinstance(t, Func) and t.name == "to_int" else t


# ---------------------------------------------------------------- 5


def test_criterion_5_numerical_cross_validation():
    rng = random.Random(5)
    models = {lv: build_model(lv) for lv in LEVELS}
    mismatches = []
    for n in range(100):
        bits = tuple(rng.random() < 0.5 for _ in range(8))
        mode = rng.randrange(7)
        expected = chain(list(bits), mode)
        for lv, m in models.items():
            k = completion_cycle(lv)
            tr = run(m, SimConfig(k, "numerical", mode_bindings(mode), {"DATA_IN": bits}))
            out = normalize(_strip(tr.value("out.data" if lv == "FL" else "out.word", k)))
            got = [from_term(x) for x in out.items]
            if got != expected:
                mismatches.append((n, lv, mode))
    report(5, not mismatches,
           f"100 vectors x random modes on FL/PTL8/PTL4 vs composition oracle, "
           f"{len(mismatches)} mismatches")


# ---------------------------------------------------------------- 6


def test_criterion_6_symbolic_coverage():
    lines, ok = [], True
    for lv in LEVELS:
        m, k = build_model(lv), completion_cycle(lv)
        t = time.perf_counter()
        sym = run(m, SimConfig(k, "mixed", mode_bindings(0)))
        fns = {name: compile_term(term) for name, term in sym.states[k].items()}
        substituted = []
        for v in range(256):
            env = {f"DATA_IN_{i}": bool((v >> i) & 1) for i in range(8)}
            substituted.append({name: f(env) for name, f in fns.items()})
        t_sym = time.perf_counter() - t
        t = time.perf_counter()
        numeric = []
        for v in range(256):
            bits = tuple(bool((v >> i) & 1) for i in range(8))
            tr = run(m, SimConfig(k, "numerical", mode_bindings(0), {"DATA_IN": bits}))
            numeric.append({name: from_term(x) for name, x in tr.states[k].items()})
        t_num = time.perf_counter() - t
        same = substituted == numeric
        ok = ok and same and t_sym < t_num
        lines.append(f"{lv}: 1 vs 256 runs, {t_sym:.2f} s vs {t_num:.2f} s, "
                     f"{'identical' if same else 'DIFFERENT'}")
    report(6, ok, "; ".join(lines))


# ---------------------------------------------------------------- 7


def test_criterion_7_linear_scaling(tmp_path):
    out = tmp_path / "bench.json"
    # a fresh process, as the command would be run, so earlier tests' heap does not skew timing
    code = subprocess.run([sys.executable, "-m", "sreverify.cli", "bench", "--modes", "1,3,5,7",
                           "--vectors", "0", "--out", str(out)]).returncode
    rep = json.loads(out.read_text())
    fits = {lv: f["r_squared"] for lv, f in rep["linear_fit"].items()}
    ok = code == 0 and all(r is not None and r >= 0.9 for r in fits.values())
    report(7, ok, "symbolic time vs mode count R^2 " +
           ", ".join(f"{lv}={r}" for lv, r in fits.items()) + " (threshold 0.9)")


# ---------------------------------------------------------------- 9


def test_criterion_9_round_trip():
    bad = []
    files = bundled_files()
    for path in files:
        with open(path, encoding="utf-8") as fh:
            u = parse(fh.read(), path)
        if parse(serialize(u)) != u:
            bad.append(os.path.basename(path))
    for seed in range(500):
        u = random_unit(seed)
        if parse(serialize(u)) != u:
            bad.append(f"unit {seed}")
    report(9, not bad, f"{len(files)} bundled files and 500 random units, "
                       f"{len(bad)} failures")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
