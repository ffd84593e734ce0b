"""Symbolic, mixed and numerical simulation."""
import itertools
import json
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from sreverify.dsl import parse, parse_term as T
from sreverify.library import from_term
from sreverify.matching import normalize
from sreverify.simulate import (
    DeltaCycleLimit, ModeFailure, ModelError, SimConfig, UnboundInput, delta_order, run,
    run_multi_control, sym_sim_step,
)
from sreverify.terms import Const, Func, If, Label, Sym, Tuple, Var
from sreverify.wimax import build_model, mode_bindings, scenarios

from test_dsl import APPENDIX_A


def counter():
    return parse("system C { vars X; outputs X; init X(0) = 0; eq X(n) = X(n-1) + 1; }"
                 ).systems["C"]


def randomizer():
    return parse(APPENDIX_A).systems["RANDOMIZER"]


def test_counter_single_step():
    tr = run(counter(), SimConfig(steps=1, mode="symbolic"))
    assert tr.value("X", 1) is Const(1)
    tr2 = sym_sim_step(tr, counter(), SimConfig(mode="symbolic"))
    assert tr2.value("X", 2) is Const(2)
    assert tr.last == 1  # the input trace is untouched


def test_zero_steps_gives_initial_conditions_only():
    tr = run(counter(), SimConfig(steps=0, mode="symbolic"))
    assert set(tr.states) == {0}
    assert tr.value("X", 0) is Const(0)


def test_randomizer_with_bound_control():
    tr = run(randomizer(), SimConfig(1, "mixed", {"RAND_CTRL": Label("MODE_1")}))
    assert tr.value("RAND_OUT", 1) is Func("randFunc_01", (Sym("RAND_IN", "num"),))


def test_randomizer_with_symbolic_control_keeps_the_if_tree():
    out = run(randomizer(), SimConfig(1, "symbolic")).value("RAND_OUT", 1)
    ctrl, rin = Sym("RAND_CTRL", "label"), Sym("RAND_IN", "num")
    assert isinstance(out, If)
    leaves = [out.then, out.else_.then, out.else_.else_.then, out.else_.else_.else_]
    assert leaves == [rin, Func("randFunc_01", (rin,)), Func("randFunc_02", (rin,)),
                      Label("INVALID_DATA")]
    assert ctrl in set(__import__("sreverify").terms.walk(out))


def test_combinational_loop_raises_delta_cycle_limit():
    s = parse("system L { inputs I: bool; vars A, B; eq A(n) = not(B(n)); "
              "eq B(n) = and(A(n), I(n)); }").systems["L"]
    with pytest.raises(DeltaCycleLimit) as e:
        run(s, SimConfig(1, "numerical", input_bindings={"I": True}, delta_cycle_limit=10))
    assert set(e.value.variables) == {"A", "B"}


def test_stable_zero_delay_cycle_converges():
    s = parse("system L { inputs I: bool; vars A, B; eq A(n) = and(B(n), I(n)); "
              "eq B(n) = and(A(n), I(n)); }").systems["L"]
    tr = run(s, SimConfig(1, "numerical", input_bindings={"I": False}))
    assert tr.value("A", 1) is Const(False)
    assert [cyclic for _, cyclic in delta_order(s)] == [True]


def test_numerical_mode_requires_inputs():
    with pytest.raises(UnboundInput):
        run(randomizer(), SimConfig(1, "numerical", {"RAND_CTRL": Label("MODE_0")}))


def test_invalid_models_are_rejected():
    s = parse("system C { vars X; eq X(n) = Y(n-1); }").systems["C"]
    with pytest.raises(ModelError):
        run(s, SimConfig(1, "symbolic"))


def test_input_schedules_follow_the_list():
    s = parse("system A { inputs I: num; vars S; init S(0) = 0; "
              "eq S(n) = S(n-1) + I(n); }").systems["A"]
    tr = run(s, SimConfig(3, "numerical", input_bindings={"I": [0, 1, 2, 3]}))
    assert [from_term(tr.value("S", t)) for t in (1, 2, 3)] == [1, 3, 6]


def test_fl_mixed_mode_0_output_is_a_word_of_symbolic_expressions():
    fl = build_model("FL")
    tr = run(fl, SimConfig(1, "mixed", mode_bindings(0)))
    out = tr.value("out.data", 1)
    assert isinstance(out, Tuple) and len(out.items) == 8
    names = {s.name for item in out.items for s in __import__("sreverify").terms.walk(item)
             if isinstance(s, Sym)}
    assert names <= {f"DATA_IN_{i}" for i in range(8)} and names


def test_trace_export_is_json():
    tr = run(counter(), SimConfig(2, "symbolic"))
    doc = json.loads(json.dumps(tr.to_json()))
    assert doc["cycles"][-1]["bindings"]["X"] == "2"
    assert {"cycles", "delta_cycles", "wall_time_ms", "node_count"} <= set(doc["metadata"])


def test_multi_control_runs_one_trace_per_mode():
    fl = build_model("FL")
    traces = run_multi_control(fl, scenarios("multiple"), SimConfig(1, "mixed"))
    assert [t.scenario for t in traces] == [f"mode_{i}" for i in range(7)]
    single = run(fl, SimConfig(1, "mixed", mode_bindings(3)))
    assert traces[3].final() == single.final()


def test_multi_control_in_parallel_matches_serial():
    fl = build_model("FL")
    modes = scenarios("0,3,5")
    serial = run_multi_control(fl, modes, SimConfig(1, "mixed"))
    parallel = run_multi_control(fl, modes, SimConfig(1, "mixed"), jobs=2)
    assert [t.final() for t in serial] == [t.final() for t in parallel]


def test_multi_control_records_failures_without_aborting():
    traces = run_multi_control(randomizer(), [{"RAND_CTRL": Label("MODE_0")}, {}],
                               SimConfig(1, "mixed"))
    assert not isinstance(traces[0], ModeFailure)
    assert isinstance(traces[1], ModeFailure) and traces[1].kind == "UnboundInput"


def test_simulation_is_deterministic():
    ptl8 = build_model("PTL8")
    a = run(ptl8, SimConfig(1, "mixed", mode_bindings(2)))
    b = run(ptl8, SimConfig(1, "mixed", mode_bindings(2)))
    assert a.states == b.states


def test_equation_order_does_not_change_the_trace():
    ptl4 = build_model("PTL4")
    items = list(ptl4.equations.items())
    random.Random(3).shuffle(items)
    shuffled = replace(ptl4, equations=dict(items))
    cfg = SimConfig(8, "mixed", mode_bindings(4))
    assert run(ptl4, cfg).final() == run(shuffled, cfg).final()


def _bits(v, w=8):
    return tuple(bool((v >> i) & 1) for i in range(w))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 255), st.integers(0, 6))
def test_symbolic_trace_specializes_to_numerical_trace(v, mode):
    fl = build_model("FL")
    sym = run(fl, SimConfig(1, "mixed", mode_bindings(mode))).value("out.data", 1)
    bits = _bits(v)
    subst = {Sym(f"DATA_IN_{i}", "bool"): Const(b) for i, b in enumerate(bits)}
    folded = normalize(_subst(sym, subst))
    num = run(fl, SimConfig(1, "numerical", mode_bindings(mode), {"DATA_IN": bits}))
    assert folded is num.value("out.data", 1)


def _subst(t, m):
    if t in m:
        return m[t]
    kids = t.children
    return t.rebuild(tuple(_subst(k, m) for k in kids)) if kids else t


def test_symbolic_and_numeric_agree_exhaustively_on_small_system():
    s = parse("system M { inputs A: bool, B: bool, C: bool; vars Q, R; init Q(0) = False; "
              "eq Q(n) = IF(A(n), xor(Q(n-1), B(n)), and(C(n), Q(n-1))); "
              "eq R(n) = IF(Q(n), 1, 0) + IF(B(n), 2, 0); }").systems["M"]
    sym = run(s, SimConfig(2, "symbolic"))
    for vals in itertools.product((False, True), repeat=3):
        env = dict(zip("ABC", vals))
        num = run(s, SimConfig(2, "numerical", input_bindings=env))
        subst = {Sym(k, "bool"): Const(v) for k, v in env.items()}
        for t in (1, 2):
            for name in ("Q", "R"):
                assert normalize(_subst(sym.value(name, t), subst)) is num.value(name, t)


def test_var_offsets_before_start_use_initial_conditions():
    s = parse("system D { vars X; init X(0) = 5; init X(-1) = 7; "
              "eq X(n) = X(n-1) + X(n-2); }").systems["D"]
    tr = run(s, SimConfig(2, "symbolic"))
    assert from_term(tr.value("X", 1)) == 12 and from_term(tr.value("X", 2)) == 17
    assert Var("X", 1) is T("X(n-1)")
