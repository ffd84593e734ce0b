"""The three transmitter models, the mode table, properties and jobs.

Every model is generated as DSL text and parsed, so the bundled ``.sre``
files and :func:`build_model` describe exactly the same systems.

FL
    all eight blocks composed combinationally; results available after one
    cycle.
PTL8
    the same blocks as processes with a bypass FIFO of depth 4 between each
    pair. A block holds its previous output while its input FIFO stalls.
PTL4
    four units of two blocks each, driven by a round-robin scheduler that
    alternates between the first and the second block of every unit. Blocks
    of one unit talk through registers, units through FIFOs. A word needs
    eight cycles to cross the chain.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

from ..decls import Scenario
from ..dsl import SourceUnit, load, parse
from ..system import SreSystem
from ..terms import Const, Label
from .blocks import PUNCTURE_KEEP, reference_bits

__all__ = [
    "BLOCKS", "UNITS", "LEVELS", "WIDTHS", "MODE_TABLE", "Mode", "FIFO_DEPTH",
    "build_model", "model_text", "prelude_text", "fifo_text", "properties_text",
    "jobs_text", "completion_cycle", "scenarios", "data_dir", "bundled_files",
    "load_bundled", "mode_bindings", "write_bundled",
]

BLOCKS = ("inp", "rand", "cc", "punct", "intl", "rep", "map", "out")
UNITS = (("inp", "rand"), ("cc", "punct"), ("intl", "rep"), ("map", "out"))
LEVELS = ("FL", "PTL8", "PTL4")
WIDTHS = (8, 16, 32)
FIFO_DEPTH = 4
RATES = {"1/2": "RATE_12", "2/3": "RATE_23", "3/4": "RATE_34"}
MODULATIONS = {"BPSK": 1, "QPSK": 2, "QAM16": 4, "QAM64": 6}
LABELS = ("RATE_12", "RATE_23", "RATE_34", "BPSK", "QPSK", "QAM16", "QAM64",
          "INVALID_DATA", "EMPTY")


@dataclass(frozen=True)
class Mode:
    name: str
    rate: str
    modulation: str
    repetition: int

    def bindings(self) -> dict:
        return {
            "CODE_RATE": Label(RATES[self.rate]),
            "MODULATION": Label(self.modulation),
            "REPETITION": Const(self.repetition),
        }


# The seven mandatory (modulation, code rate) pairs, ordered so that the
# rate 1/2 modes come first. Repetition 2 on mode_1 exercises that block.
MODE_TABLE = (
    Mode("mode_0", "1/2", "QPSK", 1),
    Mode("mode_1", "1/2", "BPSK", 2),
    Mode("mode_2", "1/2", "QAM16", 1),
    Mode("mode_3", "3/4", "QPSK", 1),
    Mode("mode_4", "3/4", "QAM16", 1),
    Mode("mode_5", "2/3", "QAM64", 1),
    Mode("mode_6", "3/4", "QAM64", 1),
)


def mode_bindings(index: int) -> dict:
    return MODE_TABLE[index].bindings()


def scenarios(which: str = "multiple") -> list:
    """``single`` (mode_0 only), ``multiple`` (all seven) or a list like ``0,3,5``."""
    if which == "single":
        modes = MODE_TABLE[:1]
    elif which == "multiple":
        modes = MODE_TABLE
    else:
        modes = [MODE_TABLE[int(i)] for i in str(which).split(",") if i.strip()]
    return [Scenario(m.name, m.bindings()) for m in modes]


def completion_cycle(level: str) -> int:
    """Cycle at which the model's outputs reflect the current input word."""
    return {"FL": 1, "PTL8": 1, "PTL4": 8}[level]


# ---------------------------------------------------------------- text pieces


def _tuple(bits) -> str:
    return "[" + ",".join("True" if b else "False" for b in bits) + "]"


def block_body(block: str, x: str, width: int) -> str:
    """The function a block applies to its input word ``x``."""
    if block in ("inp", "out"):
        return x
    if block == "rand":
        return f"randomize({x}, {_tuple(reference_bits(width))})"
    if block == "cc":
        return f"conv_encode({x})"
    if block == "punct":
        return (f"IF(CODE_RATE(n) = RATE_12, punct_12({x}), "
                f"IF(CODE_RATE(n) = RATE_23, punct_23({x}), "
                f"IF(CODE_RATE(n) = RATE_34, punct_34({x}), INVALID_DATA)))")
    if block == "intl":
        return f"interleave({x})"
    if block == "rep":
        return f"repeat({x}, REPETITION(n))"
    if block == "map":
        body = "INVALID_DATA"
        for mod, b in reversed(list(MODULATIONS.items())):
            body = f"IF(MODULATION(n) = {mod}, map_bits({x}, {b}), {body})"
        return body
    raise KeyError(block)


def _header(name: str, width: int, variables: list, output: str) -> list:
    return [
        f"system {name} {{",
        f"  inputs DATA_IN: bits[{width}];",
        "  controls CODE_RATE: label, MODULATION: label, REPETITION: num;",
        "  vars " + ", ".join(variables) + ";",
        f"  outputs {output};",
    ]


def fifo_equations(f: str, din: str, push: str, pop: str, depth: int = FIFO_DEPTH):
    """Variables, initial conditions and equations of a bypass FIFO named ``f``.

    ``dout`` shows the head of the queue, or ``din`` itself when the queue
    is empty (bypass). ``stall`` is raised when the consumer pops while
    nothing is available.
    """
    names = [f"{f}.{s}" for s in ("din", "push", "pop", "valid", "take", "acc", "stall",
                                 "dout", "cnt")] + [f"{f}.s{k}" for k in range(depth)]
    init = [f"  init {f}.cnt(0) = 0;"] + [f"  init {f}.s{k}(0) = EMPTY;" for k in range(depth)]

    def app(k):
        if k >= depth:
            return f"{f}.din(n)"
        return f"IF({f}.cnt(n-1) > {k}, {f}.s{k}(n-1), {f}.din(n))"

    eqs = [
        f"  eq {f}.din(n) = {din};",
        f"  eq {f}.push(n) = {push};",
        f"  eq {f}.pop(n) = {pop};",
        f"  eq {f}.valid(n) = or({f}.push(n), {f}.cnt(n-1) > 0);",
        f"  eq {f}.take(n) = and({f}.pop(n), {f}.valid(n));",
        f"  eq {f}.acc(n) = and({f}.push(n), or({f}.cnt(n-1) < {depth}, {f}.take(n)));",
        f"  eq {f}.stall(n) = and({f}.pop(n), not({f}.valid(n)));",
        f"  eq {f}.dout(n) = IF({f}.cnt(n-1) = 0, {f}.din(n), {f}.s0(n-1));",
        f"  eq {f}.cnt(n) = {f}.cnt(n-1) + IF({f}.acc(n), 1, 0) - IF({f}.take(n), 1, 0);",
    ]
    for k in range(depth):
        eqs.append(f"  eq {f}.s{k}(n) = IF({f}.take(n), {app(k + 1)}, {app(k)});")
    return names, init, eqs


def _fl(width: int) -> str:
    variables = [f"{b}.{p}" for b in BLOCKS for p in ("in", "out")] + ["out.data"]
    lines = _header("FL", width, variables, "out.data")
    prev = "DATA_IN(n)"
    for b in BLOCKS:
        lines.append(f"  eq {b}.in(n) = {prev};")
        lines.append(f"  eq {b}.out(n) = {block_body(b, f'{b}.in(n)', width)};")
        prev = f"{b}.out(n)"
    lines.append("  eq out.data(n) = out.out(n);")
    lines.append("}")
    return "\n".join(lines)


def _ptl8(width: int) -> str:
    variables, inits, eqs = [], [], []
    prev_out, prev_stall = "DATA_IN(n)", None
    for i, b in enumerate(BLOCKS):
        variables += [f"{b}.in", f"{b}.out"]
        if i == 0:
            eqs.append(f"  eq {b}.in(n) = {prev_out};")
            eqs.append(f"  eq {b}.out(n) = {block_body(b, f'{b}.in(n)', width)};")
        else:
            f = f"f{i}"
            # the producer offers a word unless it is stalled itself; the
            # consumer pops whenever a word is available
            push = f"not({prev_out} = EMPTY)" if prev_stall is None else f"not({prev_stall})"
            names, finit, feqs = fifo_equations(f, prev_out, push, f"{f}.valid(n)")
            variables += names
            inits += finit
            eqs += feqs
            eqs.append(f"  eq {b}.in(n) = {f}.dout(n);")
            eqs.append(f"  eq {b}.out(n) = IF({f}.stall(n), {b}.out(n-1), "
                       f"{block_body(b, f'{b}.in(n)', width)});")
            inits.append(f"  init {b}.out(0) = EMPTY;")
            prev_stall = f"{f}.stall(n)"
        prev_out = f"{b}.out(n)"
    variables.append("out.word")
    eqs.append("  eq out.word(n) = to_int(out.out(n));")
    return "\n".join(_header("PTL8", width, variables, "out.word") + inits + eqs + ["}"])


def _ptl4(width: int) -> str:
    variables = ["sched.phase"]
    inits = ["  init sched.phase(0) = 1;"]
    eqs = ["  eq sched.phase(n) = IF(sched.phase(n-1) = 1, 0, sched.phase(n-1) + 1);"]
    for u, (first, second) in enumerate(UNITS):
        for slot, b in enumerate((first, second)):
            variables += [f"{b}.{p}" for p in ("in", "out", "run", "fire", "ok")]
            inits += [f"  init {b}.out(0) = EMPTY;", f"  init {b}.ok(0) = False;"]
            if b == "inp":
                eqs.append(f"  eq {b}.in(n) = DATA_IN(n);")
                avail = "True"
            elif slot == 1:
                eqs.append(f"  eq {b}.in(n) = {first}.out(n-1);")
                avail = f"{first}.ok(n-1)"
            else:
                f = f"f{u}"
                producer = UNITS[u - 1][1]
                names, finit, feqs = fifo_equations(
                    f, f"{producer}.out(n)", f"{producer}.fire(n)", f"{b}.run(n)")
                variables += names
                inits += finit
                eqs += feqs
                eqs.append(f"  eq {b}.in(n) = {f}.dout(n);")
                avail = f"{f}.valid(n)"
            eqs += [
                f"  eq {b}.run(n) = sched.phase(n) = {slot};",
                f"  eq {b}.fire(n) = and({b}.run(n), {avail});",
                f"  eq {b}.out(n) = IF({b}.fire(n), {block_body(b, f'{b}.in(n)', width)}, "
                f"{b}.out(n-1));",
                f"  eq {b}.ok(n) = or({b}.ok(n-1), {b}.fire(n));",
            ]
    variables.append("out.word")
    eqs.append("  eq out.word(n) = to_int(out.out(n));")
    return "\n".join(_header("PTL4", width, variables, "out.word") + inits + eqs + ["}"])


def model_text(level: str, width: int = 8) -> str:
    if level not in LEVELS:
        raise ValueError(f"unknown model level {level!r}; expected one of {LEVELS}")
    if width not in WIDTHS:
        raise ValueError(f"unsupported width {width}; expected one of {WIDTHS}")
    body = {"FL": _fl, "PTL8": _ptl8, "PTL4": _ptl4}[level](width)
    return f'import "modes.sre";\n\n{body}\n'


def prelude_text() -> str:
    lines = [f"labels {', '.join(LABELS)};", ""]
    for m in MODE_TABLE:
        lines.append(f"# code rate {m.rate}, {m.modulation}, repetition {m.repetition}")
        lines.append(f"scenario {m.name} {{")
        lines.append(f"  CODE_RATE = {RATES[m.rate]};")
        lines.append(f"  MODULATION = {m.modulation};")
        lines.append(f"  REPETITION = {m.repetition};")
        lines.append("}")
    return "\n".join(lines) + "\n"


def fifo_text(depth: int = FIFO_DEPTH) -> str:
    """A stand-alone FIFO driven by ``din``/``push``/``pop`` inputs."""
    names, init, eqs = fifo_equations("q", "din(n)", "push(n)", "pop(n)", depth)
    lines = [
        "labels EMPTY;",
        "",
        "system FIFO {",
        "  inputs din: num, push: bool, pop: bool;",
        "  vars " + ", ".join(names) + ";",
        "  outputs q.dout, q.stall, q.cnt;",
    ] + init + eqs + ["}"]
    return "\n".join(lines) + "\n"


def _p3_body(width: int) -> str:
    coded = 2 * width
    parts = {}
    for rate, label in (("12", "RATE_12"), ("23", "RATE_23"), ("34", "RATE_34")):
        period, keep = PUNCTURE_KEEP[rate]
        groups = coded // period
        conj = [f"punct.out(n)[{len(keep)}*i + {j}] = cc.out(n)[{period}*i + {k}]"
                for j, k in enumerate(keep)]
        inner = conj[0] if len(conj) == 1 else " and ".join(conj)
        parts[label] = f"forall i in 0..{groups - 1}: {inner}"
    return (f"IF(CODE_RATE(n) = RATE_12, {parts['RATE_12']}, "
            f"IF(CODE_RATE(n) = RATE_23, {parts['RATE_23']}, "
            f"IF(CODE_RATE(n) = RATE_34, {parts['RATE_34']}, False)))")


def properties_text(width: int = 8) -> str:
    ref = _tuple(reference_bits(width))
    return "\n".join([
        'import "modes.sre";',
        "",
        "# every input bit reaches the transmitted word",
        "property P1 Global scope (out.data) {",
        f"  forall i in 0..{width - 1}: depends(out.data(n), DATA_IN(n)[i])",
        "}",
        "",
        "# the randomizer XORs each bit with its reference bit",
        "property P2 Local scope (rand.in, rand.out) {",
        f"  forall i in 0..{width - 1}: rand.out(n)[i] = xor(rand.in(n)[i], {ref}[i])",
        "}",
        "",
        "# the puncturing pattern matches the selected code rate",
        "property P3 Control scope (cc.out, punct.out) {",
        f"  {_p3_body(width)}",
        "}",
        "",
    ])


COMPARE = tuple((f"{b}.out", f"{b}.out") for b in BLOCKS)


def jobs_text() -> str:
    lines = ['import "modes.sre";', 'import "fl.sre";', 'import "ptl8.sre";',
             'import "ptl4.sre";']
    pairs = (("fl_vs_ptl8", "FL", "PTL8"), ("ptl8_vs_ptl4", "PTL8", "PTL4"))
    for tag, which in (("", "single"), ("_multi", "multiple")):
        for name, spec, impl in pairs:
            lines.append("")
            lines.append(f"job {name}{tag} {{")
            lines.append(f"  spec {spec};")
            lines.append(f"  impl {impl};")
            lines.append(f"  k_spec {completion_cycle(spec)};")
            lines.append(f"  k_imp {completion_cycle(impl)};")
            if spec == "FL":
                lines.append("  map out.word -> out.data;")
            for a, b in COMPARE:
                lines.append(f"  compare {a} with {b};")
            out_spec = "out.data" if spec == "FL" else "out.word"
            lines.append(f"  compare {out_spec} with out.word;")
            lines.append("  scenarios " + ", ".join(s.name for s in scenarios(which)) + ";")
            lines.append("  inputs DATA_IN;")
            lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- building / files


def build_model(level: str, width: int = 8) -> SreSystem:
    """Parse the generated text of ``level`` at ``width`` bits."""
    unit = parse(model_text(level, width))
    system = unit.systems[level]
    meta = {"level": level, "width": width, "blocks": BLOCKS,
            "completion_cycle": completion_cycle(level)}
    return replace(system, meta=meta)


def data_dir() -> str:
    return os.path.join(os.path.dirname(__file__), "data")


BUNDLED = {
    "modes.sre": prelude_text,
    "fl.sre": lambda: model_text("FL"),
    "ptl8.sre": lambda: model_text("PTL8"),
    "ptl4.sre": lambda: model_text("PTL4"),
    "fifo.sre": fifo_text,
    "props.sre": properties_text,
    "jobs.sre": jobs_text,
}


def bundled_files() -> list:
    return [os.path.join(data_dir(), name) for name in BUNDLED]


def write_bundled(directory: str = None) -> list:
    """Regenerate the bundled ``.sre`` files (width 8)."""
    directory = directory or data_dir()
    os.makedirs(directory, exist_ok=True)
    out = []
    for name, gen in BUNDLED.items():
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(gen())
        out.append(path)
    return out


def load_bundled(name: str) -> SourceUnit:
    return load(os.path.join(data_dir(), name))
