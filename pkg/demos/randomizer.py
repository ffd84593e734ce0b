"""Symbolic simulation of a small mode-controlled block.

The randomizer is written as one recurrence equation with a three-way IF
on its control input. Simulating with the control bound collapses the IF;
leaving it free keeps the whole decision tree in the trace.
"""
from sreverify import parse
from sreverify.simulate import SimConfig, run
from sreverify.terms import Label

SOURCE = """
labels MODE_0, MODE_1, MODE_2, INVALID_DATA;
system RANDOMIZER {
  inputs RAND_IN: num;
  controls RAND_CTRL: label;
  vars RAND_OUT;
  outputs RAND_OUT;
  eq RAND_OUT(n) = IF(RAND_CTRL(n)=MODE_0, RAND_IN(n), IF(RAND_CTRL(n)=MODE_1,
      randFunc_01(RAND_IN(n)), IF(RAND_CTRL(n)=MODE_2, randFunc_02(RAND_IN(n)), INVALID_DATA)));
}
"""


def main():
    system = parse(SOURCE).systems["RANDOMIZER"]
    free = run(system, SimConfig(1, "symbolic"))
    print("control left symbolic:")
    print("  RAND_OUT(1) =", free.value("RAND_OUT", 1))
    for mode in ("MODE_0", "MODE_1", "MODE_2"):
        tr = run(system, SimConfig(1, "mixed", {"RAND_CTRL": Label(mode)}))
        print(f"{mode}: RAND_OUT(1) =", tr.value("RAND_OUT", 1))


if __name__ == "__main__":
    main()
