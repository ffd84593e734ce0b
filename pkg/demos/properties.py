"""Property matrix over the three transmitter models.

P1 (every input bit reaches the output), P2 (randomizer XOR pattern) and
P3 (puncturing follows the code rate) are checked on FL, PTL8 and PTL4 in
single and multiple control scenarios, then again with the bug that
targets each property. Counterexamples are replayed numerically.
"""
from sreverify.properties import check_property, replay
from sreverify.wimax import LEVELS, build_model, completion_cycle, inject, load_bundled, scenarios

CORR = {"FL": {}, "PTL8": {"out.word": "out.data"}, "PTL4": {"out.word": "out.data"}}
TARGETS = {"P1": "B2", "P2": "B3", "P3": "B4"}


def main():
    props = load_bundled("props.sre").properties
    print(f"{'model':<6}{'prop':<6}{'scenario':<10}{'original':<10}{'bug':<5}"
          f"{'with bug':<10}signal")
    for level in LEVELS:
        model, k = build_model(level), completion_cycle(level)
        for name, bug in TARGETS.items():
            for which in ("single", "multiple"):
                sc = scenarios(which)
                ok = check_property(model, props[name], k, scenarios=sc,
                                    correspondence=CORR[level])
                bad_model = inject(model, bug)
                bad = check_property(bad_model, props[name], k, scenarios=sc,
                                     correspondence=CORR[level])
                c = bad.counterexample
                signal = ""
                if c is not None:
                    again = replay(bad_model, props[name], c, k, sc, CORR[level])
                    signal = f"{c.signal} in {c.scenario} (replayed: {again})"
                print(f"{level:<6}{name:<6}{which:<10}{ok.status:<10}{bug:<5}"
                      f"{bad.status:<10}{signal}")


if __name__ == "__main__":
    main()
