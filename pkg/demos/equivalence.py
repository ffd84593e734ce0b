"""Equivalence of the functional and FIFO-pipelined transmitter models.

Runs the bundled FL-vs-PTL8 job over all seven modes, first on the
original models and then with a puncturing bug injected into the
pipelined one, and prints where the mismatch was localized.
"""
from sreverify.equivalence import check_equivalence, job_from_decl, localize
from sreverify.wimax import inject, load_bundled


def job(unit, name, bug=None):
    decl = unit.jobs[name]
    systems = dict(unit.systems)
    if bug:
        systems[decl.impl] = inject(systems[decl.impl], bug)
    return job_from_decl(decl, systems, unit.scenarios, unit.rulesets)


def main():
    unit = load_bundled("jobs.sre")
    for bug in (None, "B1"):
        v = check_equivalence(job(unit, "fl_vs_ptl8_multi", bug))
        ms = sum(v.timing_ms.values())
        print(f"{'original' if bug is None else 'with ' + bug}: {v.overall} "
              f"({len(v.outcomes)} symbols, {ms:.0f} ms)")
        if not v.equivalent:
            for g in localize(v)["groups"]:
                print(f"  {g['role']:<10} block {g['block']:<6} modes {g['modes']} "
                      f"symbols {', '.join(g['symbols'][:4])}")
            first = v.mismatches[0]
            print(f"  e.g. {first.scenario} {first.symbol}: witness {first.witness}")


if __name__ == "__main__":
    main()
