"""Print the Zariski schedules behind a scenario file.

For every threefold schedule the volume integrands are listed; for every
flag the (u, v) surface schedule is recomputed from scratch, together with
its threshold curve t(u).

    python3 scripts/explore_schedule.py scenarios/beth_node.json
"""

import json
import sys

from kstab.lattice import cube
from kstab.scenario import load_file
from kstab.stability import surface_schedule


def main(path: str) -> int:
    scenarios = load_file(path)
    if not scenarios:
        print("no scenarios")
        return 0
    suite = scenarios[0].suite
    for name in suite.data.get("fujitas", {}):
        fj = suite.fujita(name)
        print(f"== threefold schedule {name} (V = {fj.V}, A = {fj.A})")
        for line, piece in zip(fj.schedule.describe(), fj.schedule.pieces):
            print(f"  {line}")
            print(f"    P^3 = {cube(fj.lattice, piece.P)}")
    for name in suite.data.get("flags", {}):
        flag = suite.flag(name)
        sched = surface_schedule(flag)
        print(f"== surface schedule {name}")
        for region in sched.regions:
            print(f"  u in [{region.lo}, {region.hi}]:")
            for line in region.schedule.describe():
                print(f"    {line}")
        t = sched.threshold().t
        print("  t(u): " + json.dumps({"breaks": [str(b) for b in t.breakpoints],
                                       "pieces": [str(p) for p in t.pieces]}))
    return 0


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print(__doc__)
        sys.exit(2)
    sys.exit(main(sys.argv[1]))
