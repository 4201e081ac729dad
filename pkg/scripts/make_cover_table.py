"""Freeze a brute-force table of canonical forms for small covers.

The oracle here does not call canonicalize, phi or the rewrite engine.  For
every cover it lists all gauge orbits by enumeration, then finds for each
orbit the one global tuple whose naive image lands in it.  The table is used
by the CLI tests as a fixed reference.

    python3 scripts/make_cover_table.py tests/data/cover_table.json
"""

import itertools
import json
import sys

import numpy as np

from wallcross.cover import CombCyclicCover, CyclicProductSystem, Interval, UnipotentSystem, enumerate_covers

SYSTEMS = [
    ({"kind": "cyclic", "orders": [2, 3, 2]}, CyclicProductSystem([2, 3, 2])),
    ({"kind": "unipotent", "m": 3, "p": 2, "k": 3,
      "assign": [{"root": [0, 1], "slot": 0}, {"root": [0, 2], "slot": 1}, {"root": [1, 2], "slot": 2}]},
     UnipotentSystem(3, 2, 3, {(0, 1): 0, (0, 2): 1, (1, 2): 2})),
]


def overlap(I, J):
    # holes shared by consecutive linked intervals, as an interval
    k = I.k
    a = (J.first_hole - I.first_hole) % k
    return Interval(J.first_hole, I.length - a, k)


def orbits(system, ivs):
    m = len(ivs)
    comps = [list(system.elements(I)) for I in ivs]
    gauges = [list(system.elements(overlap(ivs[s], ivs[(s + 1) % m]))) for s in range(m)]
    label = {}
    for x in itertools.product(*comps):
        if x in label:
            continue
        for h in itertools.product(*gauges):
            y = tuple(system.mul(system.mul(system.inv(h[s - 1]), x[s]), h[s]) for s in range(m))
            label.setdefault(y, x)
    return label


def naive_image(system, ivs, g):
    k = ivs[0].k
    m = len(ivs)
    out = []
    for s in range(m):
        f, nxt = ivs[s].first_hole, ivs[(s + 1) % m].first_hole
        n = (nxt - f) % k
        x = system.identity()
        for j in range(n):
            x = system.mul(x, g[(f + j) % k])
        out.append(x)
    return tuple(out)


def main(path):
    rng = np.random.default_rng(7)
    rows = []
    for spec, system in SYSTEMS:
        k = system.k
        singles = [list(system.elements(Interval(i, 1, k))) for i in range(k)]
        for ivs in enumerate_covers(k, k):
            if not all(system.is_small(I) for I in ivs):
                continue
            CombCyclicCover(ivs)
            label = orbits(system, ivs)
            canon = {}
            for g in itertools.product(*singles):
                canon[label[naive_image(system, ivs, g)]] = g
            xs = sorted(label, key=repr)
            pick = rng.choice(len(xs), size=min(6, len(xs)), replace=False)
            for i in sorted(int(t) for t in pick):
                x = xs[i]
                rows.append({"system": spec, "cover": {"k": k, "intervals": [I.to_json() for I in ivs]},
                             "element": [system.encode(v) for v in x],
                             "canonical": [system.encode(v) for v in canon[label[x]]],
                             "orbits": len(canon)})
    with open(path, "w") as fh:
        json.dump({"schema_version": 1, "rows": rows}, fh, indent=1)
    print(f"{len(rows)} rows written to {path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/cover_table.json")
