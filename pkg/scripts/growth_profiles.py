"""Ball and conjugacy-class growth for every preset, with verdicts."""

import argparse

from hyptrace.cayley import SeriesTooShort, growth_classify, sphere_sizes
from hyptrace.conjugacy import conjugacy_orbit
from hyptrace.groups import PRESETS, preset

CLASSES = {"free2": "x", "z3*z3": "a b", "z3xz3": "a b", "z3xfree2": "x", "paper-example-3": "x", "z": "x"}


def verdict(series):
    try:
        v = growth_classify(series)
    except SeriesTooShort:
        return "too short"
    return f"{v.kind} (rate {v.rate:.4f}, quality {v.fit_quality:.4f})" if v.rate else v.kind


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--radius", type=int, default=10)
    ap.add_argument("--L", type=int, default=16)
    args = ap.parse_args()
    for name in sorted(PRESETS):
        G = preset(name)
        s = sphere_sizes(G, args.radius)
        print(f"{name:16s} ball  {list(s.counts)}  {verdict(s)}")
        if name in CLASSES:
            p = conjugacy_orbit(G, G.parse(CLASSES[name]), args.L)
            print(f"{'':16s} class of {CLASSES[name]}: {list(p.counts.counts)}  [{p.exactness}]  {verdict(p.counts)}")


if __name__ == "__main__":
    main()
