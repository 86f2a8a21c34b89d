"""Vanishing-certificate bounds (1+l)^s / sqrt(n_l) for a class, over several s."""

import argparse

from hyptrace.groups import preset
from hyptrace.traces import vanishing_certificate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="free2")
    ap.add_argument("--element", default="x")
    ap.add_argument("--L", type=int, default=21)
    ap.add_argument("--s", type=float, nargs="+", default=[0.0, 1.0, 2.0])
    args = ap.parse_args()
    G = preset(args.preset)
    certs = [vanishing_certificate(G, G.parse(args.element), s, args.L) for s in args.s]
    print("l,n_l," + ",".join(f"bound_s{s:g}" for s in args.s))
    for i, (l, n, _) in enumerate(certs[0].rows):
        print(f"{l},{n}," + ",".join(f"{c.rows[i][2]:.6g}" for c in certs))
    for c in certs:
        print(f"# s={c.s:g} decreasing_tail={c.decreasing_tail} final={c.final_bound:.4g}")


if __name__ == "__main__":
    main()
