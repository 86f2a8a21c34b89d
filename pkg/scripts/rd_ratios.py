"""Norm-to-weighted-norm ratios for Gaussian elements on B_n, summarised per n."""

import argparse

import numpy as np

from hyptrace.algebra import rd_ratio_estimates
from hyptrace.groups import preset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="free2")
    ap.add_argument("--s", type=float, nargs="+", default=[0.0, 1.0, 2.0])
    ap.add_argument("--max-n", type=int, default=6)
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    est = rd_ratio_estimates(preset(args.preset), args.s, args.max_n, args.samples, seed=args.seed)
    print("s,n,R,mean,max")
    for s, e in est.items():
        for n in sorted({x[0] for x in e.samples}):
            rs = [r for m, _, r in e.samples if m == n]
            R = next(R for m, R, _ in e.samples if m == n)
            print(f"{s:g},{n},{R},{np.mean(rs):.5f},{np.max(rs):.5f}")
    for s, e in est.items():
        print(f"# s={s:g} sup={e.sup_ratio:.4f} slope={e.trend_slope:.5f}")


if __name__ == "__main__":
    main()
