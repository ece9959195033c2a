"""Canonical forms of M and M U for random bases, by dimension.

Counts agreements, boundary-flagged cases and the largest entrywise gap.
"""

import argparse

import numpy as np

from wellround.reduction import boundary_flags, canonicalize, random_unimodular, reduce_basis


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--dims", default="2,3,4,5,6")
    p.add_argument("--seed", type=int, default=3)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'m':>2s} {'agree':>6s} {'flagged':>8s} {'max gap':>10s}")
    for m in (int(v) for v in args.dims.split(",")):
        agree = flagged = 0
        gap = 0.0
        for _ in range(args.pairs):
            b = rng.normal(size=(m, m))
            u = np.array(random_unimodular(m, rng), dtype=float)
            c1, c2 = canonicalize(reduce_basis(b)), canonicalize(reduce_basis(b @ u))
            if boundary_flags(c1) or boundary_flags(c2):
                flagged += 1
                continue
            d = float(np.max(np.abs(c1.reduced - c2.reduced)))
            gap = max(gap, d)
            agree += d <= 1e-6
        print(f"{m:2d} {agree:6d} {flagged:8d} {gap:10.2e}")


if __name__ == "__main__":
    main()
