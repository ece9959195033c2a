"""Bias of sampled-mode estimates as the number of perturbation pairs grows.

For the disk the exact volumes are known, so the printout shows how far
the sampled fattening (biased low) and erosion (biased high) sit from them.
The SL2 rows have no exact reference and show the trend only.
"""

import argparse
import math

from wellround.certifier import disk, kan_box, pert_convergence
from wellround.groups import special_linear


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--points", type=int, default=20_000)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--perts", default="4,8,32,128")
    args = p.parse_args(argv)
    perts = [int(k) for k in args.perts.split(",")]
    e = args.eps
    exact = (math.pi * (1 + 2 * e) ** 2, math.pi * (1 - 2 * e) ** 2)
    print(f"disk r=1, eps={e}: exact plus {exact[0]:.4f}, exact minus {exact[1]:.4f}")
    for r in pert_convergence(disk(1.0), e, n_points=args.points, perts=perts):
        print(f"  n_pert={r['n_pert']:4d} plus {r['vol_plus']:.4f} minus {r['vol_minus']:.4f}")
    box = kan_box((-0.3, 0.3), (-0.3, 0.3), group=special_linear(2))
    print(f"SL2 KAN box t,x in [-0.3, 0.3], eps={e}: volume {box.volume:.4f}")
    for r in pert_convergence(box, e, n_points=args.points // 4, perts=perts):
        print(f"  n_pert={r['n_pert']:4d} plus {r['vol_plus']:.4f} minus {r['vol_minus']:.4f}")


if __name__ == "__main__":
    main()
