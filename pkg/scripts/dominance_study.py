"""Monte Carlo constants of fibered disk families against the closed-form bound."""

import argparse
import math

from wellround.calculus import DiskFibers, disk_family, family_certificate, fibered_oracle, shipped_disk_family
from wellround.certifier import certify

FAMILIES = {
    "shipped (r = 1 + 0.1 sin z)": shipped_disk_family(),
    "constant r = 1": disk_family(-1.0, 1.0, DiskFibers(1.0, 0.0), C_D=16),
    "fast wobble r = 1 + 0.1 sin 5z": disk_family(-1.0, 1.0, DiskFibers(1.0, 0.1, 5.0), C_D=16),
    "drifting centre z * (0.5, 0)": disk_family(-1.0, 1.0, DiskFibers(1.0, 0.0, drift=(0.5, 0.0)), C_D=16),
    "long base [-3, 3]": disk_family(-3.0, 3.0, DiskFibers(1.0, 0.1), C_D=16),
}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--points", type=int, default=200_000)
    p.add_argument("--eps-grid", default="0.01,0.05")
    args = p.parse_args(argv)
    grid = [float(e) for e in args.eps_grid.split(",")]
    print(f"{'family':34s} {'zero_limit':>10s} {'max_slope':>10s} {'formula':>10s}  slack")
    for name, fam in FAMILIES.items():
        o = fibered_oracle(fam)
        rep = certify(o, eps_grid=grid, n_points=args.points, pert_study=False)
        bound = float(family_certificate(fam).C)
        slack = bound / rep.max_slope_C if rep.max_slope_C > 0 else math.inf
        print(f"{name:34s} {rep.zero_limit_C:10.3f} {rep.max_slope_C:10.3f} {bound:10.2f}  x{slack:.0f}")


if __name__ == "__main__":
    main()
