"""Gauss circle errors and SL(2, Z) Frobenius-ball growth."""

import argparse
import math

from wellround.certifier import disk
from wellround.counting import count_integer_points, counting_report


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--circle-max", type=int, default=200)
    p.add_argument("--sl2-grid", default="10,25,50,100,200")
    p.add_argument("--csv", default=None, help="write the SL2 table as CSV")
    args = p.parse_args(argv)

    worst, at = 0.0, 0
    for T in range(1, args.circle_max + 1):
        e = abs(count_integer_points(disk(1.0), T) - math.pi * T * T) / T
        if e > worst:
            worst, at = e, T
    print(f"Gauss circle: max |N(T) - pi T^2| / T over T <= {args.circle_max} is {worst:.3f} (at T = {at})")

    rep = counting_report("sl2z_ball", [float(t) for t in args.sl2_grid.split(",")])
    print(f"{'bound':>7s} {'count':>9s} {'Haar volume':>13s} {'count/vol':>10s} {'doubling':>9s}")
    for T, c, v, r, d in zip(rep.T_grid, rep.counts, rep.reference_volumes, rep.ratios, rep.doubling_ratios):
        print(f"{T:7.1f} {c:9d} {v:13.2f} {r:10.5f} {'' if d is None else f'{d:9.4f}'}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(rep.to_csv())


if __name__ == "__main__":
    main()
