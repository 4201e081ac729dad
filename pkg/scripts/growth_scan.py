"""Recovered growth rate of planted geometric elements c_k = r^k, over a range of r.

    python3 scripts/growth_scan.py --order 24
"""

import argparse
import math
from fractions import Fraction

from wallcross.lie import TruncationContext
from wallcross.stability import estimate_growth, planted_element


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--order", type=int, default=24)
    args = ap.parse_args()

    ctx = TruncationContext.orthant(2, args.order)
    print(f"{'r':>6} {'log r':>8} {'slope':>8} {'rel err':>8} consistent")
    for r in (Fraction(1, 4), Fraction(1, 2), Fraction(2), Fraction(3), Fraction(5)):
        g = planted_element((1, 0), (0, 1), r, ctx)
        rep = estimate_growth(g)
        err = abs(rep.slope - math.log(r)) / abs(math.log(r))
        print(f"{str(r):>6} {math.log(r):8.4f} {rep.slope:8.4f} {err:8.2%} {rep.consistent}")


if __name__ == "__main__":
    main()
