"""Check the pentagon identity at increasing truncation orders and time each run.

    python3 scripts/pentagon_orders.py 4 8 12 16
"""

import sys

from wallcross.repro import pentagon


def main(orders):
    for N in orders or [4, 8, 12]:
        rep = pentagon(order=N, budget=float("inf"))
        print(f"N={N:<3d} {rep.results['coefficients_compared']:6d} coefficients  {rep.line()}")


if __name__ == "__main__":
    main([int(a) for a in sys.argv[1:]])
