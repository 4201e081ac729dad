"""Thimble integral vs optimally truncated saddle series for x^3/3 - x.

Prints a table over |t| and arg t, then the nearest Borel singularity.

    python3 scripts/airy_experiment.py --K 30
"""

import argparse
import cmath

import numpy as np

from wallcross.resurgence import borel, saddle_expansion, thimble_integral

F = "x^3/3-x"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=30)
    ap.add_argument("--index", type=int, default=0)
    args = ap.parse_args()

    S = saddle_expansion(F, args.index, args.K)
    print(f"{'|t|':>8} {'arg':>6} {'terms':>5} {'rel gap':>10}")
    for mag in (1e-3, 3e-3, 1e-2, 3e-2, 1e-1):
        for ang in np.linspace(-2.5, 2.5, 5):
            t = mag * cmath.exp(1j * ang)
            n = S.optimal_terms(t)
            ser = S(t, n)
            mod = thimble_integral(F, args.index, t, tol=1e-12).mod
            print(f"{mag:8.0e} {ang:6.2f} {n:5d} {abs(ser - mod) / abs(mod):10.2e}")

    B = borel(S)
    near = B.nearest()
    if near is None:
        print("no stable Borel singularity found")
    else:
        print(f"nearest Borel singularity {near.location:.6f}, distance {near.distance:.6f} (expected 4/3)")


if __name__ == "__main__":
    main()
