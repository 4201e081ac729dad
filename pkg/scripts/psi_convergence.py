"""Depth-by-depth size of the Psi series for the Airy Stokes data, against the tail bounds.

    python3 scripts/psi_convergence.py --depth 5 --radius 1.0
"""

import argparse

from wallcross.repro import airy_stokes
from wallcross.resurgence import psi_series


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--depth", type=int, default=5)
    ap.add_argument("--radius", type=float, default=1.0)
    args = ap.parse_args()

    sd = airy_stokes()
    for t in (0.05j, 0.2 + 0.1j, -0.3 + 0.2j):
        r = psi_series(sd, t, args.radius, args.depth)
        print(f"t = {t}")
        for s, (size, bound) in enumerate(zip(r.terms, r.bounds), start=1):
            print(f"  depth {s}: {size:.3e}  bound {bound:.3e}")
        print(f"  tail bound {r.tail_bound:.3e}, quadrature error {r.quad_error:.1e}")


if __name__ == "__main__":
    main()
