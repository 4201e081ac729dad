"""Solve the two-sided gluing problem for f_+ = eps z and print the first c_n with their growth fit.

    python3 scripts/ev_gluing.py --eps 1e-3 --delta 0.5
"""

import argparse

from wallcross.resurgence import EVData, ev_formal, ev_solve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--N", type=int, default=20)
    args = ap.parse_args()

    d = EVData([args.eps], [])
    sol = ev_solve(d, args.delta)
    print(f"residual {sol.residual:.2e} after {len(sol.history)} iterations")
    F = ev_formal(d, sol, N=args.N)
    for n, c in enumerate(F.moments.coeffs[1:], start=1):
        print(f"c_{n:<2d} {complex(c):.6e}")
    g = F.growth
    print(f"Gevrey-1 fit: A = {g.A:.4f}, bounded = {g.bounded}")


if __name__ == "__main__":
    main()
