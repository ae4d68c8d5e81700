"""Cauchy differences of the rescaled kernel on a (u, v) grid.

Usage: python scripts/tacnode_convergence.py [--n 10,20,40] [--gauge balanced]
"""

import argparse

import mpmath as mp

from tacnode.biorthogonal import TacnodeKernel
from tacnode.config import ScalingFamily


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", default="10,20,40")
    ap.add_argument("--gauge", default="balanced", choices=["balanced", "linear"])
    ap.add_argument("--L1", default="0")
    args = ap.parse_args()
    fam = ScalingFamily.symmetric(L1=args.L1)
    us = [-2, -1, 0, 1, 2]
    prev = None
    print("n,max|K_n - K_prev|,K_n(0,0)")
    for n in map(int, args.n.split(",")):
        K = TacnodeKernel(fam, n, gauge=args.gauge)
        grid = [K(u, v) for u in us for v in us]
        d = "" if prev is None else mp.nstr(max(abs(a - b) for a, b in zip(grid, prev)), 6)
        print(f"{n},{d},{mp.nstr(K(0, 0), 10)}")
        prev = grid


if __name__ == "__main__":
    main()
