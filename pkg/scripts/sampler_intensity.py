"""Sampled one-point intensity against the kernel diagonal.

Usage: python scripts/sampler_intensity.py [--n 4] [--count 10000] [--t 0.6667]
"""

import argparse

import mpmath as mp
import numpy as np

from tacnode.biorthogonal import make_kernel_evaluator
from tacnode.config import EnsembleConfig
from tacnode.sampler import empirical_intensity, sample_ensemble, time_grid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--count", type=int, default=10_000)
    ap.add_argument("--grid-points", type=int, default=3)
    ap.add_argument("--t", type=float, default=2 / 3)
    ap.add_argument("--bins", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", default="exact", choices=["exact", "grid"])
    args = ap.parse_args()
    cfg = EnsembleConfig.symmetric(args.n)
    grid = time_grid(args.grid_points)
    if not np.isclose(grid, args.t).any():
        raise SystemExit(f"t={args.t} is not a grid time of {list(grid)}")
    S = sample_ensemble(cfg, grid, count=args.count, seed=args.seed, mode=args.mode)
    h = empirical_intensity(S, args.t, bins=args.bins)
    K = make_kernel_evaluator(cfg)
    nodes, weights = np.polynomial.legendre.leggauss(6)
    print(f"# acceptance rate {S.acceptance_rate:.3e}")
    print("bin_left,bin_right,sampled,kernel,z")
    for lo, hi, m, c in zip(h.edges[:-1], h.edges[1:], h.mass, h.counts):
        xs = (hi - lo) / 2 * nodes + (hi + lo) / 2
        ref = (hi - lo) / 2 * sum(w * float(mp.re(K(x, x))) for x, w in zip(xs, weights))
        se = np.sqrt(c) / h.samples
        z = (m - ref) / se if se > 0 else float("nan")
        print(f"{lo:.4f},{hi:.4f},{m:.6f},{ref:.6f},{z:.2f}")


if __name__ == "__main__":
    main()
