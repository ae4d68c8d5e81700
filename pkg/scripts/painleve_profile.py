"""Hastings-McLeod profile, its Hamiltonian and the large-s1 asymptotics of d.

Usage: python scripts/painleve_profile.py [--points 41]
"""

import argparse

import numpy as np

from tacnode.painleve import airy, asymptotic_d, hamiltonian, hastings_mcleod, m1_scalars, shooting_hastings_mcleod


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=41)
    args = ap.parse_args()
    sol = hastings_mcleod()
    q0 = shooting_hastings_mcleod(0.0)[0]
    print(f"# residual {sol.residual_max:.2e}, q(0) {sol.q_at(0):.12f} (shooting {q0:.12f})")
    print("s,q,Ai,u")
    for s in np.linspace(-8, 8, args.points):
        print(f"{s:.3f},{sol.q_at(s):.10e},{airy(s)[0]:.10e},{hamiltonian(sol, s):.10e}")
    print("# s1, d, asymptotic d, relative error")
    for s1 in (2, 4, 6, 8):
        d = m1_scalars(sol, 1, 1, s1, 0).d
        a = asymptotic_d(1, 1, s1, 0)
        print(f"# {s1},{d:.6e},{a:.6e},{abs(a / d - 1):.2e}")


if __name__ == "__main__":
    main()
