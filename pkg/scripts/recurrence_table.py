"""Finite-n recurrence products against the Painleve II prediction.

Usage: python scripts/recurrence_table.py [--n 10,20,40] [--L1 0] > table.csv
"""

import argparse
import csv
import sys

import mpmath as mp

from tacnode._mp import PrecisionError
from tacnode.biorthogonal import recurrence_products, solve_y_rows
from tacnode.config import ScalingFamily, scaled_config
from tacnode.painleve import default_solution, recurrence_prediction


def y1(cfg, bits):
    while True:
        try:
            return solve_y_rows(cfg, bits, "hermite")
        except PrecisionError as e:
            bits = max(e.suggested_bits or 2 * bits, bits + 64)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", default="10,20,40")
    ap.add_argument("--L1", default="0")
    ap.add_argument("--bits", type=int, default=256)
    args = ap.parse_args()
    fam = ScalingFamily.symmetric(L1=args.L1)
    sol = default_solution()
    w = csv.writer(sys.stdout)
    w.writerow(["n", "c12", "c12_pred", "ratio12", "c14", "c14_pred", "ratio14"])
    for n in map(int, args.n.split(",")):
        c12, c14 = recurrence_products(y1(scaled_config(fam, n), args.bits))
        p12, p14 = recurrence_prediction(fam, sol, n)
        w.writerow([n] + [mp.nstr(v, 10) for v in (c12, p12, c12 / p12, c14, p14, c14 / p14)])


if __name__ == "__main__":
    main()
