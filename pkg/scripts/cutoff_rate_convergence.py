"""lambda_1^n for power_law(s) cutoffs against the uncut value.

Prints the table and the fitted decay exponent of the relative gap; the
small-angle expansion predicts gap ~ n^{-(1 - 2s)/(2 + 2s)}, i.e. n^{-0.2} for s = 1/4.
"""
import argparse

import numpy as np

from fourier_boltzmann import AngularKernel, lambda_limit, rate_constants


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--s", type=float, default=0.25)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--max-exp", type=int, default=8)
    args = ap.parse_args()
    base = AngularKernel.power_law(args.s)
    lim = lambda_limit(base, args.alpha)
    ns = 10.0 ** np.arange(1, args.max_exp + 1)
    gaps = []
    print(f"{'n':>10} {'lambda^n':>14} {'rel gap':>12}")
    for n in ns:
        lam = rate_constants(base.with_cutoff(n), (args.alpha,)).lam[args.alpha]
        gaps.append((lim - lam) / lim)
        print(f"{n:10.0e} {lam:14.10f} {gaps[-1]:12.4e}")
    slope = np.polyfit(np.log(ns[-4:]), np.log(gaps[-4:]), 1)[0]
    print(f"limit {lim:.12f}; gap ~ n^{slope:.4f}")
    target = ns[-1] * (0.01 / gaps[-1]) ** (1.0 / slope)
    print(f"1% gap reached near n = {target:.2e}")


if __name__ == "__main__":
    main()
