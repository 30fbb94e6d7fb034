"""Minimiser of the conditional wave-loss risk for a range of class probabilities.

A calibrated loss puts the minimiser on the Bayes side: sign(F*) = sign(2P - 1).
"""
import argparse

import numpy as np

from wavemvsvm.loss import WaveParams, risk_minimizer


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=1.0)
    args = ap.parse_args()
    p = WaveParams(args.lam, args.a)
    print("P(y=1|x)  F*       Bayes-consistent")
    for prob in np.round(np.arange(0.05, 1.0, 0.05), 2):
        f_star = risk_minimizer(prob, p)
        ok = prob == 0.5 or np.sign(f_star) == np.sign(2 * prob - 1)
        print(f"{prob:<9.2f} {f_star:+.3f}   {ok}")


if __name__ == "__main__":
    main()
