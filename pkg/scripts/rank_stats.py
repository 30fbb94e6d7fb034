"""Friedman statistic and Nemenyi critical difference from published average ranks."""
import argparse

from wavemvsvm.evaluation import Q_ALPHA, friedman_from_ranks, nemenyi_cd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ranks", type=float, nargs="+", default=[1.55, 3.43, 4.87, 4.70, 5.17, 3.57, 4.72])
    ap.add_argument("--n-datasets", type=int, default=30)
    ap.add_argument("--alpha", type=float, default=0.05, choices=sorted(Q_ALPHA))
    args = ap.parse_args()
    p = len(args.ranks)
    chi2, ff = friedman_from_ranks(args.ranks, args.n_datasets)
    cd = nemenyi_cd(p, args.n_datasets, Q_ALPHA[args.alpha][p])
    print(f"p={p}  N={args.n_datasets}")
    print(f"chi2_F = {chi2:.4f}   F_F = {ff:.4f}   CD(alpha={args.alpha}) = {cd:.4f}")


if __name__ == "__main__":
    main()
