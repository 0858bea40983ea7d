"""Variance profile of the rescaled block-count process B~_n(x).

Compares the sampled variance with the exact finite-n variance and with the
Brownian limit max(x - a, 0), for the full and tail-restricted measures.
"""
import argparse
import math

import numpy as np

from weighted_perms.exact import block_count_moments
from weighted_perms.harness import block_counts, sequential_sample_matrix
from weighted_perms.model import floor_pow, parse_model, parse_restriction


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="ewens:theta=1")
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--a", type=float, default=0.0)
    ap.add_argument("--samples", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    model = parse_model(args.model)
    A = parse_restriction(f"tail:a={args.a}" if args.a > 0 else "full").at(args.n)
    P = sequential_sample_matrix(model, A, args.samples, args.seed)
    scale2 = float(model.vartheta) * math.log(args.n)
    print(f"{'x':>5} {'sampled':>9} {'exact':>9} {'limit':>7}")
    for x in np.linspace(0.1, 1.0, 10):
        b = floor_pow(args.n, x)
        var = block_counts(P, b).var(ddof=1) / scale2
        _, cov = block_count_moments(model, A, [range(1, b + 1)])
        print(f"{x:5.2f} {var:9.4f} {cov[0, 0] / scale2:9.4f} {max(x - args.a, 0):7.2f}")


if __name__ == "__main__":
    main()
