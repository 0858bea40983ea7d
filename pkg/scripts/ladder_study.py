"""Error ladders for the h_n and char_T asymptotics.

Prints, for each model, the relative error of the leading-order prediction
along a doubling ladder together with the fitted decay exponent.  Errors for
h_n are evaluated in MPFR since for light restrictions they fall far below
double precision.
"""
import argparse
import math

import gmpy2

from weighted_perms import asymptotics as asy
from weighted_perms.exact import char_T
from weighted_perms.formats import write_csv
from weighted_perms.harness import hn_relative_errors
from weighted_perms.model import parse_model, parse_restriction


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--models", default="uniform,ewens:theta=2,ewens:theta=1/2")
    ap.add_argument("--restriction", default="exclude:2")
    ap.add_argument("--ladder", default="100,200,400,800,1600")
    ap.add_argument("--s", type=float, default=math.pi / 4)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()
    ladder = [int(v) for v in args.ladder.split(",")]
    fam = parse_restriction(args.restriction)
    rows = []
    for spec in args.models.split(","):
        model = parse_model(spec)
        h_err = hn_relative_errors(model, fam, ladder)
        c_err = []
        for n in ladder:
            A = fam.at(n)
            exact = char_T(model, A, args.s)
            c_err.append(abs(exact - asy.predict_char_T(model, A, args.s).value) / abs(exact))
        for n, he, ce in zip(ladder, h_err, c_err):
            rows.append((spec, n, gmpy2.mpfr(he), ce))
        _, rate = asy.fit_power_law(ladder, c_err)
        logs = [float(gmpy2.log10(e)) if e > 0 else -math.inf for e in h_err]
        print(f"{spec:>24}  log10 h_n err " + " ".join(f"{v:8.1f}" for v in logs)
              + f"   char_T rate {rate:.2f}")
    if args.csv:
        write_csv(rows, ["model", "n", "h_n_rel_err", "char_T_rel_err"], args.csv)


if __name__ == "__main__":
    main()
