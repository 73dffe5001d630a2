#!/usr/bin/env python3
"""Error of the worst-case-optimal design as its sample budget grows.

For equal error weights the average error probability of the designed test
falls out of the root cost slice alone (cost identity: value = E[tau] +
lambda * (alpha1 + alpha2), worst-case E[tau] = right slope at full mass),
so the sweep never extracts a policy tree.  Prints one line per odd
horizon next to the three-sample majority vote for scale.

    python scripts/horizon_sweep.py --max-horizon 21
"""

import argparse
from fractions import Fraction

from npkw import (
    FsstDesign,
    backward_recursion,
    bernoulli_model,
    fsst_analyze,
    pwl_eval,
    slope_right,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta1", default="0.8")
    ap.add_argument("--theta2", default="0.2")
    ap.add_argument("--lam", type=int, default=20)
    ap.add_argument("--max-horizon", type=int, default=21)
    args = ap.parse_args()

    vote = bernoulli_model(args.theta1, args.theta2, lam1=1, lam2=1, horizon=3)
    fsst_avg = sum(fsst_analyze(FsstDesign(3, 2), vote), Fraction(0)) / 2
    print(f"three-sample majority vote: average error {float(fsst_avg):.6f}")
    print()
    print("horizon  worst-case E[tau]  average error")
    for n in range(3, args.max_horizon + 1, 2):
        model = bernoulli_model(args.theta1, args.theta2,
                                lam1=args.lam, lam2=args.lam, horizon=n)
        root = backward_recursion(model).rho[(0, 0)]
        e_tau = slope_right(root, 1)
        avg = (pwl_eval(root, 1) - e_tau) / (2 * args.lam)
        print(f"{n:7d}  {e_tau:17d}  {float(avg):.10f}")


if __name__ == "__main__":
    main()
