#!/usr/bin/env python3
"""Convergence of the finite-horizon solution to its large-n limits.

For a sweep of payoff ratios, prints the threshold fraction k*/n, the
initial value V(1), the win-probability identity, and the mean duration
fraction at several horizons next to their limiting values.
"""

import argparse
import math

from stoplab.core import PayoffParams, asymptotics, expected_duration, solve, stop_probability


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizons", type=int, nargs="+", default=[10, 100, 1000, 10000])
    args = parser.parse_args()

    cases = [
        ("ratio 1/3", PayoffParams(1.0, 2.0, 0.0)),
        ("ratio 1/2", PayoffParams(1.0, 1.0, 0.0)),
        ("ratio 1", PayoffParams(1.0, 0.0, 0.0)),
        ("ratio 2", PayoffParams(1.0, 0.0, 1.0)),
        ("ratio 3", PayoffParams(1.0, 0.0, 2.0)),
    ]
    header = f"{'case':<10} {'n':>6} {'k*/n':>8} {'t*':>8} {'V(1)':>9} {'V(0+)':>9} {'win id':>8} {'p_win*':>8} {'m(0)/n':>8} {'limit':>8}"
    print(header)
    print("-" * len(header))
    for name, params in cases:
        limits = asymptotics(params)
        for n in args.horizons:
            sol = solve(params, n)
            duration_fraction = expected_duration(params, n, 0) / n
            print(
                f"{name:<10} {n:>6} {sol.k_star / n:>8.4f} {limits.t_star:>8.4f} "
                f"{sol.values[0]:>9.5f} {limits.v_limit:>9.5f} "
                f"{stop_probability(params, n):>8.4f} {limits.p_win:>8.4f} "
                f"{duration_fraction:>8.4f} {limits.mean_duration_fraction:>8.4f}"
            )
        print()


if __name__ == "__main__":
    main()
