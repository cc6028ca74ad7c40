"""Brute-force enumeration oracle for small horizons.

Walks every one of the n! rank orderings with inline record logic (no
shared code with the solver or the simulator) and tabulates, for each
threshold rule, how often it wins, picks wrong, and never picks.  Outcome
counts do not depend on the payoff triple, so they are computed once per
horizon and reused across parameter grids.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from math import factorial

from .core import PayoffParams

MAX_ORACLE_N = 10  # 10! walks are the practical ceiling for exhaustive runs


@lru_cache(maxsize=None)
def threshold_outcome_counts(n: int) -> tuple[tuple[int, int, int], ...]:
    """(wins, wrong_picks, no_picks) over all n! orderings, per threshold.

    Entry r-1 describes the rule "pass the first r-1 options, then accept
    the first relative maximum".  Each triple sums to n!.
    """
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= MAX_ORACLE_N:
        raise ValueError(f"n must be in 1..{MAX_ORACLE_N}, got {n!r}")
    counts = [[0, 0, 0] for _ in range(n)]
    for perm in permutations(range(n)):
        best_position = perm.index(n - 1) + 1
        records = []
        running = -1
        for i, v in enumerate(perm):
            if v > running:
                running = v
                records.append(i + 1)
        for r in range(1, n + 1):
            stop = next((p for p in records if p >= r), None)
            if stop is None:
                counts[r - 1][2] += 1
            elif stop == best_position:
                counts[r - 1][0] += 1
            else:
                counts[r - 1][1] += 1
    return tuple((w, x, y) for w, x, y in counts)


def policy_value(params: PayoffParams, n: int, r: int) -> float:
    """Exact expected payoff of the threshold-r rule, averaged over orderings."""
    wins, wrongs, nopicks = threshold_outcome_counts(n)[r - 1]
    total = params.alpha * wins - params.beta * wrongs - params.gamma * nopicks
    return total / factorial(n)


def win_probability(n: int, r: int) -> float:
    """Exact probability that the threshold-r rule picks the overall best."""
    wins, _, _ = threshold_outcome_counts(n)[r - 1]
    return wins / factorial(n)


def stop_probability(n: int, r: int) -> float:
    """Exact probability that the threshold-r rule accepts anything at all."""
    wins, wrongs, _ = threshold_outcome_counts(n)[r - 1]
    return (wins + wrongs) / factorial(n)


def best_threshold(params: PayoffParams, n: int) -> tuple[int, float]:
    """Smallest threshold attaining the maximal exhaustive expected payoff."""
    values = [policy_value(params, n, r) for r in range(1, n + 1)]
    best = max(values)
    return values.index(best) + 1, best
