"""Generic finite-horizon optimal stopping over an arbitrary Markov kernel.

The engine is deliberately small: states are any hashables, the kernel is
a callable ``(stage, state) -> {state: probability}``, and the payoff is
``(stage, state) -> float``.  One backward sweep yields the value tables
and the per-stage stopping sets; first entry into a stopping set is an
optimal rule.  The candidate-chain problem from ``core`` embeds here and
is used as a cross-check of the specialised solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .core import ABSORBED, PayoffParams, immediate_reward

_ROW_SUM_TOL = 1e-9


class KernelError(ValueError):
    """Raised when a transition row does not sum to one."""


@dataclass(frozen=True)
class GenericStoppingProblem:
    horizon: int
    states: tuple
    kernel: Callable[[int, Any], Mapping[Any, float]]
    payoff: Callable[[int, Any], float]

    def __post_init__(self) -> None:
        if not isinstance(self.horizon, int) or isinstance(self.horizon, bool) or self.horizon < 0:
            raise ValueError(f"horizon must be a non-negative integer, got {self.horizon!r}")
        if not self.states:
            raise ValueError("state set must be non-empty")


def _checked_row(problem: GenericStoppingProblem, stage: int, state) -> Mapping[Any, float]:
    row = problem.kernel(stage, state)
    mass = math.fsum(row.values())
    if abs(mass - 1.0) > _ROW_SUM_TOL:
        raise KernelError(
            f"kernel row at stage {stage}, state {state!r} sums to {mass!r}, expected 1"
        )
    return row


def mean_operator(
    problem: GenericStoppingProblem,
    f: Callable[[int, Any], float],
    stage: int,
    state,
) -> float:
    """Expectation of f(stage+1, X_{stage+1}) from the given stage and state."""
    if not 0 <= stage < problem.horizon:
        raise ValueError(f"stage must be in 0..{problem.horizon - 1}, got {stage!r}")
    row = _checked_row(problem, stage, state)
    return math.fsum(p * f(stage + 1, s) for s, p in row.items())


def maximum_operator(
    problem: GenericStoppingProblem,
    f: Callable[[int, Any], float],
    stage: int,
    state,
) -> float:
    """max of stopping now, f(stage, state), and continuing one step."""
    return max(f(stage, state), mean_operator(problem, f, stage, state))


def solve_generic(
    problem: GenericStoppingProblem,
) -> tuple[list[dict], list[frozenset]]:
    """Backward induction over all stages.

    Returns (values, stopping_sets) where values[t][x] is the optimal value
    at stage t and state x, and stopping_sets[t] is the set of states where
    stopping is (weakly) optimal at stage t.  At the horizon every state is
    stopping; before it, A_t = {x : payoff(t, x) >= E[value at t+1]}.
    """
    horizon = problem.horizon
    values: list[dict] = [dict() for _ in range(horizon + 1)]
    stopping: list[frozenset] = [frozenset()] * (horizon + 1)
    values[horizon] = {x: problem.payoff(horizon, x) for x in problem.states}
    stopping[horizon] = frozenset(problem.states)
    for stage in range(horizon - 1, -1, -1):
        nxt = values[stage + 1]
        stage_values: dict = {}
        stop_here = set()
        for x in problem.states:
            row = _checked_row(problem, stage, x)
            continuation = math.fsum(p * nxt[s] for s, p in row.items())
            reward = problem.payoff(stage, x)
            if reward >= continuation:
                stage_values[x] = reward
                stop_here.add(x)
            else:
                stage_values[x] = continuation
        values[stage] = stage_values
        stopping[stage] = frozenset(stop_here)
    return values, stopping


def candidate_chain_problem(params: PayoffParams, n: int) -> GenericStoppingProblem:
    """The candidate chain embedded as a generic stopping problem.

    States are candidate indices plus the absorbing state; the kernel is
    stage-invariant.  With horizon n, stage-0 values coincide with the
    specialised solver's V(k) at every state (the state index strictly
    increases, so the horizon never truncates a reachable path).
    """
    states = tuple(range(1, n + 1)) + (ABSORBED,)

    def kernel(stage: int, state) -> dict:
        if state == ABSORBED:
            return {ABSORBED: 1.0}
        row = {j: state / (j * (j - 1)) for j in range(state + 1, n + 1)}
        row[ABSORBED] = state / n
        return row

    def payoff(stage: int, state) -> float:
        return immediate_reward(params, n, state)

    return GenericStoppingProblem(horizon=n, states=states, kernel=kernel, payoff=payoff)
