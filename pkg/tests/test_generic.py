import math

import pytest

from stoplab.core import ABSORBED, PayoffParams, solve
from stoplab.generic import (
    GenericStoppingProblem,
    KernelError,
    candidate_chain_problem,
    maximum_operator,
    mean_operator,
    solve_generic,
)

CLASSICAL = PayoffParams(1.0)


def two_state_toy():
    # stage-independent kernel on {"a", "b"}; payoff grows with stage on b
    kernel = lambda stage, state: {"a": 0.25, "b": 0.75} if state == "a" else {"a": 0.5, "b": 0.5}
    payoff = lambda stage, state: float(stage) if state == "b" else 1.0
    return GenericStoppingProblem(horizon=2, states=("a", "b"), kernel=kernel, payoff=payoff)


class TestMeanOperator:
    def test_constant_function(self):
        problem = two_state_toy()
        assert mean_operator(problem, lambda s, x: 3.5, 0, "a") == pytest.approx(3.5)

    def test_point_mass_kernel(self):
        problem = GenericStoppingProblem(
            horizon=3,
            states=(0, 1),
            kernel=lambda stage, state: {1: 1.0},
            payoff=lambda stage, state: 0.0,
        )
        f = lambda stage, state: 10 * stage + state
        assert mean_operator(problem, f, 1, 0) == pytest.approx(f(2, 1))

    def test_candidate_chain_penultimate_state(self):
        # from state n-1: next candidate at n w.p. 1/n, otherwise absorbed
        n = 8
        gamma = 0.6
        problem = candidate_chain_problem(PayoffParams(1.0, 0.0, gamma), n)
        f = lambda stage, state: -gamma if state == ABSORBED else (1.0 if state == n else 0.0)
        direct = (1.0 / n) * 1.0 + ((n - 1) / n) * (-gamma)
        # brute-force the same expectation from the kernel row
        row = problem.kernel(0, n - 1)
        brute = sum(p * f(1, s) for s, p in row.items())
        assert brute == pytest.approx(direct, abs=1e-15)
        assert mean_operator(problem, f, 0, n - 1) == pytest.approx(direct, abs=1e-15)

    def test_stage_out_of_range(self):
        problem = two_state_toy()
        with pytest.raises(ValueError):
            mean_operator(problem, lambda s, x: 0.0, 2, "a")

    def test_non_stochastic_row(self):
        problem = GenericStoppingProblem(
            horizon=1,
            states=("a",),
            kernel=lambda stage, state: {"a": 0.7},
            payoff=lambda stage, state: 0.0,
        )
        with pytest.raises(KernelError):
            mean_operator(problem, lambda s, x: 1.0, 0, "a")


class TestMaximumOperator:
    def test_picks_larger_branch(self):
        problem = two_state_toy()
        f = lambda stage, state: 5.0 if (stage, state) == (0, "a") else 3.0
        assert maximum_operator(problem, f, 0, "a") == 5.0

    def test_equal_branches(self):
        problem = two_state_toy()
        f = lambda stage, state: 2.0
        assert maximum_operator(problem, f, 0, "b") == 2.0


class TestSolveGeneric:
    def test_horizon_zero_is_boundary(self):
        problem = GenericStoppingProblem(
            horizon=0,
            states=("x", "y"),
            kernel=lambda stage, state: {},
            payoff=lambda stage, state: 1.0 if state == "x" else -1.0,
        )
        values, stopping = solve_generic(problem)
        assert values[0] == {"x": 1.0, "y": -1.0}
        assert stopping[0] == frozenset({"x", "y"})

    def test_two_stage_hand_computation(self):
        problem = two_state_toy()
        values, stopping = solve_generic(problem)
        # stage 2 boundary: a -> 1, b -> 2
        assert values[2] == {"a": 1.0, "b": 2.0}
        # stage 1: a: max(1, .25*1+.75*2=1.75)=1.75; b: max(1, .5*1+.5*2=1.5)=1.5
        assert values[1]["a"] == pytest.approx(1.75)
        assert values[1]["b"] == pytest.approx(1.5)
        assert stopping[1] == frozenset()
        # stage 0: a: max(1, .25*1.75+.75*1.5=1.5625); b: max(0, .5*1.75+.5*1.5=1.625)
        assert values[0]["a"] == pytest.approx(1.5625)
        assert values[0]["b"] == pytest.approx(1.625)

    @pytest.mark.parametrize("params", [CLASSICAL, PayoffParams(1.0, 1.0, 0.5), PayoffParams(2.0, 0.0, 3.0)])
    @pytest.mark.parametrize("n", [1, 2, 5, 25])
    def test_chain_embedding_matches_specialised_solver(self, params, n):
        values, stopping = solve_generic(candidate_chain_problem(params, n))
        sol = solve(params, n)
        for k in range(1, n + 1):
            assert values[0][k] == pytest.approx(sol.values[k - 1], abs=1e-12)
        assert values[0][ABSORBED] == pytest.approx(-params.gamma)
        # the stage-0 stopping set restricted to live states is the threshold region
        live = {k for k in stopping[0] if k != ABSORBED}
        assert live == set(range(sol.k_star, n + 1))

    def test_rejects_bad_kernel_during_sweep(self):
        problem = GenericStoppingProblem(
            horizon=2,
            states=(0, 1),
            kernel=lambda stage, state: {0: 0.5, 1: 0.6},
            payoff=lambda stage, state: 0.0,
        )
        with pytest.raises(KernelError):
            solve_generic(problem)
