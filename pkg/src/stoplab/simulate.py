"""Instance generation and Monte Carlo estimation for the selection game.

Instances hide scale information from the observer: n distinct integers
are drawn without replacement from [1, a^n] with the base a itself
randomised per trial, so repeated play reveals nothing about where the
maximum might sit.  Policies are deliberately starved: they see only the
step index, the horizon, and whether the current observation is a
candidate (a relative maximum), never the raw values.

Mass simulation works on rank permutations; by rank sufficiency the
decision process of any admissible policy is identical on ranks and on
raw values, and permutations keep a million trials cheap.  Every trial
draws its own random stream derived from (seed, trial index), so reports
are bit-identical regardless of chunking or thread count.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import repeat
from math import sqrt
from typing import Callable, Sequence

import numpy as np

from .core import PayoffParams, expected_duration, optimal_threshold, stop_probability

BASES = (2, 3, 5, 7, 11)
DEFAULT_HORIZON_CAP = 500
_CHUNK = 4096

#: A policy maps (step, n, is_candidate) to True (accept) or False (pass).
Policy = Callable[[int, int, bool], bool]


class OutcomeClass(str, Enum):
    SUCCESS = "success"
    WRONG_PICK = "wrong_pick"
    NO_PICK = "no_pick"


class PolicyProtocolError(TypeError):
    """Raised when a policy breaks the decision protocol."""


@dataclass(frozen=True)
class SequenceInstance:
    """One playable instance: n distinct values in [1, base_a^n], shuffled."""

    n: int
    base_a: int
    values: tuple[int, ...]
    best_index: int  # 1-based position of the maximum

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n!r}")
        if self.base_a not in BASES:
            raise ValueError(f"base_a must be one of {BASES}, got {self.base_a!r}")
        if len(self.values) != self.n:
            raise ValueError(f"expected {self.n} values, got {len(self.values)}")
        if len(set(self.values)) != self.n:
            raise ValueError("values must be pairwise distinct")
        ceiling = self.base_a**self.n
        if any(not 1 <= v <= ceiling for v in self.values):
            raise ValueError(f"values must lie in [1, {self.base_a}^{self.n}]")
        if self.values[self.best_index - 1] != max(self.values):
            raise ValueError("best_index does not point at the maximum")

    def ranks(self) -> tuple[int, ...]:
        """Values replaced by their ranks, 1 = smallest, n = largest."""
        order = {v: i + 1 for i, v in enumerate(sorted(self.values))}
        return tuple(order[v] for v in self.values)

    def candidate_flags(self) -> tuple[bool, ...]:
        flags = []
        running = 0
        for v in self.values:
            flags.append(v > running)
            running = max(running, v)
        return tuple(flags)

    def to_dict(self) -> dict:
        # values as decimal strings: base_a^n overflows doubles long before n=500
        return {
            "n": self.n,
            "base_a": self.base_a,
            "values": [str(v) for v in self.values],
            "best_index": self.best_index,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SequenceInstance":
        return cls(
            n=int(payload["n"]),
            base_a=int(payload["base_a"]),
            values=tuple(int(v) for v in payload["values"]),
            best_index=int(payload["best_index"]),
        )


def gen_instance(n: int, seed: int, *, max_horizon: int = DEFAULT_HORIZON_CAP) -> SequenceInstance:
    """Deterministically generate one instance from a seed.

    The base is drawn uniformly from BASES, then n distinct integers are
    rejection-sampled from [1, base^n] (collisions have probability
    ~n^2/base^n, so rejection is cheap) and shuffled into presentation
    order.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if n > max_horizon:
        raise ValueError(f"n={n} exceeds the horizon cap {max_horizon}")
    rng = random.Random(seed)
    base = rng.choice(BASES)
    ceiling = base**n
    seen: set[int] = set()
    values: list[int] = []
    while len(values) < n:
        v = rng.randrange(1, ceiling + 1)
        if v not in seen:
            seen.add(v)
            values.append(v)
    rng.shuffle(values)
    best_index = values.index(max(values)) + 1
    return SequenceInstance(n=n, base_a=base, values=tuple(values), best_index=best_index)


class ThresholdPolicy:
    """Pass the first r-1 options, then accept the first candidate."""

    def __init__(self, r: int):
        if r < 1:
            raise ValueError(f"threshold must be >= 1, got {r!r}")
        self.r = r

    def __call__(self, step: int, n: int, is_candidate: bool) -> bool:
        return is_candidate and step >= self.r


class NoisyThresholdPolicy:
    """Threshold rule whose candidate decisions flip with a fixed probability."""

    def __init__(self, r: int, flip_prob: float, seed: int):
        if not 0.0 <= flip_prob < 0.5:
            raise ValueError(f"flip_prob must be in [0, 0.5), got {flip_prob!r}")
        self.r = r
        self.flip_prob = flip_prob
        self._rng = random.Random(seed)

    def __call__(self, step: int, n: int, is_candidate: bool) -> bool:
        if not is_candidate:
            return False
        decision = step >= self.r
        if self._rng.random() < self.flip_prob:
            decision = not decision
        return decision


class ScriptedPolicy:
    """Replays a fixed stop/pass script; useful for protocol equivalence tests."""

    def __init__(self, decisions: Sequence[bool]):
        self.decisions = tuple(bool(d) for d in decisions)

    def __call__(self, step: int, n: int, is_candidate: bool) -> bool:
        return self.decisions[step - 1]


def never_stop(step: int, n: int, is_candidate: bool) -> bool:
    return False


@dataclass(frozen=True)
class TrialOutcome:
    stop_index: int | None
    outcome_class: OutcomeClass
    duration: int
    payoff: float


def classify_stop(params: PayoffParams, n: int, stop_index: int | None, best_index: int) -> TrialOutcome:
    """Outcome fields implied by where (if anywhere) the policy stopped."""
    if stop_index is None:
        return TrialOutcome(None, OutcomeClass.NO_PICK, n, -params.gamma + 0.0)
    if stop_index == best_index:
        return TrialOutcome(stop_index, OutcomeClass.SUCCESS, stop_index, params.alpha)
    # + 0.0 keeps a zero penalty from serializing as -0.0
    return TrialOutcome(stop_index, OutcomeClass.WRONG_PICK, stop_index, -params.beta + 0.0)


def run_trial(instance: SequenceInstance, policy: Policy, params: PayoffParams) -> TrialOutcome:
    """Play one instance against a policy.

    The policy receives only (step, n, is_candidate); it never sees values,
    so rank-preserving changes to the instance cannot change its decisions.
    """
    n = instance.n
    stop_index = None
    for step, is_candidate in enumerate(instance.candidate_flags(), start=1):
        decision = policy(step, n, is_candidate)
        if not isinstance(decision, bool):
            raise PolicyProtocolError(
                f"policy must return bool, got {decision!r} at step {step}"
            )
        if decision:
            stop_index = step
            break
    return classify_stop(params, n, stop_index, instance.best_index)


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _run_chunk(n: int, r: int, seed: int, start: int, stop: int) -> tuple[int, int, int, int, int]:
    """Simulate trials [start, stop); returns integer outcome accumulators."""
    wins = wrongs = nopicks = 0
    dur_sum = 0
    dur_sq_sum = 0
    for index in range(start, stop):
        perm = _trial_rng(seed, index).permutation(n)
        running = np.maximum.accumulate(perm)
        candidates = perm == running
        hits = np.flatnonzero(candidates[r - 1 :])
        if hits.size == 0:
            nopicks += 1
            duration = n
        else:
            stop_at = r + int(hits[0])  # 1-based stop index
            if perm[stop_at - 1] == n - 1:
                wins += 1
            else:
                wrongs += 1
            duration = stop_at
        dur_sum += duration
        dur_sq_sum += duration * duration
    return wins, wrongs, nopicks, dur_sum, dur_sq_sum


def _simulate_threshold(
    n: int, r: int, trials: int, seed: int, workers: int
) -> tuple[int, int, int, int, int]:
    """Chunked simulation, optionally across worker processes.

    Trial streams depend only on (seed, trial index) and the accumulators
    are integers, so the reduction is order-free and the totals are
    identical at any worker count.
    """
    spans = [(lo, min(lo + _CHUNK, trials)) for lo in range(0, trials, _CHUNK)]
    if workers > 1 and len(spans) > 1:
        starts = [s[0] for s in spans]
        stops = [s[1] for s in spans]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, repeat(n), repeat(r), repeat(seed), starts, stops, chunksize=4))
    else:
        parts = [_run_chunk(n, r, seed, *span) for span in spans]
    totals = tuple(sum(col) for col in zip(*parts))
    return totals  # type: ignore[return-value]


def _proportion_se(count: int, trials: int) -> float:
    p = count / trials
    return sqrt(p * (1.0 - p) / trials)


def _mean_se(total: float, total_sq: float, trials: int) -> tuple[float, float]:
    mean = total / trials
    if trials < 2:
        return mean, 0.0
    variance = max(0.0, (total_sq - total * total / trials) / (trials - 1))
    return mean, sqrt(variance / trials)


@dataclass(frozen=True)
class MonteCarloReport:
    params: PayoffParams
    n: int
    trials: int
    seed: int
    threshold: int
    n_success: int
    n_wrong_pick: int
    n_no_pick: int
    p_win: float
    p_wrong: float
    p_nopick: float
    se_win: float
    se_wrong: float
    se_nopick: float
    mean_duration: float
    se_duration: float
    mean_payoff: float
    se_payoff: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "gamma": self.params.gamma,
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "threshold": self.threshold,
            "n_success": self.n_success,
            "n_wrong_pick": self.n_wrong_pick,
            "n_no_pick": self.n_no_pick,
            "p_win": self.p_win,
            "p_wrong": self.p_wrong,
            "p_nopick": self.p_nopick,
            "se_win": self.se_win,
            "se_wrong": self.se_wrong,
            "se_nopick": self.se_nopick,
            "mean_duration": self.mean_duration,
            "se_duration": self.se_duration,
            "mean_payoff": self.mean_payoff,
            "se_payoff": self.se_payoff,
        }


def monte_carlo(
    params: PayoffParams,
    n: int,
    trials: int,
    seed: int,
    *,
    threshold: int | None = None,
    workers: int = 1,
) -> MonteCarloReport:
    """Estimate win/wrong/no-pick rates, duration, and payoff of a threshold rule.

    The rule defaults to the optimal threshold for ``params``.  Each trial
    is an independent uniformly-shuffled rank instance on its own derived
    random stream; the report is a pure function of (params, n, trials,
    seed, threshold).
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials!r}")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    r = threshold if threshold is not None else optimal_threshold(params, n)
    if not 1 <= r <= n:
        raise ValueError(f"threshold must be in 1..{n}, got {r!r}")
    wins, wrongs, nopicks, dur_sum, dur_sq = _simulate_threshold(n, r, trials, seed, workers)
    mean_dur, se_dur = _mean_se(dur_sum, dur_sq, trials)
    a, b, g = params.alpha, params.beta, params.gamma
    pay_sum = a * wins - b * wrongs - g * nopicks
    pay_sq = a * a * wins + b * b * wrongs + g * g * nopicks
    mean_pay, se_pay = _mean_se(pay_sum, pay_sq, trials)
    return MonteCarloReport(
        params=params,
        n=n,
        trials=trials,
        seed=seed,
        threshold=r,
        n_success=wins,
        n_wrong_pick=wrongs,
        n_no_pick=nopicks,
        p_win=wins / trials,
        p_wrong=wrongs / trials,
        p_nopick=nopicks / trials,
        se_win=_proportion_se(wins, trials),
        se_wrong=_proportion_se(wrongs, trials),
        se_nopick=_proportion_se(nopicks, trials),
        mean_duration=mean_dur,
        se_duration=se_dur,
        mean_payoff=mean_pay,
        se_payoff=se_pay,
    )


@dataclass(frozen=True)
class StopWinReport:
    """Empirical stop-at-all and win frequencies next to the threshold identity.

    ``formula_value`` is ((k*-1)/n) H[k*]; ``formula_tracks`` names the
    empirical quantity it sits closer to.
    """

    n: int
    trials: int
    seed: int
    threshold: int
    p_stop: float
    p_win: float
    se_stop: float
    se_win: float
    formula_value: float
    formula_tracks: str


def empirical_stop_and_win(
    params: PayoffParams,
    n: int,
    trials: int,
    seed: int,
    *,
    threshold: int | None = None,
    workers: int = 1,
) -> StopWinReport:
    """Measure P(stop at all) and P(win) and compare both to the identity."""
    report = monte_carlo(params, n, trials, seed, threshold=threshold, workers=workers)
    p_stop = (report.n_success + report.n_wrong_pick) / trials
    formula = stop_probability(params, n)
    tracks = "win" if abs(formula - report.p_win) <= abs(formula - p_stop) else "stop"
    return StopWinReport(
        n=n,
        trials=trials,
        seed=seed,
        threshold=report.threshold,
        p_stop=p_stop,
        p_win=report.p_win,
        se_stop=_proportion_se(report.n_success + report.n_wrong_pick, trials),
        se_win=report.se_win,
        formula_value=formula,
        formula_tracks=tracks,
    )


@dataclass(frozen=True)
class DurationAdjudication:
    """Which duration index convention matches the simulated mean."""

    n: int
    trials: int
    seed: int
    threshold: int
    empirical_mean: float
    se: float
    inclusive_value: float
    exclusive_value: float
    z_inclusive: float
    z_exclusive: float
    matching_variant: str


def adjudicate_duration(
    params: PayoffParams,
    n: int,
    trials: int,
    seed: int,
    *,
    workers: int = 1,
) -> DurationAdjudication:
    """Simulate mean decision duration and score both index conventions.

    The "inclusive" convention lets the rule accept at the threshold state
    itself; the "exclusive" one behaves as if that state were passed.  The
    returned z-scores measure each convention's distance from the
    simulated mean in standard errors.
    """
    report = monte_carlo(params, n, trials, seed, workers=workers)
    inclusive = expected_duration(params, n, 0, variant="inclusive")
    exclusive = expected_duration(params, n, 0, variant="exclusive")
    se = report.se_duration if report.se_duration > 0 else float("nan")
    z_inc = (report.mean_duration - inclusive) / se
    z_exc = (report.mean_duration - exclusive) / se
    matching = "inclusive" if abs(z_inc) <= abs(z_exc) else "exclusive"
    return DurationAdjudication(
        n=n,
        trials=trials,
        seed=seed,
        threshold=report.threshold,
        empirical_mean=report.mean_duration,
        se=report.se_duration,
        inclusive_value=inclusive,
        exclusive_value=exclusive,
        z_inclusive=z_inc,
        z_exclusive=z_exc,
        matching_variant=matching,
    )
