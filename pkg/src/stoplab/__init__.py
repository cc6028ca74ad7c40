"""stoplab: a laboratory for the penalized best-choice stopping problem.

Exact backward-induction solver, closed forms and asymptotics, a
reproducible Monte Carlo harness, an event-sourced live experiment
service, and diagnostics that measure how far observed play deviates from
the optimal threshold strategy.
"""

from .core import (
    ABSORBED,
    CLASSICAL,
    AsymptoticSummary,
    CandidateChain,
    InvalidParamsError,
    PayoffParams,
    Solution,
    asymptotic_duration,
    asymptotics,
    bellman_residual,
    closed_form_value,
    expected_duration,
    expected_duration_sum_form,
    harmonic_sum,
    harmonic_table,
    immediate_reward,
    optimal_threshold,
    solve,
    stop_probability,
)
from .diagnostics import (
    DiagnosticReport,
    SessionStats,
    deviation_report,
    fit_threshold,
    implied_ratio,
    load_session_records,
    summarize,
)
from .generic import (
    GenericStoppingProblem,
    KernelError,
    candidate_chain_problem,
    maximum_operator,
    mean_operator,
    solve_generic,
)
from .sessions import (
    ProtocolError,
    SessionConfig,
    SessionEvent,
    SessionRecord,
    SessionStore,
    UnknownSessionError,
    fold_session,
    play_session,
    record_from_dict,
    record_to_dict,
)
from .simulate import (
    DEFAULT_HORIZON_CAP,
    MonteCarloReport,
    NoisyThresholdPolicy,
    OutcomeClass,
    ScriptedPolicy,
    SequenceInstance,
    StopWinReport,
    ThresholdPolicy,
    TrialOutcome,
    adjudicate_duration,
    classify_stop,
    empirical_stop_and_win,
    gen_instance,
    monte_carlo,
    never_stop,
    run_trial,
)

__version__ = "0.1.0"
