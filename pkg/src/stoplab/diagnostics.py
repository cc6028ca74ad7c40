"""Post-experiment statistics and deviation-from-rationality diagnostics.

Consumes finalized session records (in memory, or parsed back from the
service's JSONL formats), tallies the experiment outcome counts, fits the
participant's implied threshold by minimal disagreement, inverts the
threshold characterisation into an interval of payoff ratios consistent
with the observed behaviour, and reports deviations from the rational
baselines with standard errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .core import PayoffParams, asymptotics, expected_duration, harmonic_table, optimal_threshold, stop_probability
from .sessions import (
    EVENT_DECISION,
    EVENT_REVEALED,
    STATE_FINALIZED,
    CHOICE_STOP,
    SessionEvent,
    SessionRecord,
    fold_session,
    record_from_dict,
)
from .simulate import OutcomeClass


@dataclass(frozen=True)
class SessionStats:
    """The five per-series data items collected after an experiment run."""

    n_experiments: int
    durations: tuple[int, ...]
    n_success: int
    n_reached_end_no_pick: int
    n_wrong_pick: int
    mean_duration: float


def summarize(records: list[SessionRecord]) -> SessionStats:
    """Outcome counts and durations across finalized same-horizon sessions."""
    if not records:
        return SessionStats(0, (), 0, 0, 0, 0.0)
    horizon = records[0].config.n
    counts = {OutcomeClass.SUCCESS: 0, OutcomeClass.NO_PICK: 0, OutcomeClass.WRONG_PICK: 0}
    durations: list[int] = []
    for record in records:
        if record.state != STATE_FINALIZED or record.outcome is None:
            raise ValueError(f"session {record.session_id} is not finalized")
        if record.config.n != horizon:
            raise ValueError(
                f"mixed horizons: {record.config.n} vs {horizon} in session {record.session_id}"
            )
        counts[record.outcome.outcome_class] += 1
        durations.append(record.outcome.duration)
    return SessionStats(
        n_experiments=len(records),
        durations=tuple(durations),
        n_success=counts[OutcomeClass.SUCCESS],
        n_reached_end_no_pick=counts[OutcomeClass.NO_PICK],
        n_wrong_pick=counts[OutcomeClass.WRONG_PICK],
        mean_duration=sum(durations) / len(durations),
    )


def candidate_decisions(record: SessionRecord) -> list[tuple[int, bool]]:
    """(step, stopped) for every decision taken at a candidate observation."""
    out: list[tuple[int, bool]] = []
    last_reveal: dict | None = None
    for event in record.events:
        if event.kind == EVENT_REVEALED:
            last_reveal = event.payload
        elif event.kind == EVENT_DECISION and last_reveal is not None:
            if bool(last_reveal.get("is_candidate")):
                out.append((event.step, event.payload.get("choice") == CHOICE_STOP))
    return out


def fit_threshold(records: list[SessionRecord]) -> tuple[int, int]:
    """Minimal-disagreement threshold fit over candidate decisions.

    Scores every threshold r by how many observed candidate decisions
    contradict "pass below r, accept at or above r" and returns the
    smallest minimiser together with its disagreement count.  The optimal
    strategy class is threshold-type, so this one-parameter fit is
    identifiable from a handful of sessions.
    """
    if not records:
        raise ValueError("at least one finalized session is required")
    n = records[0].config.n
    stops_at = [0] * (n + 1)
    passes_at = [0] * (n + 1)
    total = 0
    for record in records:
        for step, stopped in candidate_decisions(record):
            total += 1
            if stopped:
                stops_at[step] += 1
            else:
                passes_at[step] += 1
    if total == 0:
        raise ValueError("sessions contain no candidate decisions")
    # disagreements(r) = stops before r + passes at or after r
    passes_tail = [0] * (n + 2)
    for step in range(n, 0, -1):
        passes_tail[step] = passes_tail[step + 1] + passes_at[step]
    best_r = 1
    best_score = passes_tail[1]
    stops_before = 0
    for r in range(2, n + 1):
        stops_before += stops_at[r - 1]
        score = stops_before + passes_tail[r]
        if score < best_score:
            best_score = score
            best_r = r
    return best_r, best_score


def implied_ratio(r_hat: int, n: int) -> tuple[tuple[float, float], float]:
    """Ratio interval and point estimate implied by a fitted threshold.

    A threshold r is optimal exactly when the payoff ratio lies in
    (H[r], H[r-1]] (half-open, H[0] = +inf), so the fit inverts to that
    interval; the point estimate -ln(r/n) is the large-n inversion of the
    threshold fraction and is only reported alongside the interval.
    """
    if not isinstance(r_hat, int) or isinstance(r_hat, bool) or not 1 <= r_hat <= n:
        raise ValueError(f"r_hat must be in 1..{n}, got {r_hat!r}")
    table = harmonic_table(n)
    interval = (table[r_hat], table[r_hat - 1])
    point = -math.log(r_hat / n)
    return interval, point


@dataclass(frozen=True)
class DiagnosticReport:
    """Fitted behaviour next to the rational baselines.

    The win-rate baseline is reported both as the large-n limit
    ratio*exp(-ratio) (used for the deviation field) and as the finite-n
    threshold identity; the duration baseline analogously.  Deviations are
    observed minus predicted, with standard errors of the observed side.
    """

    stats: SessionStats
    n: int
    r_hat: int
    disagreement_count: int
    implied_ratio_interval: tuple[float, float]
    implied_ratio_point: float
    optimal_k_star: int
    observed_p_win: float
    se_p_win: float
    predicted_p_win_limit: float
    predicted_p_win_finite: float
    deviation_p_win: float
    observed_duration_fraction: float
    se_duration_fraction: float
    predicted_duration_limit: float
    predicted_duration_finite: float
    deviation_duration: float


def deviation_report(records: list[SessionRecord], params: PayoffParams, n: int) -> DiagnosticReport:
    """Assemble the full diagnostic picture for one participant/series."""
    stats = summarize(records)
    if stats.n_experiments == 0:
        raise ValueError("cannot build a deviation report from zero sessions")
    if records[0].config.n != n:
        raise ValueError(f"records have horizon {records[0].config.n}, expected {n}")
    r_hat, disagreements = fit_threshold(records)
    interval, point = implied_ratio(r_hat, n)
    limits = asymptotics(params)
    trials = stats.n_experiments
    p_win = stats.n_success / trials
    se_p = math.sqrt(p_win * (1.0 - p_win) / trials)
    duration_fraction = stats.mean_duration / n
    if trials > 1:
        var = sum((d - stats.mean_duration) ** 2 for d in stats.durations) / (trials - 1)
        se_dur = math.sqrt(var / trials) / n
    else:
        se_dur = 0.0
    return DiagnosticReport(
        stats=stats,
        n=n,
        r_hat=r_hat,
        disagreement_count=disagreements,
        implied_ratio_interval=interval,
        implied_ratio_point=point,
        optimal_k_star=optimal_threshold(params, n),
        observed_p_win=p_win,
        se_p_win=se_p,
        predicted_p_win_limit=limits.p_win,
        predicted_p_win_finite=stop_probability(params, n),
        deviation_p_win=p_win - limits.p_win,
        observed_duration_fraction=duration_fraction,
        se_duration_fraction=se_dur,
        predicted_duration_limit=limits.mean_duration_fraction,
        predicted_duration_finite=expected_duration(params, n, 0) / n,
        deviation_duration=duration_fraction - limits.mean_duration_fraction,
    )


def report_to_dict(report: DiagnosticReport) -> dict:
    interval_lo, interval_hi = report.implied_ratio_interval
    return {
        "n_experiments": report.stats.n_experiments,
        "n_success": report.stats.n_success,
        "n_reached_end_no_pick": report.stats.n_reached_end_no_pick,
        "n_wrong_pick": report.stats.n_wrong_pick,
        "mean_duration": report.stats.mean_duration,
        "n": report.n,
        "r_hat": report.r_hat,
        "disagreement_count": report.disagreement_count,
        "implied_ratio_low": interval_lo,
        "implied_ratio_high": interval_hi,
        "implied_ratio_point": report.implied_ratio_point,
        "optimal_k_star": report.optimal_k_star,
        "observed_p_win": report.observed_p_win,
        "se_p_win": report.se_p_win,
        "predicted_p_win_limit": report.predicted_p_win_limit,
        "predicted_p_win_finite": report.predicted_p_win_finite,
        "deviation_p_win": report.deviation_p_win,
        "observed_duration_fraction": report.observed_duration_fraction,
        "se_duration_fraction": report.se_duration_fraction,
        "predicted_duration_limit": report.predicted_duration_limit,
        "predicted_duration_finite": report.predicted_duration_finite,
        "deviation_duration": report.deviation_duration,
    }


def render_report_text(report: DiagnosticReport) -> str:
    """Aligned two-column rendering for terminals."""
    rows = []
    for key, value in report_to_dict(report).items():
        if isinstance(value, float):
            rows.append((key, f"{value:.6g}"))
        else:
            rows.append((key, str(value)))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def load_session_records(path: str | Path) -> tuple[list[SessionRecord], list[tuple[int, str]]]:
    """Parse a JSONL session file, accepting both service formats.

    Lines may be exported session records ({"events": [...]}) or raw event
    envelopes ({"kind": ..., "session_id": ...}) as written by the live
    log; envelope files are grouped per session and folded.  Returns the
    successfully reconstructed records plus (line_number, message) pairs
    for every malformed line.
    """
    records: list[SessionRecord] = []
    errors: list[tuple[int, str]] = []
    envelopes: dict[str, list[SessionEvent]] = {}
    envelope_order: list[str] = []
    envelope_first_line: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append((lineno, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(payload, dict):
                errors.append((lineno, "line is not a JSON object"))
                continue
            if "events" in payload:
                try:
                    records.append(record_from_dict(payload))
                except Exception as exc:
                    errors.append((lineno, str(exc)))
            elif "kind" in payload and "session_id" in payload:
                sid = payload["session_id"]
                if sid not in envelopes:
                    envelopes[sid] = []
                    envelope_order.append(sid)
                    envelope_first_line[sid] = lineno
                envelopes[sid].append(
                    SessionEvent(step=int(payload["step"]), kind=payload["kind"], payload=payload["payload"])
                )
            else:
                errors.append((lineno, "unrecognized line shape"))
    for sid in envelope_order:
        try:
            records.append(fold_session(envelopes[sid]))
        except Exception as exc:
            errors.append((envelope_first_line[sid], f"session {sid}: {exc}"))
    return records, errors
