"""Event-sourced experiment sessions with append-only JSONL persistence.

A session is nothing but its ordered event list: created (which carries
the hidden instance), alternating revealed/decision pairs, and a final
finalized event.  Every mutation appends events and refolds, so the
in-memory state is a pure fold of the log by construction; replaying a
log file reproduces the state bit-identically.  Appends are fsynced
before the mutation is acknowledged.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .core import PayoffParams, optimal_threshold
from .simulate import (
    DEFAULT_HORIZON_CAP,
    OutcomeClass,
    Policy,
    SequenceInstance,
    ThresholdPolicy,
    TrialOutcome,
    classify_stop,
    gen_instance,
    run_trial,
)

REVEAL_VALUES = "values"
REVEAL_FLAGS = "flags"
REVEAL_POLICIES = (REVEAL_VALUES, REVEAL_FLAGS)

EVENT_CREATED = "created"
EVENT_REVEALED = "revealed"
EVENT_DECISION = "decision"
EVENT_FINALIZED = "finalized"

STATE_CREATED = "created"
STATE_IN_PROGRESS = "in_progress"
STATE_FINALIZED = "finalized"

CHOICE_STOP = "stop"
CHOICE_PASS = "pass"


class SessionError(Exception):
    """Base class for session machine errors."""


class UnknownSessionError(SessionError):
    pass


class ProtocolError(SessionError):
    """A request that violates the reveal/decide protocol."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class LogCorruptionError(SessionError):
    """An event log that cannot be folded back into a valid session."""


@dataclass(frozen=True)
class SessionConfig:
    n: int
    params: PayoffParams
    reveal_policy: str = REVEAL_VALUES
    seed: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.reveal_policy not in REVEAL_POLICIES:
            raise ValueError(
                f"reveal_policy must be one of {REVEAL_POLICIES}, got {self.reveal_policy!r}"
            )


@dataclass(frozen=True)
class SessionEvent:
    step: int
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {"step": self.step, "kind": self.kind, "payload": self.payload}

    @classmethod
    def from_dict(cls, d: dict) -> "SessionEvent":
        return cls(step=int(d["step"]), kind=str(d["kind"]), payload=dict(d["payload"]))


@dataclass
class SessionRecord:
    session_id: str
    created_ts: str
    config: SessionConfig
    instance: SequenceInstance
    events: list[SessionEvent]
    state: str
    outcome: TrialOutcome | None

    @property
    def cursor(self) -> int:
        """Number of observations revealed so far."""
        return sum(1 for e in self.events if e.kind == EVENT_REVEALED)

    @property
    def pending_decision(self) -> bool:
        decisions = sum(1 for e in self.events if e.kind == EVENT_DECISION)
        return self.cursor > decisions

    def revealed_payloads(self) -> list[dict]:
        return [e.payload for e in self.events if e.kind == EVENT_REVEALED]

    def decision_payloads(self) -> list[dict]:
        return [e.payload for e in self.events if e.kind == EVENT_DECISION]


def _created_event(config: SessionConfig, session_id: str, created_ts: str) -> SessionEvent:
    if config.seed is None:
        raise ValueError("created event requires a resolved seed")
    instance = gen_instance(config.n, config.seed, max_horizon=config.n)
    payload = {
        "session_id": session_id,
        "created_ts": created_ts,
        "n": config.n,
        "alpha": config.params.alpha,
        "beta": config.params.beta,
        "gamma": config.params.gamma,
        "reveal_policy": config.reveal_policy,
        "seed": config.seed,
        "instance": instance.to_dict(),
    }
    return SessionEvent(step=0, kind=EVENT_CREATED, payload=payload)


def _reveal_payload(instance: SequenceInstance, n: int, step: int) -> dict:
    return {
        "step": step,
        "value": str(instance.values[step - 1]),
        "is_candidate": instance.candidate_flags()[step - 1],
        "n": n,
    }


def _finalize_event(
    params: PayoffParams, n: int, step: int, stop_index: int | None, best_index: int
) -> SessionEvent:
    outcome = classify_stop(params, n, stop_index, best_index)
    return SessionEvent(
        step=step,
        kind=EVENT_FINALIZED,
        payload={
            "outcome_class": outcome.outcome_class.value,
            "stop_index": outcome.stop_index,
            "duration": outcome.duration,
            "payoff": outcome.payoff,
            "best_index": best_index,
        },
    )


def _reveal_event(record: SessionRecord) -> SessionEvent:
    if record.state == STATE_FINALIZED:
        raise ProtocolError("session_finalized", "session is already finalized")
    if record.pending_decision:
        raise ProtocolError("decision_required", "answer the pending observation first")
    step = record.cursor + 1
    payload = _reveal_payload(record.instance, record.config.n, step)
    return SessionEvent(step=step, kind=EVENT_REVEALED, payload=payload)


def _decision_events(
    record: SessionRecord, choice: str, metadata: dict | None = None
) -> list[SessionEvent]:
    if record.state == STATE_FINALIZED:
        raise ProtocolError("session_finalized", "session is already finalized")
    if not record.pending_decision:
        raise ProtocolError("no_pending_decision", "reveal an observation before deciding")
    if choice not in (CHOICE_STOP, CHOICE_PASS):
        raise ValueError(f"choice must be 'stop' or 'pass', got {choice!r}")
    step = record.cursor
    payload: dict = {"step": step, "choice": choice}
    if metadata is not None:
        payload["metadata"] = metadata
    events = [SessionEvent(step=step, kind=EVENT_DECISION, payload=payload)]
    stopped = choice == CHOICE_STOP
    if stopped or step == record.config.n:
        stop_index = step if stopped else None
        events.append(
            _finalize_event(
                record.config.params, record.config.n, step, stop_index, record.instance.best_index
            )
        )
    return events


def fold_session(events: Iterable[SessionEvent]) -> SessionRecord:
    """Rebuild a session purely from its events, validating the protocol.

    Raises LogCorruptionError when the event list could not have been
    produced by the command functions (wrong order, payloads inconsistent
    with the hidden instance, activity after finalization).
    """
    events = list(events)
    if not events or events[0].kind != EVENT_CREATED:
        raise LogCorruptionError("event log must start with a created event")
    head = events[0].payload
    try:
        config = SessionConfig(
            n=int(head["n"]),
            params=PayoffParams(float(head["alpha"]), float(head["beta"]), float(head["gamma"])),
            reveal_policy=head["reveal_policy"],
            seed=int(head["seed"]),
        )
        instance = SequenceInstance.from_dict(head["instance"])
        session_id = head["session_id"]
        created_ts = head["created_ts"]
    except (KeyError, ValueError, TypeError) as exc:
        raise LogCorruptionError(f"bad created payload: {exc}") from exc
    flags = instance.candidate_flags()
    value_strings = [str(v) for v in instance.values]
    cursor = 0
    decisions = 0
    state = STATE_CREATED
    outcome: TrialOutcome | None = None
    last_choice: str | None = None
    for event in events[1:]:
        if state == STATE_FINALIZED:
            raise LogCorruptionError(f"event after finalization: {event.kind}")
        if event.kind == EVENT_CREATED:
            raise LogCorruptionError("duplicate created event")
        if event.kind == EVENT_REVEALED:
            if cursor > decisions:
                raise LogCorruptionError("reveal while a decision is pending")
            if event.step != cursor + 1 or event.step > config.n:
                raise LogCorruptionError(f"reveal out of order at step {event.step}")
            if event.payload.get("value") != value_strings[event.step - 1]:
                raise LogCorruptionError(f"revealed value mismatch at step {event.step}")
            if bool(event.payload.get("is_candidate")) != flags[event.step - 1]:
                raise LogCorruptionError(f"candidate flag mismatch at step {event.step}")
            cursor += 1
            state = STATE_IN_PROGRESS
        elif event.kind == EVENT_DECISION:
            if cursor != decisions + 1 or event.step != cursor:
                raise LogCorruptionError(f"decision out of order at step {event.step}")
            if event.payload.get("choice") not in (CHOICE_STOP, CHOICE_PASS):
                raise LogCorruptionError(f"bad choice at step {event.step}")
            decisions += 1
            last_choice = event.payload["choice"]
        elif event.kind == EVENT_FINALIZED:
            if decisions != cursor or cursor == 0 or last_choice is None:
                raise LogCorruptionError("finalize without a matching decision")
            stop_index = cursor if last_choice == CHOICE_STOP else None
            if stop_index is None and cursor != config.n:
                raise LogCorruptionError("finalize on pass before the last observation")
            expected = classify_stop(config.params, config.n, stop_index, instance.best_index)
            recorded = event.payload
            if (
                recorded.get("outcome_class") != expected.outcome_class.value
                or recorded.get("stop_index") != expected.stop_index
                or recorded.get("duration") != expected.duration
            ):
                raise LogCorruptionError("finalized payload inconsistent with instance")
            outcome = expected
            state = STATE_FINALIZED
        else:
            raise LogCorruptionError(f"unknown event kind {event.kind!r}")
    return SessionRecord(
        session_id=session_id,
        created_ts=created_ts,
        config=config,
        instance=instance,
        events=events,
        state=state,
        outcome=outcome,
    )


def record_to_dict(record: SessionRecord) -> dict:
    """Stable-field-order JSON form; one line of the export stream."""
    return {
        "session_id": record.session_id,
        "created_ts": record.created_ts,
        "state": record.state,
        "n": record.config.n,
        "events": [e.to_dict() for e in record.events],
    }


def record_from_dict(payload: dict) -> SessionRecord:
    """Inverse of record_to_dict; the events are the single source of truth."""
    events = [SessionEvent.from_dict(e) for e in payload["events"]]
    record = fold_session(events)
    if payload.get("session_id") not in (None, record.session_id):
        raise LogCorruptionError("session_id header disagrees with created event")
    return record


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _resolve_seed(config: SessionConfig) -> SessionConfig:
    if config.seed is not None:
        return config
    return replace(config, seed=secrets.randbits(63))


def play_session(
    config: SessionConfig,
    policy: Policy,
    *,
    session_id: str | None = None,
) -> SessionRecord:
    """Run a policy through the full session machine without persistence.

    Builds the exact event sequence a live participant would produce (one
    fold at the end validates it), which makes this the reference
    generator for diagnostics tests and calibration data.
    """
    config = _resolve_seed(config)
    sid = session_id if session_id is not None else secrets.token_hex(16)
    created = _created_event(config, sid, _now_iso())
    instance = SequenceInstance.from_dict(created.payload["instance"])
    flags = instance.candidate_flags()
    events = [created]
    for step in range(1, config.n + 1):
        events.append(
            SessionEvent(
                step=step, kind=EVENT_REVEALED, payload=_reveal_payload(instance, config.n, step)
            )
        )
        decision = policy(step, config.n, flags[step - 1])
        if not isinstance(decision, bool):
            raise TypeError(f"policy must return bool, got {decision!r} at step {step}")
        choice = CHOICE_STOP if decision else CHOICE_PASS
        events.append(
            SessionEvent(step=step, kind=EVENT_DECISION, payload={"step": step, "choice": choice})
        )
        if decision or step == config.n:
            stop_index = step if decision else None
            events.append(
                _finalize_event(config.params, config.n, step, stop_index, instance.best_index)
            )
            break
    return fold_session(events)


class EventLog:
    """Append-only JSONL event journal, one file per UTC day, fsync on append."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._handle = None
        self._handle_day: str | None = None

    def append(self, session_id: str, seq_start: int, events: list[SessionEvent], ts: str) -> None:
        lines = []
        for offset, event in enumerate(events):
            envelope = {
                "session_id": session_id,
                "seq": seq_start + offset,
                "ts": ts,
                "step": event.step,
                "kind": event.kind,
                "payload": event.payload,
            }
            lines.append(json.dumps(envelope))
        data = ("\n".join(lines) + "\n").encode("utf-8")
        with self._lock:
            handle = self._file_for_day(datetime.now(timezone.utc).strftime("%Y%m%d"))
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())

    def _file_for_day(self, day: str):
        if self._handle is None or self._handle_day != day:
            if self._handle is not None:
                self._handle.close()
            path = self.directory / f"events-{day}.jsonl"
            self._handle = open(path, "ab")
            self._handle_day = day
        return self._handle

    def replay(self) -> Iterator[dict]:
        """Yield envelopes in append order; a torn trailing line is skipped."""
        paths = sorted(self.directory.glob("events-*.jsonl"))
        for file_index, path in enumerate(paths):
            with open(path, "r", encoding="utf-8") as handle:
                lines = handle.read().split("\n")
            for line_index, line in enumerate(lines):
                if not line.strip():
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as exc:
                    last_file = file_index == len(paths) - 1
                    last_line = line_index >= len(lines) - 2
                    if last_file and last_line:
                        return  # torn tail from an interrupted append
                    raise LogCorruptionError(f"{path.name}:{line_index + 1}: {exc}") from exc

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None
                self._handle_day = None


class SessionStore:
    """Concurrent session registry over the event machine.

    Single-session operations serialize on a per-session lock; reads take
    snapshots without locking.  When a log directory is given, every event
    batch is durably appended before the new state is visible, and
    construction replays whatever the directory already contains.
    """

    def __init__(self, log_dir: str | Path | None = None, *, horizon_cap: int = DEFAULT_HORIZON_CAP):
        self.horizon_cap = horizon_cap
        self._records: dict[str, SessionRecord] = {}
        self._order: list[str] = []
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._log = EventLog(log_dir) if log_dir is not None else None
        if self._log is not None:
            self._replay_log()

    def _replay_log(self) -> None:
        assert self._log is not None
        per_session: dict[str, list[SessionEvent]] = {}
        order: list[str] = []
        for envelope in self._log.replay():
            sid = envelope["session_id"]
            if sid not in per_session:
                per_session[sid] = []
                order.append(sid)
            per_session[sid].append(
                SessionEvent(step=int(envelope["step"]), kind=envelope["kind"], payload=envelope["payload"])
            )
        for sid in order:
            record = fold_session(per_session[sid])
            self._records[sid] = record
            self._locks[sid] = threading.Lock()
            self._order.append(sid)

    def _commit(self, record: SessionRecord, new_events: list[SessionEvent], seq_start: int) -> None:
        if self._log is not None:
            self._log.append(record.session_id, seq_start, new_events, _now_iso())
        self._records[record.session_id] = record

    def create(self, config: SessionConfig) -> SessionRecord:
        if config.n > self.horizon_cap:
            raise ValueError(f"n={config.n} exceeds the horizon cap {self.horizon_cap}")
        config = _resolve_seed(config)
        session_id = secrets.token_hex(16)
        event = _created_event(config, session_id, _now_iso())
        record = fold_session([event])
        with self._registry_lock:
            self._locks[session_id] = threading.Lock()
            self._order.append(session_id)
        self._commit(record, [event], seq_start=0)
        return record

    def _lock_for(self, session_id: str) -> threading.Lock:
        lock = self._locks.get(session_id)
        if lock is None:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        return lock

    def get(self, session_id: str) -> SessionRecord:
        record = self._records.get(session_id)
        if record is None:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        return record

    def next_observation(self, session_id: str) -> dict:
        with self._lock_for(session_id):
            record = self.get(session_id)
            event = _reveal_event(record)
            updated = fold_session(record.events + [event])
            self._commit(updated, [event], seq_start=len(record.events))
            return dict(event.payload)

    def decide(self, session_id: str, choice: str, metadata: dict | None = None) -> SessionRecord:
        with self._lock_for(session_id):
            record = self.get(session_id)
            events = _decision_events(record, choice, metadata)
            updated = fold_session(record.events + events)
            self._commit(updated, events, seq_start=len(record.events))
            return updated

    def result(self, session_id: str) -> dict:
        """Full disclosure plus the optimal-rule counterfactual on this instance."""
        record = self.get(session_id)
        if record.state != STATE_FINALIZED:
            raise ProtocolError("not_finalized", "session is not finalized yet")
        assert record.outcome is not None
        params = record.config.params
        k_star = optimal_threshold(params, record.config.n)
        counterfactual = run_trial(record.instance, ThresholdPolicy(k_star), params)
        return {
            "session_id": record.session_id,
            "state": record.state,
            "outcome_class": record.outcome.outcome_class.value,
            "stop_index": record.outcome.stop_index,
            "duration": record.outcome.duration,
            "payoff": record.outcome.payoff,
            "best_index": record.instance.best_index,
            "base_a": record.instance.base_a,
            "values": [str(v) for v in record.instance.values],
            "counterfactual": {
                "threshold": k_star,
                "stop_index": counterfactual.stop_index,
                "outcome_class": counterfactual.outcome_class.value,
                "duration": counterfactual.duration,
                "payoff": counterfactual.payoff,
            },
        }

    def export_records(self, since: str | None = None) -> list[SessionRecord]:
        """Sessions in creation order, optionally filtered by created_ts >= since."""
        with self._registry_lock:
            order = list(self._order)
        records = [self._records[sid] for sid in order if sid in self._records]
        if since is not None:
            records = [r for r in records if r.created_ts >= since]
        return records

    def export_jsonl(self, since: str | None = None) -> Iterator[str]:
        for record in self.export_records(since):
            yield json.dumps(record_to_dict(record))

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
