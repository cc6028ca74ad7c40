import json

import pytest

from stoplab.core import PayoffParams
from stoplab.sessions import (
    CHOICE_PASS,
    CHOICE_STOP,
    EVENT_CREATED,
    EVENT_DECISION,
    LogCorruptionError,
    ProtocolError,
    STATE_FINALIZED,
    SessionConfig,
    SessionStore,
    UnknownSessionError,
    fold_session,
    play_session,
    record_from_dict,
    record_to_dict,
)
from stoplab.simulate import OutcomeClass, ScriptedPolicy, ThresholdPolicy, never_stop, run_trial

CLASSICAL = PayoffParams(1.0)


def config(n=8, seed=42, **kw):
    return SessionConfig(n=n, params=kw.pop("params", CLASSICAL), seed=seed, **kw)


def walk_to_finalized(store, session_id, stop_at=None):
    """Drive a stored session: pass everywhere except an optional stop step."""
    while store.get(session_id).state != STATE_FINALIZED:
        payload = store.next_observation(session_id)
        choice = CHOICE_STOP if payload["step"] == stop_at else CHOICE_PASS
        store.decide(session_id, choice)
    return store.get(session_id)


class TestStoreProtocol:
    def test_create_reveals_nothing(self):
        store = SessionStore()
        record = store.create(config())
        assert record.cursor == 0
        assert record.state == "created"
        assert len(record.session_id) == 32

    def test_same_seed_same_instance_distinct_ids(self):
        store = SessionStore()
        a = store.create(config(seed=7))
        b = store.create(config(seed=7))
        assert a.instance == b.instance
        assert a.session_id != b.session_id

    def test_horizon_cap(self):
        store = SessionStore(horizon_cap=10)
        with pytest.raises(ValueError):
            store.create(config(n=11))

    def test_reveal_requires_answer_first(self):
        store = SessionStore()
        sid = store.create(config()).session_id
        store.next_observation(sid)
        with pytest.raises(ProtocolError) as err:
            store.next_observation(sid)
        assert err.value.code == "decision_required"

    def test_decision_requires_pending_observation(self):
        store = SessionStore()
        sid = store.create(config()).session_id
        with pytest.raises(ProtocolError) as err:
            store.decide(sid, CHOICE_PASS)
        assert err.value.code == "no_pending_decision"

    def test_unknown_session(self):
        store = SessionStore()
        with pytest.raises(UnknownSessionError):
            store.next_observation("deadbeef")

    def test_first_observation_is_candidate(self):
        store = SessionStore()
        sid = store.create(config()).session_id
        payload = store.next_observation(sid)
        assert payload["step"] == 1
        assert payload["is_candidate"] is True

    def test_stop_on_maximum_is_success(self):
        store = SessionStore()
        record = store.create(config(seed=13))
        final = walk_to_finalized(store, record.session_id, stop_at=record.instance.best_index)
        assert final.outcome.outcome_class is OutcomeClass.SUCCESS
        assert final.outcome.payoff == CLASSICAL.alpha

    def test_stop_elsewhere_is_wrong_pick(self):
        params = PayoffParams(1.0, 2.0, 0.0)
        store = SessionStore()
        record = store.create(config(seed=13, params=params))
        wrong = 1 if record.instance.best_index != 1 else 2
        final = walk_to_finalized(store, record.session_id, stop_at=wrong)
        assert final.outcome.outcome_class is OutcomeClass.WRONG_PICK
        assert final.outcome.payoff == -2.0

    def test_pass_through_is_no_pick(self):
        params = PayoffParams(1.0, 0.0, 1.5)
        store = SessionStore()
        record = store.create(config(seed=13, params=params))
        final = walk_to_finalized(store, record.session_id)
        assert final.outcome.outcome_class is OutcomeClass.NO_PICK
        assert final.outcome.duration == record.config.n
        assert final.outcome.payoff == -1.5

    def test_no_activity_after_finalization(self):
        store = SessionStore()
        record = store.create(config(seed=13))
        walk_to_finalized(store, record.session_id, stop_at=1)
        with pytest.raises(ProtocolError):
            store.next_observation(record.session_id)
        with pytest.raises(ProtocolError):
            store.decide(record.session_id, CHOICE_PASS)

    def test_result_requires_finalization(self):
        store = SessionStore()
        sid = store.create(config()).session_id
        with pytest.raises(ProtocolError) as err:
            store.result(sid)
        assert err.value.code == "not_finalized"

    def test_result_discloses_and_replays_counterfactual(self):
        store = SessionStore()
        record = store.create(config(seed=99))
        walk_to_finalized(store, record.session_id, stop_at=2)
        result = store.result(record.session_id)
        assert result["best_index"] == record.instance.best_index
        assert [int(v) for v in result["values"]] == list(record.instance.values)
        expected = run_trial(record.instance, ThresholdPolicy(result["counterfactual"]["threshold"]), CLASSICAL)
        assert result["counterfactual"]["stop_index"] == expected.stop_index
        assert result["counterfactual"]["outcome_class"] == expected.outcome_class.value

    def test_decision_metadata_logged_verbatim(self):
        store = SessionStore()
        sid = store.create(config()).session_id
        store.next_observation(sid)
        meta = {"latency_ms": 412.5, "client": "test"}
        record = store.decide(sid, CHOICE_PASS, metadata=meta)
        decision = [e for e in record.events if e.kind == EVENT_DECISION][-1]
        assert decision.payload["metadata"] == meta


class TestEventSourcing:
    def test_record_is_pure_fold_of_events(self):
        record = play_session(config(), ThresholdPolicy(3))
        refolded = fold_session(record.events)
        assert record_to_dict(refolded) == record_to_dict(record)

    def test_jsonl_round_trip(self):
        record = play_session(config(), ThresholdPolicy(3))
        line = json.dumps(record_to_dict(record))
        assert record_to_dict(record_from_dict(json.loads(line))) == record_to_dict(record)

    def test_play_session_matches_store_driven_session(self):
        # same decisions through both paths yield identical event payloads
        decisions = [False, False, True] + [False] * 5
        played = play_session(config(seed=21), ScriptedPolicy(decisions), session_id="fixed")
        store = SessionStore()
        record = store.create(config(seed=21))
        while store.get(record.session_id).state != STATE_FINALIZED:
            payload = store.next_observation(record.session_id)
            choice = CHOICE_STOP if decisions[payload["step"] - 1] else CHOICE_PASS
            store.decide(record.session_id, choice)
        stored = store.get(record.session_id)
        strip = lambda rec: [
            (e.step, e.kind, {k: v for k, v in e.payload.items() if k not in ("session_id", "created_ts")})
            for e in rec.events
        ]
        assert strip(played) == strip(stored)

    def test_outcome_matches_run_trial_classification(self):
        decisions = [False, True] + [False] * 6
        record = play_session(config(seed=77), ScriptedPolicy(decisions))
        trial = run_trial(record.instance, ScriptedPolicy(decisions), CLASSICAL)
        assert record.outcome == trial

    def test_fold_rejects_tampered_log(self):
        record = play_session(config(), ThresholdPolicy(3))
        events = list(record.events)
        bad = events[1]
        events[1] = type(bad)(step=bad.step, kind=bad.kind, payload={**bad.payload, "value": "1"})
        with pytest.raises(LogCorruptionError):
            fold_session(events)

    def test_fold_rejects_out_of_order(self):
        record = play_session(config(), ThresholdPolicy(3))
        events = [record.events[0]] + record.events[2:]
        with pytest.raises(LogCorruptionError):
            fold_session(events)


class TestPersistence:
    def test_recovery_replays_log(self, tmp_path):
        store = SessionStore(tmp_path)
        a = store.create(config(seed=1))
        walk_to_finalized(store, a.session_id, stop_at=3)
        b = store.create(config(seed=2))
        store.next_observation(b.session_id)  # left mid-flight
        exported = list(store.export_jsonl())

        recovered = SessionStore(tmp_path)
        assert list(recovered.export_jsonl()) == exported
        assert recovered.get(b.session_id).cursor == 1
        assert recovered.get(b.session_id).pending_decision
        # the recovered mid-flight session remains playable
        recovered.decide(b.session_id, CHOICE_PASS)

    def test_created_event_durable_before_ack(self, tmp_path):
        store = SessionStore(tmp_path)
        record = store.create(config(seed=1))
        files = list(tmp_path.glob("events-*.jsonl"))
        assert files
        first = json.loads(files[0].read_text().splitlines()[0])
        assert first["kind"] == EVENT_CREATED
        assert first["session_id"] == record.session_id

    def test_torn_tail_is_ignored(self, tmp_path):
        store = SessionStore(tmp_path)
        a = store.create(config(seed=1))
        walk_to_finalized(store, a.session_id, stop_at=1)
        store.close()
        path = next(iter(tmp_path.glob("events-*.jsonl")))
        with open(path, "a", encoding="utf-8") as handle:
            handle.write('{"session_id": "xyz", "seq": 0, "truncat')
        recovered = SessionStore(tmp_path)
        assert recovered.get(a.session_id).state == STATE_FINALIZED

    def test_export_filter_and_order(self, tmp_path):
        store = SessionStore(tmp_path)
        ids = [store.create(config(seed=s)).session_id for s in range(3)]
        records = store.export_records()
        assert [r.session_id for r in records] == ids
        assert store.export_records(since="9999-01-01") == []
        cutoff = records[1].created_ts
        assert all(r.created_ts >= cutoff for r in store.export_records(since=cutoff))

    def test_empty_export(self):
        assert list(SessionStore().export_jsonl()) == []


class TestPlaySession:
    def test_never_stop_passes_everything(self):
        record = play_session(config(n=5), never_stop)
        assert record.outcome.outcome_class is OutcomeClass.NO_PICK
        assert record.cursor == 5

    def test_policy_sees_only_candidate_flags(self):
        seen = []

        def spy(step, n, is_candidate):
            seen.append((step, n, is_candidate))
            return False

        record = play_session(config(n=4, seed=11), spy)
        assert [s for s, _, _ in seen] == [1, 2, 3, 4]
        assert all(n == 4 for _, n, _ in seen)
        assert [c for _, _, c in seen] == list(record.instance.candidate_flags())
