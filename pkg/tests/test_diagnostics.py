import json
import math

import pytest

from stoplab.core import PayoffParams, harmonic_sum, optimal_threshold
from stoplab.diagnostics import (
    candidate_decisions,
    deviation_report,
    fit_threshold,
    implied_ratio,
    load_session_records,
    render_report_text,
    report_to_dict,
    summarize,
)
from stoplab.sessions import (
    SessionConfig,
    SessionStore,
    fold_session,
    play_session,
    record_to_dict,
)
from stoplab.simulate import NoisyThresholdPolicy, ScriptedPolicy, ThresholdPolicy, never_stop

CLASSICAL = PayoffParams(1.0)


def sessions_from_policy(policy_factory, count, n=40, seed0=0, params=CLASSICAL):
    return [
        play_session(SessionConfig(n=n, params=params, seed=seed0 + i), policy_factory(i))
        for i in range(count)
    ]


def threshold_sessions(r, count, n=40, seed0=0, params=CLASSICAL):
    return sessions_from_policy(lambda i: ThresholdPolicy(r), count, n=n, seed0=seed0, params=params)


class TestSummarize:
    def test_empty(self):
        stats = summarize([])
        assert stats.n_experiments == 0
        assert stats.durations == ()
        assert stats.mean_duration == 0.0

    def test_single_success_at_three(self):
        # script a stop at step 3 on an instance whose best sits at step 3
        for seed in range(50):
            record = play_session(
                SessionConfig(n=6, params=CLASSICAL, seed=seed),
                ScriptedPolicy([False, False, True, False, False, False]),
            )
            if record.instance.best_index == 3:
                stats = summarize([record])
                assert stats.n_experiments == 1
                assert stats.n_success == 1
                assert stats.durations == (3,)
                return
        pytest.fail("no seed produced best_index == 3")

    def test_counts_partition(self):
        records = threshold_sessions(10, 60)
        stats = summarize(records)
        assert stats.n_success + stats.n_reached_end_no_pick + stats.n_wrong_pick == 60
        assert all(1 <= d <= 40 for d in stats.durations)

    def test_rejects_unfinalized(self):
        record = play_session(SessionConfig(n=4, params=CLASSICAL, seed=1), ThresholdPolicy(1))
        unfinished = fold_session(record.events[:3])
        with pytest.raises(ValueError):
            summarize([record, unfinished])

    def test_rejects_mixed_horizons(self):
        a = play_session(SessionConfig(n=4, params=CLASSICAL, seed=1), ThresholdPolicy(1))
        b = play_session(SessionConfig(n=5, params=CLASSICAL, seed=1), ThresholdPolicy(1))
        with pytest.raises(ValueError):
            summarize([a, b])

    def test_permutation_invariant(self):
        records = threshold_sessions(7, 30)
        forward = summarize(records)
        backward = summarize(list(reversed(records)))
        assert forward.n_success == backward.n_success
        assert sorted(forward.durations) == sorted(backward.durations)
        assert forward.mean_duration == backward.mean_duration


class TestFitThreshold:
    @pytest.mark.parametrize("r", [1, 10, 20, 30, 40])
    def test_noiseless_recovery(self, r):
        r_hat, disagreements = fit_threshold(threshold_sessions(r, 40))
        assert (r_hat, disagreements) == (r, 0)

    def test_single_stop_at_first_candidate(self):
        record = play_session(SessionConfig(n=6, params=CLASSICAL, seed=3), ThresholdPolicy(1))
        assert record.outcome.stop_index == 1
        r_hat, disagreements = fit_threshold([record])
        assert (r_hat, disagreements) == (1, 0)

    def test_noisy_recovery(self):
        sessions = sessions_from_policy(
            lambda i: NoisyThresholdPolicy(15, 0.05, seed=1000 + i), 400, n=40
        )
        r_hat, _ = fit_threshold(sessions)
        assert r_hat == 15

    def test_monotone_in_generating_threshold(self):
        fits = [fit_threshold(threshold_sessions(r, 40))[0] for r in (1, 10, 20, 30, 40)]
        assert fits == sorted(fits)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            fit_threshold([])

    def test_candidate_decisions_exclude_non_candidates(self):
        record = play_session(SessionConfig(n=8, params=CLASSICAL, seed=5), never_stop)
        flags = record.instance.candidate_flags()
        decisions = candidate_decisions(record)
        assert [step for step, _ in decisions] == [i + 1 for i, f in enumerate(flags) if f]
        assert all(stopped is False for _, stopped in decisions)


class TestImpliedRatio:
    def test_full_pass_threshold(self):
        n = 12
        (lo, hi), _ = implied_ratio(n, n)
        assert lo == 0.0
        assert hi == pytest.approx(1 / (n - 1))

    def test_classical_interval_contains_true_ratio(self):
        n = 10
        k = optimal_threshold(CLASSICAL, n)
        (lo, hi), _ = implied_ratio(k, n)
        assert lo == pytest.approx(0.99564, abs=1e-5)
        assert hi == pytest.approx(1.32897, abs=1e-5)
        assert lo < CLASSICAL.ratio() <= hi

    def test_unbounded_at_one(self):
        (lo, hi), _ = implied_ratio(1, 10)
        assert lo == pytest.approx(harmonic_sum(1, 10))
        assert hi == math.inf

    def test_point_estimate_inverts_large_n_threshold(self):
        n = 100_000
        r = math.floor(n * math.exp(-2.0)) + 1
        _, point = implied_ratio(r, n)
        assert point == pytest.approx(2.0, abs=1e-3)

    def test_interval_is_ordered(self):
        for n in (2, 5, 30):
            for r in range(1, n + 1):
                (lo, hi), _ = implied_ratio(r, n)
                assert lo < hi

    def test_rejects_domain(self):
        with pytest.raises(ValueError):
            implied_ratio(0, 10)
        with pytest.raises(ValueError):
            implied_ratio(11, 10)


class TestDeviationReport:
    def test_optimal_play_self_consistency(self):
        n = 100
        k = optimal_threshold(CLASSICAL, n)
        records = threshold_sessions(k, 400, n=n, seed0=9000)
        report = deviation_report(records, CLASSICAL, n)
        assert report.r_hat == k
        assert report.optimal_k_star == k
        assert abs(report.deviation_p_win) <= 3 * report.se_p_win + 0.01
        lo, hi = report.implied_ratio_interval
        assert lo < CLASSICAL.ratio() <= hi

    def test_always_stop_first(self):
        n = 100
        records = threshold_sessions(1, 300, n=n, seed0=500)
        report = deviation_report(records, CLASSICAL, n)
        assert report.observed_p_win == pytest.approx(1 / n, abs=3 * report.se_p_win + 1e-9)
        assert report.deviation_p_win == pytest.approx(1 / n - math.exp(-1), abs=0.05)

    def test_never_stop(self):
        n = 30
        records = sessions_from_policy(lambda i: never_stop, 25, n=n)
        report = deviation_report(records, CLASSICAL, n)
        assert report.stats.n_reached_end_no_pick == 25
        assert report.stats.mean_duration == n
        assert report.observed_duration_fraction == 1.0

    def test_report_serialization(self):
        records = threshold_sessions(5, 20, n=20)
        report = deviation_report(records, CLASSICAL, 20)
        payload = report_to_dict(report)
        assert json.loads(json.dumps(payload)) == payload
        text = render_report_text(report)
        assert "r_hat" in text and str(report.r_hat) in text


class TestLoadSessionRecords:
    def test_reads_export_format(self, tmp_path):
        records = threshold_sessions(3, 5, n=10)
        path = tmp_path / "export.jsonl"
        path.write_text("".join(json.dumps(record_to_dict(r)) + "\n" for r in records))
        loaded, errors = load_session_records(path)
        assert errors == []
        assert [r.session_id for r in loaded] == [r.session_id for r in records]

    def test_reads_raw_event_log(self, tmp_path):
        store = SessionStore(tmp_path / "logs")
        sid = store.create(SessionConfig(n=4, params=CLASSICAL, seed=2)).session_id
        while store.get(sid).state != "finalized":
            store.next_observation(sid)
            store.decide(sid, "pass")
        store.close()
        log_file = next(iter((tmp_path / "logs").glob("events-*.jsonl")))
        loaded, errors = load_session_records(log_file)
        assert errors == []
        assert loaded[0].session_id == sid
        assert record_to_dict(loaded[0]) == record_to_dict(store.get(sid))

    def test_reports_malformed_lines(self, tmp_path):
        records = threshold_sessions(2, 2, n=6)
        lines = [json.dumps(record_to_dict(r)) for r in records]
        lines.insert(1, '{"events": [trunc')
        lines.append("[1, 2, 3]")
        path = tmp_path / "mixed.jsonl"
        path.write_text("\n".join(lines) + "\n")
        loaded, errors = load_session_records(path)
        assert len(loaded) == 2
        assert [lineno for lineno, _ in errors] == [2, 4]
