#!/usr/bin/env python3
"""End-to-end dry run of the behavioral pipeline on synthetic participants.

Simulates several participant profiles (optimal, impatient, over-patient,
noisy-optimal) through full sessions, writes each profile's JSONL export,
and prints the diagnostic report the analysis stage would produce for a
real dataset.
"""

import argparse
import json
from pathlib import Path

from stoplab.core import PayoffParams, optimal_threshold
from stoplab.diagnostics import deviation_report, render_report_text
from stoplab.sessions import SessionConfig, play_session, record_to_dict
from stoplab.simulate import NoisyThresholdPolicy, ThresholdPolicy


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--sessions", type=int, default=300)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("participant_runs"))
    args = parser.parse_args()

    params = PayoffParams(1.0, 0.5, 0.5)
    k_star = optimal_threshold(params, args.n)
    profiles = {
        "optimal": lambda i: ThresholdPolicy(k_star),
        "impatient": lambda i: ThresholdPolicy(max(1, k_star // 3)),
        "over_patient": lambda i: ThresholdPolicy(min(args.n, 2 * k_star)),
        "noisy_optimal": lambda i: NoisyThresholdPolicy(k_star, 0.05, seed=args.seed + i),
    }
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, policy_factory in profiles.items():
        records = [
            play_session(
                SessionConfig(n=args.n, params=params, seed=args.seed + 7919 * i),
                policy_factory(i),
            )
            for i in range(args.sessions)
        ]
        path = args.out_dir / f"{name}.jsonl"
        with open(path, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record_to_dict(record)) + "\n")
        report = deviation_report(records, params, args.n)
        print(f"== {name} (optimal k* = {k_star}, log: {path}) ==")
        print(render_report_text(report))
        print()


if __name__ == "__main__":
    main()
