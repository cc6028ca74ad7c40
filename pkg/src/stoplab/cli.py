"""Researcher-facing command line: solve tables, Monte Carlo, serving, log analysis.

Exit codes: 0 success, 1 validation problem (bad flags, bad parameters,
malformed input lines), 2 I/O problem (unreadable paths, busy ports).
Table output rounds to 6 significant digits; json and csv carry full
precision.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from .core import (
    InvalidParamsError,
    PayoffParams,
    asymptotic_duration,
    asymptotics,
    closed_form_value,
    solve,
    stop_probability,
)
from .diagnostics import (
    deviation_report,
    load_session_records,
    render_report_text,
    report_to_dict,
    summarize,
)
from .simulate import DEFAULT_HORIZON_CAP, monte_carlo

FORMATS = ("table", "json", "csv")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; map that onto the validation code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(value) -> str:
    if isinstance(value, bool) or not isinstance(value, float):
        return str(value)
    return f"{value:.6g}"


def _render_kv(pairs: list[tuple[str, object]]) -> str:
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k:<{width}}  {_fmt(v)}" for k, v in pairs)


def _render_table(headers: list[str], rows: list[list[object]]) -> str:
    cells = [[_fmt(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in cells:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def _csv_block(headers: list[str], rows: list[list[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def _params_from(args) -> PayoffParams:
    return PayoffParams(args.alpha, args.beta, args.gamma)


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=1.0, help="reward for picking the best")
    parser.add_argument("--beta", type=float, default=0.0, help="penalty for a wrong pick")
    parser.add_argument("--gamma", type=float, default=0.0, help="penalty for no pick")


def solve_payload(params: PayoffParams, n: int) -> dict:
    solution = solve(params, n)
    limits = asymptotics(params)
    closed = [closed_form_value(params, n, k, k_star=solution.k_star) for k in range(1, n + 1)]
    max_diff = max(abs(c - v) for c, v in zip(closed, solution.values))
    table = [
        {
            "k": k,
            "g": solution.g[k - 1],
            "value_dp": solution.values[k - 1],
            "value_closed": closed[k - 1],
            "duration": solution.durations[k - 1],
            "duration_limit_fraction": asymptotic_duration(params, k / n),
        }
        for k in range(1, n + 1)
    ]
    return {
        "alpha": params.alpha,
        "beta": params.beta,
        "gamma": params.gamma,
        "n": n,
        "k_star": solution.k_star,
        "t_star": limits.t_star,
        "v_limit": limits.v_limit,
        "p_win_limit": limits.p_win,
        "mean_duration_fraction": limits.mean_duration_fraction,
        "stop_probability": stop_probability(params, n),
        "max_abs_diff": max_diff,
        "table": table,
    }


_TABLE_COLUMNS = ["k", "g", "value_dp", "value_closed", "duration", "duration_limit_fraction"]


def _cmd_solve(args) -> int:
    params = _params_from(args)
    payload = solve_payload(params, args.n)
    summary = [(k, payload[k]) for k in payload if k != "table"]
    rows = [[row[c] for c in _TABLE_COLUMNS] for row in payload["table"]]
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    elif args.format == "csv":
        keys = [k for k, _ in summary]
        print(_csv_block(keys, [[payload[k] for k in keys]]))
        print(_csv_block(_TABLE_COLUMNS, rows), end="")
    else:
        print(_render_kv(summary))
        print()
        print(_render_table(_TABLE_COLUMNS, rows))
    return 0


def simulate_payload(params: PayoffParams, n: int, trials: int, seed: int, threshold, workers: int) -> dict:
    report = monte_carlo(params, n, trials, seed, threshold=threshold, workers=workers)
    limits = asymptotics(params)
    payload = report.to_dict()
    payload["predicted_p_win_limit"] = limits.p_win
    payload["z_p_win"] = (report.p_win - limits.p_win) / report.se_win if report.se_win else float("nan")
    payload["predicted_duration_fraction"] = limits.mean_duration_fraction
    duration_fraction = report.mean_duration / n
    se_fraction = report.se_duration / n
    payload["mean_duration_fraction"] = duration_fraction
    payload["z_duration_fraction"] = (
        (duration_fraction - limits.mean_duration_fraction) / se_fraction if se_fraction else float("nan")
    )
    payload["stop_probability_formula"] = stop_probability(params, n)
    return payload


def _cmd_simulate(args) -> int:
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return 1
    params = _params_from(args)
    payload = simulate_payload(params, args.n, args.trials, args.seed, args.threshold, args.workers)
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    elif args.format == "csv":
        keys = list(payload)
        print(_csv_block(keys, [[payload[k] for k in keys]]), end="")
    else:
        print(_render_kv(list(payload.items())))
    return 0


def _cmd_serve(args) -> int:
    from .service import run_server

    try:
        run_server(host=args.host, port=args.port, log_dir=args.log_dir, horizon_cap=args.horizon_cap)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit:  # uvicorn exits itself on startup failures such as a busy port
        print("error: server failed to start", file=sys.stderr)
        return 2
    return 0


def _cmd_analyze(args) -> int:
    try:
        records, errors = load_session_records(args.input)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for lineno, message in errors:
        print(f"{args.input}:{lineno}: {message}", file=sys.stderr)
    if not records:
        stats = summarize([])
        payload = {
            "n_experiments": 0,
            "n_success": 0,
            "n_reached_end_no_pick": 0,
            "n_wrong_pick": 0,
            "mean_duration": stats.mean_duration,
        }
        if args.format == "json":
            print(json.dumps(payload, indent=2))
        elif args.format == "csv":
            print(_csv_block(list(payload), [[payload[k] for k in payload]]), end="")
        else:
            print(_render_kv(list(payload.items())))
        return 1 if errors else 0
    if args.alpha is not None:
        params = PayoffParams(args.alpha, args.beta or 0.0, args.gamma or 0.0)
    else:
        configured = {r.config.params for r in records}
        if len(configured) != 1:
            print("error: sessions carry mixed payoff params; pass --alpha/--beta/--gamma", file=sys.stderr)
            return 1
        params = configured.pop()
    report = deviation_report(records, params, records[0].config.n)
    if args.format == "json":
        print(json.dumps(report_to_dict(report), indent=2))
    elif args.format == "csv":
        payload = report_to_dict(report)
        print(_csv_block(list(payload), [[payload[k] for k in payload]]), end="")
    else:
        print(render_report_text(report))
    return 1 if errors else 0


def build_parser() -> _Parser:
    parser = _Parser(prog="stoplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="exact tables for one payoff triple")
    _add_param_flags(p_solve)
    p_solve.add_argument("--n", type=int, required=True, help="horizon")
    p_solve.add_argument("--format", choices=FORMATS, default="table")
    p_solve.set_defaults(func=_cmd_solve)

    p_sim = sub.add_parser("simulate", help="Monte Carlo run with analytic z-scores")
    _add_param_flags(p_sim)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--trials", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--threshold", type=int, default=None, help="override the optimal threshold")
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--format", choices=FORMATS, default="table")
    p_sim.set_defaults(func=_cmd_simulate)

    p_serve = sub.add_parser("serve", help="run the live experiment API")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--log-dir", default=None)
    p_serve.add_argument("--horizon-cap", type=int, default=None, help=f"default {DEFAULT_HORIZON_CAP}")
    p_serve.set_defaults(func=_cmd_serve)

    p_an = sub.add_parser("analyze", help="diagnostics over a JSONL session log")
    p_an.add_argument("--input", required=True, help="path to an export or raw event log")
    p_an.add_argument("--alpha", type=float, default=None)
    p_an.add_argument("--beta", type=float, default=None)
    p_an.add_argument("--gamma", type=float, default=None)
    p_an.add_argument("--format", choices=FORMATS, default="table")
    p_an.set_defaults(func=_cmd_analyze)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InvalidParamsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
