"""Command-line entry point: graph generation, runs, aggregation, reports.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .graph import GraphError, gen_erdos_renyi, save_edge_list
from .harness import (
    ConfigError,
    HarnessError,
    aggregate_dir,
    load_config,
    read_aggregate_csv,
    run_to_dir,
    write_aggregate_csv,
)

JOBS_ENV_VAR = "CWIM_JOBS"


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwim",
        description="Online influence maximization experiments under corrupted users.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-graph", help="write a random directed graph as an edge list")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--p-edge", type=float, required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default=None, help="defaults to out_dir from the config")
    p_run.add_argument("--force", action="store_true", help="overwrite an existing out-dir")
    p_run.add_argument("--jobs", type=int, default=_default_jobs())

    p_agg = sub.add_parser("aggregate", help="re-aggregate per-run CSVs from a run directory")
    p_agg.add_argument("--in-dir", required=True)
    p_agg.add_argument("--out", required=True)

    p_rep = sub.add_parser("report", help="plain-text summary of aggregate CSVs")
    p_rep.add_argument("--in", dest="inputs", nargs="+", required=True)
    p_rep.add_argument("--out", required=True)
    return parser


def _cmd_gen_graph(args) -> int:
    g = gen_erdos_renyi(args.n, args.p_edge, args.seed)
    save_edge_list(g, args.out)
    print(f"wrote {args.out}: n={g.n} m={g.m}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = args.out_dir or cfg.out_dir
    if not out_dir:
        raise ConfigError("no output directory: pass --out-dir or set out_dir in the config")
    result = run_to_dir(cfg, out_dir, force=args.force, jobs=args.jobs)
    final = result.aggregate_rows[-1]
    print(
        f"{cfg.algorithm}: {cfg.runs} runs x {cfg.horizon} rounds, "
        f"final mean cumulative regret {final[2]:.3f} +- {final[3]:.3f} -> {out_dir}"
    )
    return 0


def _cmd_aggregate(args) -> int:
    rows = aggregate_dir(args.in_dir)
    write_aggregate_csv(args.out, rows)
    print(f"wrote {args.out}: {len(rows)} rows")
    return 0


def render_report(csv_paths: Sequence[str]) -> str:
    """Final-round regret summary per algorithm, best (lowest) first."""
    finals = []
    for path in csv_paths:
        rows = read_aggregate_csv(path)
        if not rows:
            raise HarnessError(f"{path}: no data rows")
        t, algorithm, mean_cum, stderr, mean_reward, reward_stderr = rows[-1]
        finals.append((algorithm, t, mean_cum, stderr, mean_reward, reward_stderr))
    finals.sort(key=lambda row: row[2])
    width = max(len("algorithm"), max(len(f[0]) for f in finals))
    lines = [
        f"{'algorithm':<{width}}  {'final_t':>7}  {'mean_cum_regret':>16}  {'stderr':>10}  {'mean_reward':>12}",
        f"{'-' * width}  {'-' * 7}  {'-' * 16}  {'-' * 10}  {'-' * 12}",
    ]
    for algorithm, t, mean_cum, stderr, mean_reward, _ in finals:
        lines.append(
            f"{algorithm:<{width}}  {t:>7}  {mean_cum:>16.4f}  {stderr:>10.4f}  {mean_reward:>12.4f}"
        )
    return "\n".join(lines) + "\n"


def _cmd_report(args) -> int:
    text = render_report(args.inputs)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; fold into the config-error code
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "gen-graph":
            return _cmd_gen_graph(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "aggregate":
            return _cmd_aggregate(args)
        if args.command == "report":
            return _cmd_report(args)
        parser.print_usage(sys.stderr)
        return 1
    except (ConfigError, GraphError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
