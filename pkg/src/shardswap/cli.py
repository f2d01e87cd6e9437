"""Command-line entry point: ``shardswap run | replay | quote | list``."""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .amm import AmmError, quote
from .coordinator import RouteError
from .fixed import fmt, fmt2, to_units
from .scenario import ScenarioError, bundled, check, load
from .sim import ConfigError, Simulation, Trace

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ASSERT = 2
EXIT_DIVERGED = 3

TRACE_DIR_ENV = "SHARDSWAP_TRACE_DIR"


def _simulate(scenario_ref: str, seed: int | None) -> tuple:
    scenario = load(scenario_ref).with_seed(seed)
    trace = Simulation(scenario.config, scenario.requests).run()
    return scenario, trace


def _summary(scenario, trace: Trace, out=None) -> None:
    out = out or sys.stdout
    print(f"scenario {scenario.name} (seed {scenario.config.seed}): {len(trace.records)} trace records", file=out)
    by_id = {r.request_id: r for r in scenario.requests}
    for rid, res in trace.results.items():
        req = by_id[rid]
        if res.status in ("executed", "realized"):
            detail = f"output {fmt(res.output)} {req.output_asset} (~{fmt2(res.output, 3)})"
        else:
            detail = f"refund {fmt(res.refund)} {req.input_asset}"
            if res.reason:
                detail += f" [{res.reason}]"
        print(f"  {rid}: {res.status} {detail}", file=out)
    for pool in trace.pools.values():
        x, y = pool.pair
        print(
            f"  shard {pool.shard} {x}/{y}: actual <{fmt(pool.actual[0])}, {fmt(pool.actual[1])}>"
            f" virtual <{fmt(pool.virtual[0])}, {fmt(pool.virtual[1])}> pending {len(pool.locks)}",
            file=out,
        )


def cmd_run(args) -> int:
    try:
        scenario, trace = _simulate(args.scenario, args.seed)
    except (ScenarioError, ConfigError, RouteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.trace:
        path = Path(args.trace)
    else:
        path = Path(os.environ.get(TRACE_DIR_ENV, ".")) / f"{Path(args.scenario).stem}.trace.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    trace.write(path)
    _summary(scenario, trace)
    print(f"trace written to {path}")
    failures = check(scenario, trace)
    for f in failures:
        print(f"ASSERTION FAILED: {f}")
    return EXIT_ASSERT if failures else EXIT_OK


def cmd_replay(args) -> int:
    try:
        recorded = Path(args.trace).read_text().splitlines()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        _, trace = _simulate(args.scenario, args.seed)
    except (ScenarioError, ConfigError, RouteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    replayed = trace.lines()
    for i, (want, got) in enumerate(zip(recorded, replayed)):
        if want != got:
            print(f"divergence at record {i}:\n  recorded: {want}\n  replayed: {got}")
            return EXIT_DIVERGED
    if len(recorded) != len(replayed):
        i = min(len(recorded), len(replayed))
        print(f"divergence at record {i}: recorded {len(recorded)} records, replayed {len(replayed)}")
        return EXIT_DIVERGED
    print(f"replay identical: {len(replayed)} records")
    return EXIT_OK


def cmd_quote(args) -> int:
    try:
        out = quote(to_units(args.reserve_in), to_units(args.reserve_out), to_units(args.delta_in),
                    to_units(args.gamma))
    except (AmmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(fmt(out))
    print(fmt2(out))
    return EXIT_OK


def cmd_list(args) -> int:
    for name in sorted(bundled()):
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shardswap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write its trace")
    p.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--trace", default=None, help=f"trace output path (default: ${TRACE_DIR_ENV} or .)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-run a scenario and diff against a recorded trace")
    p.add_argument("trace")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("quote", help="constant-product output for one swap")
    p.add_argument("reserve_in")
    p.add_argument("reserve_out")
    p.add_argument("delta_in")
    p.add_argument("--gamma", default="1", help="retained fraction of the input (fee = 1 - gamma)")
    p.set_defaults(func=cmd_quote)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
