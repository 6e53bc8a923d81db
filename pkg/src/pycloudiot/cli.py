"""Command-line interface.

Subcommands:
    simulate   run one scenario, emit per-task CSV and a JSON summary
    sweep      run a scenario across an axis (duty_cycle | cluster_size | task_size)
    partition  cluster a node list (JSON) and print the plan
    energy     evaluate the duty-cycle energy model
    serve      run a live HTTP-gateway deployment backed by simulated workers
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .energy import EnergyParams, energy_joules, reduction_vs_always_on
from .partitioner import partition
from .registry import NodeDescriptor
from .simulation import Scenario, report_to_csv, run_scenario, sweep


def _cmd_simulate(args) -> int:
    scenario = Scenario.from_file(args.scenario) if args.scenario else Scenario()
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    report = run_scenario(scenario)
    csv_text = report_to_csv([report])
    if args.out:
        Path(args.out).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    print(json.dumps(report.summary(), indent=2, sort_keys=True), file=sys.stderr)
    return 0


def _parse_values(axis: str, raw: list[str]) -> list:
    return [float(v) if axis == "duty_cycle" else int(v) for v in raw]


def _cmd_sweep(args) -> int:
    base = Scenario.from_file(args.scenario) if args.scenario else Scenario()
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    reports = sweep(base, args.axis, _parse_values(args.axis, args.values))
    csv_text = report_to_csv(reports)
    if args.out:
        Path(args.out).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    summaries = [r.summary() for r in reports]
    print(json.dumps(summaries, indent=2, sort_keys=True), file=sys.stderr)
    return 0


def _cmd_partition(args) -> int:
    raw = Path(args.nodes).read_text() if args.nodes != "-" else sys.stdin.read()
    entries = json.loads(raw)
    nodes = [NodeDescriptor(node_id=e["node_id"], period_s=e["period_s"],
                            awake_fraction=e["awake_fraction"],
                            last_seen_s=e["last_seen_s"]) for e in entries]
    plan = partition(nodes, now=args.now)
    print(json.dumps({
        "generation": plan.generation,
        "clusters": [
            {"cluster_id": c.cluster_id, "leader": c.leader, "members": list(c.members)}
            for c in plan.clusters
        ],
    }, indent=2, sort_keys=True))
    return 0


def _cmd_energy(args) -> int:
    params = EnergyParams(i_active_a=args.i_active, i_sleep_a=args.i_sleep,
                          voltage_v=args.voltage)
    active = args.dc * args.duration
    sleep = args.duration - active
    print(json.dumps({
        "duty_cycle": args.dc,
        "duration_s": args.duration,
        "active_s": active,
        "sleep_s": sleep,
        "energy_j": energy_joules(active, sleep, params),
        "always_on_j": energy_joules(args.duration, 0.0, params),
        "reduction_vs_always_on_pct": reduction_vs_always_on(args.dc, args.duration, params),
    }, indent=2, sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    from .gateway import serve
    serve(host=args.host, port=args.port, node_count=args.nodes,
          awake_fraction=args.dc, period_s=args.period,
          vote_mode=args.vote_mode, worker_op_cost_s=args.op_cost,
          broker_url=args.broker)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pycloudiot")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    p.add_argument("--scenario", help="scenario file (.json or .toml)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a scenario across an axis")
    p.add_argument("--scenario", help="base scenario file")
    p.add_argument("--axis", required=True,
                   choices=["duty_cycle", "cluster_size", "task_size"])
    p.add_argument("--values", required=True, nargs="+")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("partition", help="cluster a node list")
    p.add_argument("nodes", help="JSON node list path, or - for stdin")
    p.add_argument("--now", type=float, default=0.0)
    p.set_defaults(fn=_cmd_partition)

    p = sub.add_parser("energy", help="duty-cycle energy model")
    p.add_argument("--dc", type=float, required=True, help="awake fraction in (0, 1]")
    p.add_argument("--duration", type=float, default=3600.0)
    p.add_argument("--i-active", type=float, default=EnergyParams().i_active_a)
    p.add_argument("--i-sleep", type=float, default=EnergyParams().i_sleep_a)
    p.add_argument("--voltage", type=float, default=EnergyParams().voltage_v)
    p.set_defaults(fn=_cmd_energy)

    p = sub.add_parser("serve", help="live HTTP gateway deployment")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8099)
    p.add_argument("--nodes", type=int, default=5)
    p.add_argument("--dc", type=float, default=1.0)
    p.add_argument("--period", type=float, default=1.0)
    p.add_argument("--vote-mode", default="dispatcher", choices=["dispatcher", "leader"])
    p.add_argument("--op-cost", type=float, default=1e-6)
    p.add_argument("--broker", default=None,
                   help="mqtt://host:port to back the bus with an external broker")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
