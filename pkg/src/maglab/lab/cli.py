"""Command-line entry point.

    maglab run --config scenario.yaml --out reports/ [--threads N] [--seed S]
    maglab run --scenario free-schrodinger --out reports/
    maglab list-scenarios
    maglab describe SCENARIO
    maglab fixtures --out fixtures.json

Exit code 0 iff every configured assertion of every executed scenario passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import yaml

from .runner import ValidationError, run_config
from .scenarios import SCENARIOS, UnknownScenarioError, describe


def _cmd_run(args) -> int:
    configs = []
    if args.config:
        for path in args.config:
            with open(path) as fh:
                loaded = yaml.safe_load(fh)
            configs.extend(loaded if isinstance(loaded, list) else [loaded])
    for sid in args.scenario or []:
        from .scenarios import scenario_config
        configs.append(scenario_config(sid))
    if not configs:
        print("nothing to run: pass --config and/or --scenario", file=sys.stderr)
        return 2
    if args.seed is not None:
        for cfg in configs:
            cfg["seed"] = args.seed

    def one(cfg):
        return run_config(cfg, args.out)

    if args.threads > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            reports = list(pool.map(one, configs))
    else:
        reports = [one(cfg) for cfg in configs]

    ok = True
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        ok &= rep.passed
        print(f"[{status}] {rep.scenario_id} "
              f"({rep.metadata['wall_clock_s']:.2f}s, {len(rep.assertions)} assertions)")
        for a in rep.assertions:
            mark = "ok " if a["passed"] else "BAD"
            print(f"    {mark} {a['name']}: value={a['value']} tol={a['tolerance']}")
    return 0 if ok else 1


def _cmd_list(_args) -> int:
    for sid in sorted(SCENARIOS):
        print(sid)
    return 0


def _cmd_describe(args) -> int:
    try:
        print(describe(args.scenario))
    except UnknownScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


def _cmd_fixtures(args) -> int:
    from ..oracle import generate_fixtures
    out = Path(args.out) if args.out else None
    fx = generate_fixtures(out)
    if out is None:
        print(json.dumps(fx, indent=2, sort_keys=True))
    else:
        print(f"fixtures written to {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="maglab",
                                     description="magnetic dispersive-estimate laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute scenarios and emit reports")
    p_run.add_argument("--config", action="append", help="YAML scenario config (repeatable)")
    p_run.add_argument("--scenario", action="append", help="builtin scenario id (repeatable)")
    p_run.add_argument("--out", default=None, help="report output directory")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list-scenarios", help="print registered scenario ids")
    p_list.set_defaults(func=_cmd_list)

    p_desc = sub.add_parser("describe", help="print a scenario's parameters and coverage")
    p_desc.add_argument("scenario")
    p_desc.set_defaults(func=_cmd_describe)

    p_fix = sub.add_parser("fixtures", help="regenerate the derived-value fixture file")
    p_fix.add_argument("--out", default=None)
    p_fix.set_defaults(func=_cmd_fixtures)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, UnknownScenarioError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
