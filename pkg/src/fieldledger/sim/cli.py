"""fieldledger-sim: run network scenarios against a live ingestion server."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import ServerUnreachable, run_scenario
from .scenario import InvalidScenario, load_scenario


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fieldledger-sim")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="drive a scenario and write its report")
    run_p.add_argument("--scenario", required=True, help="scenario JSON file")
    run_p.add_argument("--server", required=True, help="base URL, e.g. http://localhost:8080")
    run_p.add_argument("--report", help="write the report JSON here (default: stdout)")
    run_p.add_argument("--workdir", help="directory for SDK queue files (default: temp)")

    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except (OSError, json.JSONDecodeError, InvalidScenario) as exc:
        print(f"bad scenario: {exc}", file=sys.stderr)
        return 2

    try:
        report = run_scenario(scenario, args.server, workdir=args.workdir)
    except ServerUnreachable as exc:
        print(f"server unreachable: {exc}", file=sys.stderr)
        return 3

    body = json.dumps(report.to_wire(), indent=2, sort_keys=True) + "\n"
    if args.report:
        out = Path(args.report)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(body)
    print(
        f"{scenario.name}: generated={report.generated} "
        f"delivered_unique={report.delivered_unique} "
        f"duplicates={report.duplicates_detected_serverside} "
        f"retained={report.final_retained}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
