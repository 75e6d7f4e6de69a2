"""`fieldledger-pipeline`: run the transforms or inspect a run's checks."""

from __future__ import annotations

import argparse
import json
import os
import sys

from ..tracker import RunTracker, UnknownRun
from .runner import ChecksFailed, load_reports, run_pipeline


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fieldledger-pipeline",
        description="Deterministic event-to-metrics pipeline.",
    )
    parser.add_argument(
        "--data-dir",
        default=os.environ.get("FL_DATA_DIR", "./data"),
        help="store root (env FL_DATA_DIR)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="recompute all output tables")
    run.add_argument("--events-version", type=int, default=None)
    run.add_argument("--flags-version", type=int, default=None)
    run.add_argument("--gap-minutes", type=int, default=30)

    checks = sub.add_parser("checks", help="print a run's check reports")
    checks.add_argument("--run", required=True, dest="run_id")

    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            result = run_pipeline(
                args.data_dir,
                events_version=args.events_version,
                flags_version=args.flags_version,
                gap_minutes=args.gap_minutes,
            )
        except ChecksFailed as exc:
            print(f"checks failed at stage {exc.report.stage}:", file=sys.stderr)
            print(json.dumps(exc.report.to_wire(), indent=2), file=sys.stderr)
            return 1
        print(json.dumps(result, indent=2, sort_keys=True))
        return 0

    tracker = RunTracker(args.data_dir)
    try:
        reports = load_reports(tracker, args.run_id)
    except UnknownRun:
        print(f"unknown run: {args.run_id}", file=sys.stderr)
        return 1
    print(json.dumps(reports, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
