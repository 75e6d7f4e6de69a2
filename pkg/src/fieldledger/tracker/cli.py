"""`fieldledger-runs`: inspect the run registry."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .runs import RunTracker, UnknownRun


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fieldledger-runs", description="List and inspect recorded runs."
    )
    parser.add_argument(
        "--data-dir",
        default=os.environ.get("FL_DATA_DIR", "./data"),
        help="store root (env FL_DATA_DIR)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="one line per run")
    show = sub.add_parser("show", help="full run document as JSON")
    show.add_argument("run_id")
    show.add_argument(
        "--verify",
        action="store_true",
        help="recompute snapshot digests and report drift",
    )
    args = parser.parse_args(argv)

    tracker = RunTracker(args.data_dir)
    if args.command == "list":
        for run in tracker.list_runs():
            refs = ",".join(f"{r['table']}@{r['version']}" for r in run["snapshot_refs"])
            print(
                f"{run['run_id']}  {run['status']:<8}  {run['name']}"
                f"  [{refs}]  started {run['started']}"
            )
        return 0

    try:
        run = tracker.get_run(args.run_id)
    except UnknownRun:
        print(f"unknown run: {args.run_id}", file=sys.stderr)
        return 1
    print(json.dumps(run, indent=2, sort_keys=True))
    if args.verify:
        mismatches = tracker.verify_snapshots(args.run_id)
        if mismatches:
            print("snapshot drift detected:", file=sys.stderr)
            for m in mismatches:
                print(f"  {m['table']}@{m['version']}: {m['current']}", file=sys.stderr)
            return 1
        print("snapshots verified: all digests match", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
