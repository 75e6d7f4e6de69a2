"""fieldledger-store: inspect tables on disk without touching them."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .table import Store, UnknownTable, UnknownVersion


def _data_dir(args) -> Path:
    return Path(args.data_dir or os.environ.get("FL_DATA_DIR", "./data"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fieldledger-store")
    parser.add_argument("--data-dir", help="store root (env FL_DATA_DIR, default ./data)")
    sub = parser.add_subparsers(dest="command", required=True)

    hist = sub.add_parser("history", help="list a table's commit log")
    hist.add_argument("table")

    read = sub.add_parser("read", help="print rows as NDJSON")
    read.add_argument("table")
    read.add_argument("--version", type=int, help="snapshot version (default: latest)")

    verify = sub.add_parser("verify", help="re-hash files and check log continuity")
    verify.add_argument("table", nargs="?", help="one table (default: all)")

    tables = sub.add_parser("tables", help="list table names")

    args = parser.parse_args(argv)
    store = Store(_data_dir(args))
    try:
        if args.command == "history":
            for record in store.open_table(args.table).history():
                print(json.dumps(record.to_wire(), sort_keys=True))
            return 0
        if args.command == "read":
            table = store.open_table(args.table)
            version = table.latest() if args.version is None else args.version
            for row in table.read_at(version):
                print(json.dumps(row, ensure_ascii=False, sort_keys=True))
            return 0
        if args.command == "tables":
            for name in store.table_names():
                print(name)
            return 0
        # verify
        names = [args.table] if args.table else store.table_names()
        dirty = False
        for name in names:
            report = store.open_table(name).verify()
            print(json.dumps(report.to_wire(), sort_keys=True))
            dirty = dirty or not report.clean
        return 1 if dirty else 0
    except (UnknownTable, UnknownVersion) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
