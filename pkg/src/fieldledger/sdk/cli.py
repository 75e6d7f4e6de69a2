"""fieldledger-sdk: drive one SDK instance through a scenario's link conditions.

The events file is NDJSON, one action per line:

    {"t_s": 12.5, "kind": "page_view", "payload": {"page_id": "home"}, "user_id": "u1"}

Events are logged at their simulated instants; flushes run on a fixed cadence
under the scenario's segments, exactly as the harness would schedule them.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import tempfile
from pathlib import Path

from ..sim.harness import SIM_EPOCH_MS, SimClock, connectivity_provider
from ..sim.scenario import InvalidScenario, load_scenario
from ..sim.transport import SimTransport
from .client import LocalValidationFailed, SdkClient
from .queue import QueueFull
from .transport import HttpTransport


def _load_events(path: str) -> list[dict]:
    specs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            for key in ("t_s", "kind", "payload", "user_id"):
                if key not in doc:
                    raise ValueError(f"line {lineno}: missing {key!r}")
            specs.append(doc)
    specs.sort(key=lambda d: d["t_s"])
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fieldledger-sdk")
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument("--events", required=True, help="NDJSON event actions")
    parser.add_argument("--server", required=True, help="base URL of the ingestion server")
    parser.add_argument("--queue", help="queue file path (default: temp)")
    parser.add_argument("--flush-every", type=float, default=5.0, metavar="S")
    parser.add_argument("--app-id", default="cli")
    parser.add_argument("--device-id", default="cli-dev")

    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        specs = _load_events(args.events)
    except (OSError, ValueError, InvalidScenario) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return 2

    tmp = None
    queue_path = args.queue
    if queue_path is None:
        tmp = tempfile.TemporaryDirectory(prefix="fieldledger-sdk-")
        queue_path = Path(tmp.name) / "events.queue"

    clock = SimClock()
    rng = random.Random(scenario.seed)
    sdk = SdkClient(
        queue_path,
        app_id=args.app_id,
        device_id=args.device_id,
        clock_ms=clock.now_ms,
        connectivity=connectivity_provider(scenario, clock),
        rng=rng,
    )
    http = HttpTransport(args.server)
    transport = SimTransport(http, scenario, clock.t_s, rng)

    duration_ms = int(scenario.duration_s * 1000)
    flush_ms = max(1, int(args.flush_every * 1000))
    actions = [(min(int(s["t_s"] * 1000), duration_ms - 1), 0, s) for s in specs]
    actions += [(t, 1, None) for t in range(flush_ms, duration_ms, flush_ms)]
    actions.sort(key=lambda a: (a[0], a[1]))

    totals = {"logged": 0, "refused": 0, "accepted": 0, "duplicates": 0,
              "rejected": 0, "batches_sent": 0}
    try:
        for t_ms, phase, spec in actions:
            clock.ms = SIM_EPOCH_MS + t_ms
            if phase == 0:
                try:
                    sdk.log_event(spec["kind"], spec["payload"], spec["user_id"])
                    totals["logged"] += 1
                except (LocalValidationFailed, QueueFull) as exc:
                    totals["refused"] += 1
                    print(f"refused at t={t_ms / 1000}s: {exc}", file=sys.stderr)
            else:
                report = sdk.flush(transport)
                totals["accepted"] += report.accepted
                totals["duplicates"] += report.duplicates
                totals["rejected"] += report.rejected
                totals["batches_sent"] += report.batches_sent
        totals["final_retained"] = len(sdk.queue)
    finally:
        http.close()
        if tmp is not None:
            tmp.cleanup()

    print(json.dumps(totals, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
