#!/usr/bin/env python3
"""End-to-end smoke drive: real server, real SDK, HTTP only.

Starts fieldledger-server on a fresh data dir, ships events through the
SDK queue, runs the pipeline CLI twice around a curation flag, and checks
the KPI view moved at exactly the flagged date. Exits nonzero on the
first broken surface. Needs the package installed and, for the console
checks, a built frontend/dist.
"""

import json
import re
import subprocess
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import requests

REPO = Path(__file__).resolve().parent.parent
CONSOLE_DIR = REPO / "frontend" / "dist"


def effective(base: str, version: int) -> dict:
    """Last-wins view of the accumulated kpis rows at a version."""
    rows = requests.get(
        f"{base}/v1/tables/kpis/rows", params={"version": version}
    ).json()["rows"]
    return {(r["kpi"], r["date"]): r["value"] for r in rows}


def main() -> int:
    data_dir = tempfile.mkdtemp(prefix="flsmoke-")
    cmd = ["fieldledger-server", "--data-dir", data_dir, "--port", "0"]
    with_console = CONSOLE_DIR.is_dir()
    if with_console:
        cmd += ["--console-dir", str(CONSOLE_DIR)]
    server = subprocess.Popen(
        cmd, stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True
    )
    line = server.stdout.readline()
    m = re.search(r"listening on (http://[\d.]+:\d+)", line)
    assert m, f"no startup line: {line!r}"
    base = m.group(1)
    print("server:", base)

    try:
        assert requests.get(f"{base}/healthz").json()["ok"] is True

        from fieldledger.sdk import HttpTransport, SdkClient

        with tempfile.TemporaryDirectory(prefix="flsmoke-sdk-") as sdk_dir:
            client = SdkClient(
                f"{sdk_dir}/events.queue", app_id="smoke", device_id="dev-smoke"
            )
            for day in (1, 2, 3):
                for hour, (kind, payload, user) in enumerate(
                    [
                        ("page_view", {"page_id": "home"}, "u1"),
                        ("purchase", {"amount": 9.5, "currency": "USD"}, "u1"),
                        ("content_view", {"content_id": "c01"}, "u2"),
                    ]
                ):
                    ts = datetime(2022, 3, day, 9 + hour, tzinfo=timezone.utc)
                    client.log_event(
                        kind, payload, user_id=user, now_ms=int(ts.timestamp() * 1000)
                    )
            report = client.flush(HttpTransport(base))
            assert report.accepted == 9 and report.retained == 0, vars(report)
        print("ingest: 9 accepted via SDK queue")

        events = requests.get(f"{base}/v1/events", params={"limit": 50}).json()
        assert len(events["events"]) == 9
        victim = next(
            e
            for e in events["events"]
            if e["kind"] == "purchase" and e["client_ts"].startswith("2022-03-02")
        )

        def run_pipeline() -> dict:
            out = subprocess.run(
                ["fieldledger-pipeline", "--data-dir", data_dir, "run"],
                capture_output=True,
                text=True,
                check=True,
            )
            return json.loads(out.stdout)

        assert run_pipeline()["outputs"]["kpis"] == 1
        v1 = effective(base, 1)

        flag = requests.post(
            f"{base}/v1/curation/flags",
            json={
                "event_id": victim["event_id"],
                "verdict": "invalid",
                "note": "smoke",
                "actor": "smoke",
            },
        )
        assert flag.status_code in (200, 201), flag.text

        assert run_pipeline()["outputs"]["kpis"] == 2
        v2 = effective(base, 2)

        moved = sorted(
            {d for k, d in set(v1) | set(v2) if v1.get((k, d)) != v2.get((k, d))}
        )
        assert moved == ["2022-03-02"], moved
        assert v2[("total_events", "2022-03-02")] < v1[("total_events", "2022-03-02")]
        print("curation: flag moved exactly 2022-03-02")

        if with_console:
            idx = requests.get(f"{base}/console/")
            assert idx.status_code == 200 and "fieldledger console" in idx.text
            cfg = requests.get(f"{base}/console/console_config.json")
            assert cfg.status_code == 200 and "api_base_url" in cfg.json()
            assert requests.get(f"{base}/console/../pyproject.toml").status_code == 404
            print("console: served, config readable, path escape refused")
        else:
            print("console: skipped (frontend/dist not built)")

        runs = requests.get(f"{base}/v1/runs").json()["runs"]
        assert len(runs) == 2 and all(r["status"] == "finished" for r in runs)
        print("SMOKE OK")
        return 0
    finally:
        server.terminate()
        server.wait(timeout=10)


if __name__ == "__main__":
    sys.exit(main())
