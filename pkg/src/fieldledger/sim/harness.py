"""Deterministic event loop that drives real SDKs against a real server.

Simulated time is the only clock the SDKs see. Each action (log an event,
run a flush tick) happens at its scheduled instant; request latency is
accounted in the report rather than enacted on the clock, so one user's
slow link never distorts another's schedule.
"""

from __future__ import annotations

import random
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import requests

from ..events.types import ConnectivityInfo
from ..sdk.client import SdkClient
from ..sdk.transport import HttpTransport
from .scenario import Scenario
from .transport import SimTransport

# scenario t=0 maps to this epoch instant (2022-03-01T00:00:00Z)
SIM_EPOCH_MS = 1_646_092_800_000

# plenty of page/content/query identities for any desk-scale workload
N_PAGES = 40
N_CONTENTS = 25
WIFI_MIN_KBPS = 5_000


class ServerUnreachable(Exception):
    """The target server did not answer the initial health probe."""


@dataclass
class ScenarioReport:
    scenario: str
    seed: int
    generated: int = 0
    delivered_unique: int = 0
    duplicates_detected_serverside: int = 0
    rejected: int = 0
    max_queue_depth: int = 0
    final_retained: int = 0
    batches_sent: int = 0
    flush_latencies_ms: list = field(default_factory=list)

    def to_wire(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "generated": self.generated,
            "delivered_unique": self.delivered_unique,
            "duplicates_detected_serverside": self.duplicates_detected_serverside,
            "rejected": self.rejected,
            "max_queue_depth": self.max_queue_depth,
            "final_retained": self.final_retained,
            "batches_sent": self.batches_sent,
            "flush_latencies_ms": self.flush_latencies_ms,
        }


class SimClock:
    def __init__(self, epoch_ms: int = SIM_EPOCH_MS):
        self.epoch_ms = epoch_ms
        self.ms = epoch_ms

    def now_ms(self) -> int:
        return self.ms

    def t_s(self) -> float:
        return (self.ms - self.epoch_ms) / 1000


def _payload_for(kind: str, rng: random.Random) -> dict:
    if kind == "page_view":
        return {"page_id": f"p{rng.randrange(N_PAGES)}"}
    if kind in ("content_view", "content_complete"):
        return {"content_id": f"c{rng.randrange(N_CONTENTS)}"}
    if kind == "purchase":
        return {
            "amount": round(rng.uniform(1, 50), 2),
            "currency": "USD",
            "content_id": f"c{rng.randrange(N_CONTENTS)}",
        }
    if kind == "search":
        return {"query": f"q{rng.randrange(100)}"}
    if kind == "custom":
        return {"name": f"marker_{rng.randrange(10)}"}
    return {}  # session_start / session_end take no required fields


def connectivity_provider(scenario: Scenario, clock: SimClock):
    def provider() -> ConnectivityInfo:
        seg = scenario.connectivity_at(clock.t_s())
        if seg.state != "online":
            return ConnectivityInfo(online=False, network_type="offline")
        kind = "wifi" if seg.bandwidth_kbps >= WIFI_MIN_KBPS else "cellular"
        return ConnectivityInfo(online=True, network_type=kind)

    return provider


def _build_schedule(scenario: Scenario, rng: random.Random) -> list[tuple]:
    """All (t_ms, phase, user, detail) actions, time-ordered.

    Logs sort before flushes at the same instant; per-user event times are
    drawn inside the workload window so trailing segments act as a drain.
    """
    w = scenario.workload
    window_ms = max(1, int(scenario.workload_window_s() * 1000))
    kinds = sorted(w.kind_weights)
    weights = [w.kind_weights[k] for k in kinds]
    actions: list[tuple] = []
    for u in range(w.n_users):
        times = sorted(rng.randrange(window_ms) for _ in range(w.events_per_user))
        chosen = rng.choices(kinds, weights, k=w.events_per_user)
        actions.extend(
            (t, 0, u, kind) for t, kind in zip(times, chosen)
        )
    flush_ms = max(1, int(w.flush_every_s * 1000))
    duration_ms = int(scenario.duration_s * 1000)
    for u in range(w.n_users):
        actions.extend(
            (t, 1, u, None) for t in range(flush_ms, duration_ms, flush_ms)
        )
    actions.sort(key=lambda a: (a[0], a[1], a[2]))
    return actions


def _probe_server(base_url: str, session: requests.Session) -> None:
    try:
        resp = session.get(f"{base_url}/healthz", timeout=10)
    except requests.RequestException as exc:
        raise ServerUnreachable(str(exc)) from None
    if resp.status_code != 200:
        raise ServerUnreachable(f"healthz answered HTTP {resp.status_code}")


def _server_event_ids(base_url: str, session: requests.Session) -> list[str]:
    """Every stored event_id, duplicates included if the server ever kept any."""
    ids: list[str] = []
    cursor = None
    while True:
        params = {"limit": "1000"}
        if cursor:
            params["cursor"] = cursor
        resp = session.get(f"{base_url}/v1/events", params=params, timeout=30)
        resp.raise_for_status()
        doc = resp.json()
        ids.extend(e["event_id"] for e in doc["events"])
        cursor = doc.get("next_cursor")
        if not cursor:
            return ids


def run_scenario(
    scenario: Scenario,
    server_url: str,
    *,
    workdir: str | Path | None = None,
    app_id: str = "sim",
) -> ScenarioReport:
    """Drive the scenario against a live server and compile the report.

    Deterministic for a fixed (scenario, server initial state): all
    randomness flows from scenario.seed, all time from the simulated clock.
    """
    base_url = server_url.rstrip("/")
    session = requests.Session()
    _probe_server(base_url, session)

    master = random.Random(scenario.seed)
    sched_rng = random.Random(master.getrandbits(64))
    payload_rng = random.Random(master.getrandbits(64))
    loss_rng = random.Random(master.getrandbits(64))
    sdk_seeds = [master.getrandbits(64) for _ in range(scenario.workload.n_users)]

    clock = SimClock()
    schedule = _build_schedule(scenario, sched_rng)

    tmp = None
    if workdir is None:
        tmp = tempfile.TemporaryDirectory(prefix="fieldledger-sim-")
        workdir = tmp.name
    workdir = Path(workdir)

    http = HttpTransport(base_url)
    transport = SimTransport(http, scenario, clock.t_s, loss_rng)
    provider = connectivity_provider(scenario, clock)
    sdks = [
        SdkClient(
            workdir / f"user_{u:03d}.queue",
            app_id=app_id,
            device_id=f"{app_id}-dev-{u:03d}",
            clock_ms=clock.now_ms,
            connectivity=provider,
            rng=random.Random(sdk_seeds[u]),
        )
        for u in range(scenario.workload.n_users)
    ]

    report = ScenarioReport(scenario=scenario.name, seed=scenario.seed)
    generated_ids: set[str] = set()
    try:
        for t_ms, phase, u, detail in schedule:
            clock.ms = SIM_EPOCH_MS + t_ms
            sdk = sdks[u]
            if phase == 0:
                doc = sdk.log_event(
                    detail, _payload_for(detail, payload_rng), user_id=f"u{u:03d}"
                )
                generated_ids.add(doc["event_id"])
                report.generated += 1
            else:
                flush = sdk.flush(transport)
                report.batches_sent += flush.batches_sent
                report.duplicates_detected_serverside += flush.duplicates
                report.rejected += flush.rejected
                report.flush_latencies_ms.extend(flush.request_latencies_ms)
            depth = len(sdk.queue)
            if depth > report.max_queue_depth:
                report.max_queue_depth = depth

        report.final_retained = sum(len(s.queue) for s in sdks)
        stored = _server_event_ids(base_url, session)
        report.delivered_unique = len(generated_ids.intersection(stored))
        return report
    finally:
        http.close()
        session.close()
        if tmp is not None:
            tmp.cleanup()
