"""Declarative network scenarios: segments of connectivity plus a workload."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

STATES = ("offline", "online")


class InvalidScenario(ValueError):
    """The scenario document violates a structural rule."""


class OutOfRange(ValueError):
    """Queried a time at or past the scenario's duration."""


@dataclass(frozen=True)
class Segment:
    start_s: float
    state: str
    bandwidth_kbps: float = 0.0
    rtt_ms: float = 0.0
    request_loss_prob: float = 0.0


@dataclass(frozen=True)
class Workload:
    n_users: int
    events_per_user: int
    kind_weights: dict
    flush_every_s: float
    # events stop here; later segments act as a drain window
    window_s: float | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    duration_s: float
    segments: tuple[Segment, ...]
    workload: Workload

    def __post_init__(self):
        _validate(self)

    def connectivity_at(self, t_s: float) -> Segment:
        """The unique segment covering t_s; intervals are half-open."""
        if not 0 <= t_s < self.duration_s:
            raise OutOfRange(f"t={t_s} outside [0, {self.duration_s})")
        covering = self.segments[0]
        for seg in self.segments:
            if seg.start_s > t_s:
                break
            covering = seg
        return covering

    def workload_window_s(self) -> float:
        w = self.workload.window_s
        return self.duration_s if w is None else w


def _validate(sc: Scenario) -> None:
    if not isinstance(sc.seed, int) or not 0 <= sc.seed < 2**64:
        raise InvalidScenario("seed must be a 64-bit unsigned integer")
    if sc.duration_s <= 0:
        raise InvalidScenario("duration_s must be positive")
    if not sc.segments:
        raise InvalidScenario("at least one segment required")
    if sc.segments[0].start_s != 0:
        raise InvalidScenario("first segment must start at 0")
    prev = -1.0
    for seg in sc.segments:
        if seg.state not in STATES:
            raise InvalidScenario(f"unknown segment state {seg.state!r}")
        if seg.start_s <= prev:
            raise InvalidScenario("segment starts must be strictly increasing")
        if seg.start_s >= sc.duration_s:
            raise InvalidScenario("segment starts at or past duration_s")
        if not 0 <= seg.request_loss_prob <= 1:
            raise InvalidScenario("request_loss_prob must lie in [0, 1]")
        if seg.state == "online" and seg.bandwidth_kbps <= 0:
            raise InvalidScenario("online segments need bandwidth_kbps > 0")
        if seg.rtt_ms < 0 or seg.bandwidth_kbps < 0:
            raise InvalidScenario("bandwidth/rtt must be non-negative")
        prev = seg.start_s
    w = sc.workload
    if w.n_users <= 0 or w.events_per_user < 0:
        raise InvalidScenario("workload sizes must be positive")
    if w.flush_every_s <= 0:
        raise InvalidScenario("flush_every_s must be positive")
    if not w.kind_weights or any(v < 0 for v in w.kind_weights.values()):
        raise InvalidScenario("kind_weights must be non-negative")
    if sum(w.kind_weights.values()) <= 0:
        raise InvalidScenario("kind_weights must include a positive weight")
    if w.window_s is not None and not 0 < w.window_s <= sc.duration_s:
        raise InvalidScenario("window_s must lie in (0, duration_s]")


def scenario_from_dict(doc: dict, name: str = "scenario") -> Scenario:
    try:
        segments = tuple(
            Segment(
                start_s=float(s["start_s"]),
                state=s["state"],
                bandwidth_kbps=float(s.get("bandwidth_kbps", 0.0)),
                rtt_ms=float(s.get("rtt_ms", 0.0)),
                request_loss_prob=float(s.get("request_loss_prob", 0.0)),
            )
            for s in doc["segments"]
        )
        w = doc["workload"]
        workload = Workload(
            n_users=int(w["n_users"]),
            events_per_user=int(w["events_per_user"]),
            kind_weights={str(k): float(v) for k, v in w["kind_weights"].items()},
            flush_every_s=float(w["flush_every_s"]),
            window_s=float(w["window_s"]) if "window_s" in w else None,
        )
        return Scenario(
            name=str(doc.get("name", name)),
            seed=int(doc["seed"]),
            duration_s=float(doc["duration_s"]),
            segments=segments,
            workload=workload,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidScenario):
            raise
        raise InvalidScenario(f"bad scenario document: {exc}") from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return scenario_from_dict(doc, name=path.stem)
