"""Transport shim that subjects real HTTP uploads to simulated link conditions."""

from __future__ import annotations

import random

from ..events.canonical import canonical_bytes
from ..sdk.transport import Transport, TransportError
from .scenario import Scenario


class SimTransport:
    """Wraps a real transport with seeded loss, latency, and offline refusal.

    Loss probability is split per the ack-lost model: with p/2 the request
    never reaches the server, with p/2 the server processes it but the
    response is lost. The second path is what forces server-side dedup.
    Latency is simulated (rtt plus serialization time at the segment's
    bandwidth) and reported in place of the wall-clock measurement, so
    reports stay deterministic.
    """

    def __init__(
        self,
        inner: Transport,
        scenario: Scenario,
        clock_s,  # callable returning simulated seconds since scenario start
        rng: random.Random,
    ):
        self.inner = inner
        self.scenario = scenario
        self.clock_s = clock_s
        self.rng = rng

    def send_batch(self, batch: dict) -> tuple[dict, float]:
        seg = self.scenario.connectivity_at(self.clock_s())
        if seg.state != "online":
            raise TransportError("no connectivity")
        size_bytes = len(canonical_bytes(batch))
        latency_ms = seg.rtt_ms + size_bytes * 8 / seg.bandwidth_kbps
        if self.rng.random() < seg.request_loss_prob / 2:
            raise TransportError("request lost")
        response, _wall_ms = self.inner.send_batch(batch)
        if self.rng.random() < seg.request_loss_prob / 2:
            raise TransportError("response lost")  # server kept the batch
        return response, latency_ms
