"""Demodulator-pool gateway with Early Drop, Early Decode and Early Header Drop.

A demodulator learns the fate of a header replica or fragment when that
element's last slot has been received.  Release rules per tracked frame:

* Early Header Drop: at the end of the last replica, if every replica failed.
* Early Drop: at the end of the fragment where failures exceed ``F - threshold``.
* Early Decode: at the end of the fragment where successes reach ``threshold``.
* otherwise at the end of the frame.

A replica fails when more than ``header_tolerance_slots`` of its slots collide;
a fragment fails on any collided slot.  Frames are offered to the pool in
start-slot order (node id breaks ties) and a demodulator released at slot t can
take a frame starting at t.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, asdict
from enum import IntEnum
from typing import Optional

import numpy as np

from .channel import (CodingRate, FramePlan, OccupancyGrid, Schedule, SimulationConfig,
                      build_occupancy, collided_slot_matrix, count_collided_slots,
                      frame_hop_layout, schedule_transmissions)
from .families import FhsFamily


def decode_threshold(fragment_count: int, coding_rate) -> int:
    """Fewest clean fragments that still decode: ceil(F/3) or ceil(2F/3)."""
    if fragment_count < 0:
        raise ValueError("fragment_count must be non-negative")
    num = 1 if CodingRate.parse(coding_rate) is CodingRate.CR1 else 2
    return -(-fragment_count * num // 3)


@dataclass(frozen=True)
class StrategyConfig:
    early_decode: bool = False
    early_drop: bool = False
    early_header_drop: bool = False
    header_tolerance_slots: int = 0
    demodulator_count: Optional[int] = None  # None: unlimited

    def __post_init__(self):
        if self.header_tolerance_slots < 0:
            raise ValueError("header tolerance must be non-negative")
        if self.demodulator_count is not None and self.demodulator_count < 0:
            raise ValueError("demodulator count must be non-negative")

    @property
    def label(self) -> str:
        parts = []
        if self.early_decode and self.early_drop:
            parts.append("earlydd")
        elif self.early_decode:
            parts.append("earlydecode")
        elif self.early_drop:
            parts.append("earlydrop")
        if self.early_header_drop:
            parts.append("hdrdrp")
        if self.header_tolerance_slots:
            parts.append(f"hdrtol{self.header_tolerance_slots}")
        return "+".join(parts) or "baseline"

    @property
    def demodulators_text(self) -> str:
        return "inf" if self.demodulator_count is None else str(self.demodulator_count)


class Outcome(IntEnum):
    DISCARDED = 0
    HEADER_DROPPED = 1
    COLLIDED = 2
    PAYLOAD_DECODED = 3


@dataclass(frozen=True)
class FrameOutcome:
    outcome: Outcome
    packet_decoded: bool = False
    release_slot: Optional[int] = None


def _check_tolerance(strategy: StrategyConfig, config: SimulationConfig) -> None:
    if strategy.header_tolerance_slots >= config.header_slots:
        raise ValueError(f"header tolerance {strategy.header_tolerance_slots} must be below "
                         f"the {config.header_slots}-slot header length")


def evaluate_frame(plan: FramePlan, occupancy: OccupancyGrid, strategy: StrategyConfig,
                   config: SimulationConfig) -> FrameOutcome:
    """Fate and release slot of one tracked frame, walked element by element."""
    _check_tolerance(strategy, config)
    elements = frame_hop_layout(plan, config)
    replicas = config.header_replicas
    fragments = config.payload_fragments
    threshold = decode_threshold(fragments, config.coding_rate)

    failed_headers = 0
    for el in elements[:replicas]:
        if count_collided_slots(el, occupancy) > strategy.header_tolerance_slots:
            failed_headers += 1
    header_ok = failed_headers < replicas
    if strategy.early_header_drop and not header_ok:
        end = elements[replicas - 1].stop_slot if replicas else plan.start_slot
        return FrameOutcome(Outcome.HEADER_DROPPED, False, end)

    good = bad = 0
    for el in elements[replicas:]:
        if count_collided_slots(el, occupancy):
            bad += 1
        else:
            good += 1
        # a decodable payload is never dropped, so decode is checked first
        if strategy.early_decode and good >= threshold:
            return FrameOutcome(Outcome.PAYLOAD_DECODED, header_ok, el.stop_slot)
        if strategy.early_drop and bad > fragments - threshold:
            return FrameOutcome(Outcome.COLLIDED, False, el.stop_slot)

    end = plan.start_slot + config.duration
    if good >= threshold:
        return FrameOutcome(Outcome.PAYLOAD_DECODED, header_ok, end)
    return FrameOutcome(Outcome.COLLIDED, False, end)


@dataclass
class FrameFates:
    """Per-frame fate arrays for a whole schedule, as if every frame were tracked."""

    outcome: np.ndarray  # Outcome codes
    packet_decoded: np.ndarray
    release_slot: np.ndarray

    def __getitem__(self, i) -> FrameOutcome:
        return FrameOutcome(Outcome(int(self.outcome[i])), bool(self.packet_decoded[i]),
                            int(self.release_slot[i]))


def evaluate_frames(schedule: Schedule, occupancy: OccupancyGrid,
                    strategy: StrategyConfig,
                    collided: Optional[np.ndarray] = None) -> FrameFates:
    cfg = schedule.config
    _check_tolerance(strategy, cfg)
    n = len(schedule)
    r, f = cfg.header_replicas, cfg.payload_fragments
    threshold = decode_threshold(f, cfg.coding_rate)
    if collided is None:
        collided = collided_slot_matrix(schedule, occupancy)
    start = schedule.start

    header_fail = collided[:, :r] > strategy.header_tolerance_slots
    header_ok = ~header_fail.all(axis=1) if r else np.zeros(n, dtype=bool)
    frag_fail = collided[:, r:] > 0
    good_total = f - frag_fail.sum(axis=1)
    decodable = good_total >= threshold

    outcome = np.where(decodable, Outcome.PAYLOAD_DECODED, Outcome.COLLIDED).astype(np.int8)
    release = start + cfg.duration
    if f:
        frag_end = start[:, None] + cfg.header_span + cfg.fragment_slots * np.arange(1, f + 1)
        rows = np.arange(n)
        if strategy.early_decode:
            at = np.argmax(np.cumsum(~frag_fail, axis=1) >= threshold, axis=1)
            release = np.where(decodable, frag_end[rows, at], release)
        if strategy.early_drop:
            at = np.argmax(np.cumsum(frag_fail, axis=1) > f - threshold, axis=1)
            release = np.where(decodable, release, frag_end[rows, at])
    packet = decodable & header_ok
    if strategy.early_header_drop:
        dropped = ~header_ok
        outcome = np.where(dropped, Outcome.HEADER_DROPPED, outcome).astype(np.int8)
        release = np.where(dropped, start + cfg.header_span, release)
        packet = packet & ~dropped
    return FrameFates(outcome, packet, release.astype(np.int64))


def allocate_demodulators(start: np.ndarray, release: np.ndarray,
                          demodulators: Optional[int]) -> np.ndarray:
    """Boolean mask of frames that find a free demodulator."""
    n = len(start)
    if demodulators is None or demodulators >= n:
        return np.ones(n, dtype=bool)
    assigned = np.zeros(n, dtype=bool)
    busy: list = []  # heap of release slots
    for i in np.lexsort((np.arange(n), start)).tolist():
        t = start[i]
        while busy and busy[0] <= t:
            heapq.heappop(busy)
        if len(busy) < demodulators:
            heapq.heappush(busy, int(release[i]))
            assigned[i] = True
    return assigned


@dataclass(frozen=True)
class SimMetrics:
    sent: int
    decoded_payloads: int
    decoded_packets: int
    collided: int
    header_dropped: int
    discarded: int
    payload_bytes: int

    @property
    def data_sent_kb(self) -> float:
        return self.sent * self.payload_bytes / 1000

    @property
    def data_decoded_kb(self) -> float:
        return self.decoded_packets * self.payload_bytes / 1000

    @property
    def data_decoded_payload_kb(self) -> float:
        return self.decoded_payloads * self.payload_bytes / 1000

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(data_sent_kb=self.data_sent_kb, data_decoded_kb=self.data_decoded_kb)
        return d


def metrics_from_fates(fates: FrameFates, assigned: np.ndarray,
                       coding_rate: CodingRate) -> SimMetrics:
    outcome = np.where(assigned, fates.outcome, Outcome.DISCARDED)
    counts = np.bincount(outcome, minlength=len(Outcome))
    return SimMetrics(
        sent=len(outcome),
        decoded_payloads=int(counts[Outcome.PAYLOAD_DECODED]),
        decoded_packets=int((fates.packet_decoded & assigned).sum()),
        collided=int(counts[Outcome.COLLIDED]),
        header_dropped=int(counts[Outcome.HEADER_DROPPED]),
        discarded=int(counts[Outcome.DISCARDED]),
        payload_bytes=CodingRate.parse(coding_rate).payload_bytes,
    )


def run_schedule(schedule: Schedule, occupancy: OccupancyGrid, strategy: StrategyConfig,
                 collided: Optional[np.ndarray] = None) -> SimMetrics:
    fates = evaluate_frames(schedule, occupancy, strategy, collided)
    assigned = allocate_demodulators(schedule.start, fates.release_slot,
                                     strategy.demodulator_count)
    return metrics_from_fates(fates, assigned, schedule.config.coding_rate)


def run_simulation(config: SimulationConfig, family: FhsFamily, strategy: StrategyConfig,
                   rng: Optional[np.random.Generator] = None) -> SimMetrics:
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    schedule = schedule_transmissions(config, family, rng)
    occupancy = build_occupancy(schedule)
    return run_schedule(schedule, occupancy, strategy)
