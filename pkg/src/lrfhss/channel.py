"""Time-slotted spectrum model: scheduling, frame layout, occupancy, collisions.

A frame is ``R`` header replicas of ``header_slots`` each followed by ``F``
payload fragments of ``fragment_slots`` each, back to back.  Element ``h`` of
the frame (headers first) hops to the family value at position ``h mod L``.
Everything transmitted counts towards occupancy, whether or not a gateway
demodulator ends up tracking it.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .families import FhsFamily


class CodingRate(IntEnum):
    CR1 = 1  # rate 1/3, three header replicas
    CR2 = 2  # rate 2/3, two header replicas

    @property
    def header_replicas(self) -> int:
        return 3 if self is CodingRate.CR1 else 2

    @property
    def payload_bytes(self) -> int:
        return 58 if self is CodingRate.CR1 else 123

    @classmethod
    def parse(cls, value) -> "CodingRate":
        if isinstance(value, cls):
            return value
        text = str(value).upper().removeprefix("CR")
        try:
            return cls(int(text))
        except ValueError:
            raise ValueError(f"unknown coding rate {value!r}") from None


def header_slots_for(fragment_slots: int) -> int:
    """Header airtime (233 ms) in slots when a 102.4 ms fragment spans ``fragment_slots``."""
    return math.ceil(233 * fragment_slots / 102.4)


@dataclass(frozen=True)
class SimulationConfig:
    sim_slots: int = 912
    ocw_count: int = 7
    obw_count: int = 280
    grid_count: int = 8
    payload_fragments: int = 31
    fragment_slots: int = 6
    coding_rate: CodingRate = CodingRate.CR1
    node_count: int = 1
    rng_seed: int = 0
    header_slots: Optional[int] = None
    header_replicas: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "coding_rate", CodingRate.parse(self.coding_rate))
        if self.header_slots is None:
            object.__setattr__(self, "header_slots", header_slots_for(self.fragment_slots))
        if self.header_replicas is None:
            object.__setattr__(self, "header_replicas", self.coding_rate.header_replicas)
        for name in ("sim_slots", "ocw_count", "obw_count", "grid_count",
                     "fragment_slots", "header_slots"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.payload_fragments < 0 or self.header_replicas < 0 or self.node_count < 0:
            raise ValueError("fragment, replica and node counts must be non-negative")
        if self.duration > self.sim_slots:
            raise ValueError(
                f"frame of {self.duration} slots does not fit a {self.sim_slots}-slot horizon")

    @property
    def element_count(self) -> int:
        return self.header_replicas + self.payload_fragments

    @property
    def header_span(self) -> int:
        return self.header_replicas * self.header_slots

    @property
    def duration(self) -> int:
        return self.header_span + self.payload_fragments * self.fragment_slots

    def element_lengths(self) -> np.ndarray:
        return np.array([self.header_slots] * self.header_replicas
                        + [self.fragment_slots] * self.payload_fragments, dtype=np.int64)

    def element_offsets(self) -> np.ndarray:
        lengths = self.element_lengths()
        return np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(np.int64)

    def with_(self, **changes) -> "SimulationConfig":
        # derived fields follow the new coding rate / granularity unless given
        for key, source in (("header_replicas", "coding_rate"), ("header_slots", "fragment_slots")):
            if source in changes and key not in changes:
                changes[key] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class FramePlan:
    node_id: int
    start_slot: int
    ocw: int
    grid: Optional[int]
    fhs_index: int
    coding_rate: CodingRate
    hop_values: Tuple[int, ...]


@dataclass(frozen=True)
class Element:
    kind: str  # "header" or "fragment"
    index: int
    start_slot: int
    stop_slot: int  # exclusive
    ocw: int
    obw: int

    @property
    def length(self) -> int:
        return self.stop_slot - self.start_slot


@dataclass
class Schedule(Sequence[FramePlan]):
    """Column-wise frame plans; indexing yields :class:`FramePlan` objects."""

    config: SimulationConfig
    start: np.ndarray
    ocw: np.ndarray
    grid: np.ndarray  # -1 for families that address OBWs directly
    fhs_index: np.ndarray
    obw: np.ndarray  # (N, element_count) resolved OBW per element

    def __len__(self):
        return len(self.start)

    def __getitem__(self, i) -> FramePlan:
        if isinstance(i, slice):
            raise TypeError("slice the underlying arrays instead")
        grid = int(self.grid[i])
        return FramePlan(int(i), int(self.start[i]), int(self.ocw[i]),
                         None if grid < 0 else grid, int(self.fhs_index[i]),
                         self.config.coding_rate, tuple(int(v) for v in self.obw[i]))

    def __iter__(self) -> Iterator[FramePlan]:
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_plans(cls, plans: Sequence[FramePlan], config: SimulationConfig) -> "Schedule":
        n, e = len(plans), config.element_count
        obw = np.array([p.hop_values for p in plans], dtype=np.int64).reshape(n, e)
        sched = cls(config,
                    np.array([p.start_slot for p in plans], dtype=np.int64),
                    np.array([p.ocw for p in plans], dtype=np.int64),
                    np.array([-1 if p.grid is None else p.grid for p in plans], dtype=np.int64),
                    np.array([p.fhs_index for p in plans], dtype=np.int64),
                    obw)
        sched.validate()
        return sched

    def validate(self) -> None:
        cfg = self.config
        if len(self) == 0:
            return
        if self.start.min() < 0 or (self.start + cfg.duration).max() > cfg.sim_slots:
            raise ValueError("a frame falls outside the simulation horizon")
        if self.ocw.min() < 0 or self.ocw.max() >= cfg.ocw_count:
            raise ValueError("OCW index out of range")
        if self.obw.size and (self.obw.min() < 0 or self.obw.max() >= cfg.obw_count):
            raise ValueError("OBW index out of range")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "start_slot", "ocw", "grid", "fhs_index"])
        for i in range(len(self)):
            g = int(self.grid[i])
            w.writerow([i, int(self.start[i]), int(self.ocw[i]), "" if g < 0 else g,
                        int(self.fhs_index[i])])
        return buf.getvalue()


def resolve_obws(family: FhsFamily, fhs_index: np.ndarray, grid: np.ndarray,
                 hops: int, grid_count: int) -> np.ndarray:
    """OBW of hop ``h`` (0..hops-1) for each selected sequence; hops wrap at the period."""
    positions = np.arange(hops) % family.period
    values = family.as_array()[fhs_index][:, positions]
    if family.grid_based:
        return grid[:, None] + grid_count * values
    return values


def _check_family(family: FhsFamily, obw_count: int, grid_count: int) -> None:
    limit = family.channel_count * (grid_count if family.grid_based else 1)
    if limit > obw_count:
        raise ValueError(
            f"family {family.name!r} spans {limit} OBWs but only {obw_count} exist")


def schedule_transmissions(config: SimulationConfig, family: FhsFamily,
                           rng: np.random.Generator) -> Schedule:
    _check_family(family, config.obw_count, config.grid_count)
    n = config.node_count
    start = rng.integers(0, config.sim_slots - config.duration + 1, size=n)
    ocw = rng.integers(0, config.ocw_count, size=n)
    fhs_index = rng.integers(0, family.size, size=n)
    if family.grid_based:
        grid = rng.integers(0, config.grid_count, size=n)
    else:
        grid = np.full(n, -1, dtype=np.int64)
    obw = resolve_obws(family, fhs_index, grid, config.element_count, config.grid_count)
    return Schedule(config, start, ocw, grid, fhs_index, obw.reshape(n, config.element_count))


def frame_hop_layout(plan: FramePlan, config: SimulationConfig) -> List[Element]:
    elements = []
    offsets, lengths = config.element_offsets(), config.element_lengths()
    for h, (off, length) in enumerate(zip(offsets, lengths)):
        kind = "header" if h < config.header_replicas else "fragment"
        index = h if kind == "header" else h - config.header_replicas
        begin = plan.start_slot + int(off)
        elements.append(Element(kind, index, begin, begin + int(length),
                                plan.ocw, plan.hop_values[h]))
    return elements


@dataclass
class OccupancyGrid:
    counts: np.ndarray  # (slots, ocw, obw) transmissions per cell

    def __getitem__(self, cell):
        return self.counts[cell]

    @property
    def mass(self) -> int:
        return int(self.counts.sum())


def _frame_cells(schedule: Schedule) -> np.ndarray:
    """Flat cell index of every (frame, slot-in-frame) pair, shape (N, duration)."""
    cfg = schedule.config
    lengths = cfg.element_lengths()
    slot_element = np.repeat(np.arange(cfg.element_count), lengths)
    slots = schedule.start[:, None] + np.arange(cfg.duration)[None, :]
    obw = schedule.obw[:, slot_element]
    return (slots * cfg.ocw_count + schedule.ocw[:, None]) * cfg.obw_count + obw


def build_occupancy(schedule: Schedule, config: Optional[SimulationConfig] = None) -> OccupancyGrid:
    cfg = config or schedule.config
    shape = (cfg.sim_slots, cfg.ocw_count, cfg.obw_count)
    cells = _frame_cells(schedule).ravel()
    counts = np.bincount(cells, minlength=int(np.prod(shape))).astype(np.int32)
    return OccupancyGrid(counts.reshape(shape))


def count_collided_slots(element: Element, grid: OccupancyGrid) -> int:
    column = grid.counts[element.start_slot:element.stop_slot, element.ocw, element.obw]
    return int((column >= 2).sum())


def collided_slot_matrix(schedule: Schedule, grid: OccupancyGrid) -> np.ndarray:
    """Collided-slot count of every element of every frame, shape (N, element_count)."""
    cfg = schedule.config
    if len(schedule) == 0:
        return np.zeros((0, cfg.element_count), dtype=np.int64)
    hit = grid.counts.ravel()[_frame_cells(schedule)] >= 2
    return np.add.reduceat(hit, cfg.element_offsets(), axis=1).astype(np.int64)


# --------------------------------------------------------------------------
# preliminary model: one slot per fragment, no headers, no demodulator limit

def preliminary_collision_rate(node_count: int, family: FhsFamily,
                               rng: np.random.Generator, *,
                               level: str = "slot",
                               coding_rate: CodingRate = CodingRate.CR1,
                               fragments: int = 31, horizon: int = 124,
                               ocw_count: int = 7, obw_count: int = 280,
                               grid_count: int = 8) -> float:
    """Collision rate of single-slot-fragment frames without headers.

    ``level="slot"`` returns collided fragment-slots over transmitted
    fragment-slots.  ``level="payload"`` returns the fraction of payloads
    whose collided fragments leave fewer than the coding-rate threshold.
    """
    from .gateway import decode_threshold

    if level not in ("slot", "payload"):
        raise ValueError(f"level must be 'slot' or 'payload', got {level!r}")
    if node_count <= 0:
        return 0.0
    _check_family(family, obw_count, grid_count)
    start = rng.integers(0, horizon - fragments + 1, size=node_count)
    ocw = rng.integers(0, ocw_count, size=node_count)
    fhs_index = rng.integers(0, family.size, size=node_count)
    grid = rng.integers(0, grid_count, size=node_count) if family.grid_based else None
    obw = resolve_obws(family, fhs_index, grid, fragments, grid_count)
    slots = start[:, None] + np.arange(fragments)[None, :]
    cells = (slots * ocw_count + ocw[:, None]) * obw_count + obw
    counts = np.bincount(cells.ravel(), minlength=horizon * ocw_count * obw_count)
    hit = counts[cells] >= 2
    if level == "slot":
        return float(hit.sum() / hit.size)
    good = fragments - hit.sum(axis=1)
    return float((good < decode_threshold(fragments, coding_rate)).mean())
