"""Galois LFSR and maximal-length sequence generation.

Bit conventions: a state integer holds ``h_0`` in its least-significant bit and
a polynomial word holds ``q_1`` in its least-significant bit (``q_m`` is the
top bit).  One step is then a right shift plus a conditional XOR::

    next = (state >> 1) ^ (polynomial if state & 1 else 0)

which gives ``h_i' = h_{i+1} + q_{i+1} h_0`` for ``i < m-1`` and
``h_{m-1}' = q_m h_0 = h_0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List


@dataclass(frozen=True)
class LfsrConfig:
    """Register size, feedback polynomial word and seed of a Galois LFSR."""

    size: int
    polynomial: int
    initial_state: int = 1

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"LFSR size must be positive, got {self.size}")
        if not 0 < self.initial_state < (1 << self.size):
            raise ValueError(
                f"initial state {self.initial_state} outside [1, 2^{self.size})")
        if not (self.polynomial >> (self.size - 1)) & 1 or self.polynomial >> self.size:
            raise ValueError(
                f"polynomial {self.polynomial:#x} must be a {self.size}-bit word "
                "with its top coefficient set")


def advance_lfsr(state: int, config: LfsrConfig) -> int:
    if not 0 < state < (1 << config.size):
        raise ValueError(f"state {state} outside [1, 2^{config.size})")
    if state & 1:
        return (state >> 1) ^ config.polynomial
    return state >> 1


def iter_states(config: LfsrConfig) -> Iterator[int]:
    """Endless state stream starting with the seed."""
    state = config.initial_state
    while True:
        yield state
        state = advance_lfsr(state, config)


def generate_state_sequence(config: LfsrConfig, count: int) -> List[int]:
    if count < 0:
        raise ValueError("count must be non-negative")
    states = iter_states(config)
    return [next(states) for _ in range(count)]


def measure_period(config: LfsrConfig) -> int:
    """Smallest t >= 1 with state(t) == state(0)."""
    seed = config.initial_state
    state = advance_lfsr(seed, config)
    period = 1
    # a nonzero-tail cycle may never return to a seed off its cycle
    limit = 1 << config.size
    while state != seed:
        state = advance_lfsr(state, config)
        period += 1
        if period > limit:
            raise ValueError(f"seed {seed} does not lie on a cycle of {config}")
    return period


def is_maximal(config: LfsrConfig) -> bool:
    return measure_period(config) == (1 << config.size) - 1


def output_bits(config: LfsrConfig, count: int) -> List[int]:
    """Binary m-sequence ``h_0^0, h_0^1, ...``: the low bit of each state."""
    return [s & 1 for s in generate_state_sequence(config, count)]
