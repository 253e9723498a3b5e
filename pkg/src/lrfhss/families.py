"""Frequency-hopping sequence families for LR-FHSS.

Constructions:

* ``driver``      -- LFSR states XOR a 6-bit seed, out-of-range hops omitted.
* ``lem-green``   -- Lempel-Greenberger family from k-bit windows of an m-sequence.
* ``li-fan-*``    -- wide-gap sequences of period 2*ell / 3*ell cut into chunks.
* ``hash``        -- sha256-derived pseudo-random hops.

Grid-based families hold within-grid hop indices (0..34 for DR8/DR9); they are
placed on physical OBWs by :func:`map_grid_hop_to_obw`.  Li-Fan families hold
absolute OBW indices.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .lfsr import LfsrConfig, advance_lfsr, iter_states, measure_period


class ConstructionError(ValueError):
    """A family cannot be built from the requested parameters."""


@dataclass(frozen=True)
class FhSequence:
    values: Tuple[int, ...]
    channel_count: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if not self.values:
            raise ValueError("a hopping sequence needs at least one hop")
        if self.channel_count < 1:
            raise ValueError("channel_count must be positive")
        bad = [v for v in self.values if not 0 <= v < self.channel_count]
        if bad:
            raise ValueError(
                f"hop values {bad[:5]} outside [0, {self.channel_count})")

    @property
    def period(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def prefix(self, length: int) -> "FhSequence":
        if not 1 <= length <= self.period:
            raise ValueError(f"prefix length {length} outside [1, {self.period}]")
        return FhSequence(self.values[:length], self.channel_count)


@dataclass(frozen=True)
class FhsFamily:
    name: str
    sequences: Tuple[FhSequence, ...]
    grid_based: bool = False
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        seqs = tuple(self.sequences)
        object.__setattr__(self, "sequences", seqs)
        if not seqs:
            raise ConstructionError(f"family {self.name!r} is empty")
        channels = {s.channel_count for s in seqs}
        periods = {s.period for s in seqs}
        if len(channels) != 1 or len(periods) != 1:
            raise ConstructionError(
                f"family {self.name!r} mixes channel counts {sorted(channels)} "
                f"or periods {sorted(periods)}")
        matrix = np.array([s.values for s in seqs], dtype=np.int64)
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)

    @property
    def size(self) -> int:
        return len(self.sequences)

    @property
    def channel_count(self) -> int:
        return self.sequences[0].channel_count

    @property
    def period(self) -> int:
        return self.sequences[0].period

    def __len__(self):
        return self.size

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i):
        return self.sequences[i]

    def as_array(self) -> np.ndarray:
        """Read-only (size, period) matrix of hop values."""
        return self._matrix

    def truncated(self, length: int) -> "FhsFamily":
        return FhsFamily(self.name, tuple(s.prefix(length) for s in self.sequences),
                         self.grid_based)


def _family_from_rows(name, rows, channel_count, grid_based) -> FhsFamily:
    return FhsFamily(name, tuple(FhSequence(r, channel_count) for r in rows), grid_based)


# --------------------------------------------------------------------------
# driver family

@dataclass(frozen=True)
class DriverCase:
    initial_state: int
    lfsr_size: int
    polynomials: Tuple[int, ...]
    seed_count: int


# LR-FHSS FHS construction parameters per grid-count case
DRIVER_CASES: Dict[int, DriverCase] = {
    1: DriverCase(6, 6, (33, 45, 48, 51, 54, 57), 64),
    2: DriverCase(56, 6, (33, 45, 48, 51, 54, 57), 64),
    3: DriverCase(6, 7, (65, 68, 71, 72), 128),
    4: DriverCase(6, 8, (142, 149), 256),
    5: DriverCase(6, 9, (264,), 512),
}


def driver_sequence(config: LfsrConfig, seed: int, grid_count: int,
                    target_length: int) -> List[int]:
    """XOR each LFSR state with ``seed``; keep results below ``grid_count``.

    The LFSR is cycled until ``target_length`` hops survive.
    """
    period = measure_period(config)
    hops: List[int] = []
    state = config.initial_state
    for _ in range(period):
        value = state ^ seed
        if value < grid_count:
            hops.append(value)
        state = advance_lfsr(state, config)
    if not hops:
        raise ConstructionError(
            f"seed {seed} leaves no hop below {grid_count} in a full LFSR period")
    # the state cycle is periodic, so the retained stream is too
    reps = math.ceil(target_length / len(hops))
    return (hops * reps)[:target_length]


def build_driver_family(case: int = 1, grid_count: int = 35,
                        target_length: int = 31) -> FhsFamily:
    try:
        params = DRIVER_CASES[case]
    except KeyError:
        raise ConstructionError(f"unknown driver case {case}") from None
    if target_length < 1:
        raise ConstructionError("target_length must be positive")
    rows = []
    for poly in params.polynomials:
        config = LfsrConfig(params.lfsr_size, poly, params.initial_state)
        for seed in range(params.seed_count):
            rows.append(driver_sequence(config, seed, grid_count, target_length))
    return _family_from_rows("driver", rows, grid_count, grid_based=True)


# --------------------------------------------------------------------------
# Lempel-Greenberger

def build_lempel_greenberger_family(p: int = 2, k: int = 5, n: int = 5,
                                    polynomial: int = 0x12,
                                    name: str = "lem-green") -> FhsFamily:
    """``p**k`` sequences of period ``p**n - 1`` over ``p**k`` channels.

    Member ``v`` maps the j-th k-window of the base m-sequence ``x`` to
    ``sum_i (x[j+i] + v_i mod p) p**i``; for p = 2 that is the window value
    XOR ``v``.
    """
    if p != 2:
        raise ConstructionError("only binary (p = 2) m-sequences are supported")
    if not 1 <= k <= n:
        raise ConstructionError(f"need 1 <= k <= n, got k={k}, n={n}")
    config = LfsrConfig(n, polynomial, 1)
    q = p ** n - 1
    if measure_period(config) != q:
        raise ConstructionError(
            f"polynomial {polynomial:#x} is not primitive for an order-{n} LFSR")
    states = iter_states(config)
    bits = [next(states) & 1 for _ in range(q)]
    windows = [sum(bits[(j + i) % q] << i for i in range(k)) for j in range(q)]
    rows = [[w ^ v for w in windows] for v in range(p ** k)]
    return _family_from_rows(name, rows, p ** k, grid_based=True)


# --------------------------------------------------------------------------
# Li-Fan wide-gap sequences

def build_li_fan_base(ell: int, d: int, mode: str = "two-ell") -> FhSequence:
    """Optimal wide-gap sequence over ``ell`` channels.

    ``two-ell`` concatenates the residue progressions ``s_i = i d`` and
    ``t_i = i (d+1) + 1`` (mod ell), period 2*ell, peak autocorrelation 2.

    ``three-ell`` appends a third progression ``u_i = i (d+2) + 2``, period
    3*ell.  Each ordered pair of distinct blocks then matches at most once per
    shift (block steps differ by 1 or 2, both units mod an odd ell) and a block
    never matches itself, so the peak autocorrelation is 3, which meets the
    wide-gap bound for period 3*ell.  Requires ell odd and coprime to d+2.

    Consecutive hops always differ by at least d, i.e. at least d-1 channels
    lie strictly between them.
    """
    if mode not in ("two-ell", "three-ell"):
        raise ValueError(f"mode must be 'two-ell' or 'three-ell', got {mode!r}")
    if not 1 < d < ell / 2:
        raise ValueError(f"need 1 < d < ell/2, got d={d}, ell={ell}")
    steps = [d, d + 1] if mode == "two-ell" else [d, d + 1, d + 2]
    if any(math.gcd(ell, s) != 1 for s in steps):
        raise ValueError(f"ell={ell} must be coprime to each of {steps}")
    if mode == "three-ell" and ell % 2 == 0:
        raise ValueError("three-ell construction needs an odd ell")
    values = [(i * step + offset) % ell
              for offset, step in enumerate(steps) for i in range(ell)]
    return FhSequence(values, ell)


def adapt_to_lr_fhss(base: Union[FhSequence, Sequence[FhSequence]],
                     max_channel: int = 280, chunk_length: int = 31,
                     name: str = "li-fan") -> FhsFamily:
    """Drop hops >= ``max_channel`` and cut the rest into equal chunks.

    A list of bases is processed base by base (chunks never straddle two
    bases) and the chunks are pooled.
    """
    bases = [base] if isinstance(base, FhSequence) else list(base)
    if chunk_length < 1:
        raise ConstructionError("chunk_length must be positive")
    rows = []
    for b in bases:
        kept = [v for v in b.values if v < max_channel]
        for c in range(len(kept) // chunk_length):
            rows.append(kept[c * chunk_length:(c + 1) * chunk_length])
    if not rows:
        raise ConstructionError(
            f"no chunk of length {chunk_length} survives filtering at {max_channel}")
    return _family_from_rows(name, rows, max_channel, grid_based=False)


def merge_families(parts: Sequence[FhsFamily], name: str = None) -> FhsFamily:
    parts = list(parts)
    if not parts:
        raise ConstructionError("nothing to merge")
    first = parts[0]
    for p in parts[1:]:
        if (p.channel_count, p.period, p.grid_based) != (
                first.channel_count, first.period, first.grid_based):
            raise ConstructionError(
                f"cannot merge {p.name!r} (channels={p.channel_count}, "
                f"period={p.period}) into {first.name!r} "
                f"(channels={first.channel_count}, period={first.period})")
    if len(parts) == 1 and name is None:
        return first
    seqs = tuple(s for p in parts for s in p.sequences)
    return FhsFamily(name or first.name, seqs, first.grid_based)


# --------------------------------------------------------------------------
# sha256 hash family

def hash_hop(sequence_index: int, hop_index: int, channel_count: int) -> int:
    message = struct.pack(">I", (sequence_index << 16) + hop_index)
    digest = hashlib.sha256(message).digest()
    return int.from_bytes(digest[:4], "big") % channel_count


def build_hash_family(family_size: int = 384, length: int = 31,
                      channel_count: int = 35) -> FhsFamily:
    if min(family_size, length, channel_count) < 1:
        raise ConstructionError("hash family parameters must be positive")
    rows = [[hash_hop(i, j, channel_count) for j in range(length)]
            for i in range(family_size)]
    return _family_from_rows("hash", rows, channel_count, grid_based=True)


# --------------------------------------------------------------------------
# grid geometry

def map_grid_hop_to_obw(grid: int, hop_value: int, grid_count: int = 8,
                        channels_per_grid: int = 35) -> int:
    """0-based OBW of the ``hop_value``-th channel of ``grid``."""
    if not 0 <= grid < grid_count:
        raise ValueError(f"grid {grid} outside [0, {grid_count})")
    if not 0 <= hop_value < channels_per_grid:
        raise ValueError(f"hop {hop_value} outside [0, {channels_per_grid})")
    return grid + grid_count * hop_value


def embed_in_grids(family: FhsFamily, grid_count: int = 8) -> FhsFamily:
    """Place member ``i`` of a grid-based family on grid ``i mod grid_count``.

    Gives an OBW-level view comparable with Li-Fan families.
    """
    if not family.grid_based:
        return family
    channels = grid_count * family.channel_count
    rows = [[map_grid_hop_to_obw(i % grid_count, v, grid_count, family.channel_count)
             for v in seq.values] for i, seq in enumerate(family.sequences)]
    return _family_from_rows(family.name, rows, channels, grid_based=False)


# --------------------------------------------------------------------------
# named recipes

LI_FAN_ELLS = (277, 281, 283, 287)
LI_FAN_D = 8
OBW_COUNT = 280

FAMILY_NAMES = ("lem-green", "lem-green-2x", "li-fan-2l", "li-fan-2l-4x",
                "li-fan-3l", "li-fan-3l-4x", "hash", "driver")


def build_named_family(name: str, length: int = 31) -> FhsFamily:
    """Build one of the named families at sequence length ``length``.

    Lempel-Greenberger families have a fixed period of 31 and are truncated
    for shorter lengths.
    """
    if name == "driver":
        return build_driver_family(1, 35, length)
    if name == "hash":
        return build_hash_family(384, length, 35)
    if name in ("lem-green", "lem-green-2x"):
        if length > 31:
            raise ConstructionError(f"{name} sequences have period 31, not {length}")
        fam = build_lempel_greenberger_family(2, 5, 5, 0x12, name)
        if name == "lem-green-2x":
            fam = merge_families(
                [fam, build_lempel_greenberger_family(2, 5, 5, 0x14, name)], name)
        return fam if length == 31 else fam.truncated(length)
    if name.startswith("li-fan-"):
        mode = {"2l": "two-ell", "3l": "three-ell"}.get(name[7:9])
        if mode is None or name[9:] not in ("", "-4x"):
            raise ConstructionError(
                f"unknown family {name!r}; valid names: {', '.join(FAMILY_NAMES)}")
        ells = LI_FAN_ELLS if name.endswith("-4x") else (281,)
        bases = [build_li_fan_base(ell, LI_FAN_D, mode) for ell in ells]
        return adapt_to_lr_fhss(bases, OBW_COUNT, length, name)
    raise ConstructionError(
        f"unknown family {name!r}; valid names: {', '.join(FAMILY_NAMES)}")


# --------------------------------------------------------------------------
# text export

def format_family(family: FhsFamily) -> str:
    lines = [f"# name={family.name} channels={family.channel_count} "
             f"period={family.period} grid_based={int(family.grid_based)}"]
    lines += [",".join(str(v) for v in s.values) for s in family.sequences]
    return "\n".join(lines) + "\n"


def parse_family(text: str) -> FhsFamily:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing family header line")
    header = dict(tok.split("=", 1) for tok in lines[0][1:].split())
    channels = int(header["channels"])
    rows = [[int(v) for v in ln.split(",")] for ln in lines[1:]]
    fam = _family_from_rows(header["name"], rows, channels,
                            header.get("grid_based", "0") == "1")
    if fam.period != int(header["period"]):
        raise ValueError(f"header period {header['period']} != row length {fam.period}")
    return fam


def write_family(family: FhsFamily, path: Union[str, Path]) -> None:
    Path(path).write_text(format_family(family), encoding="utf-8")


def read_family(path: Union[str, Path]) -> FhsFamily:
    return parse_family(Path(path).read_text(encoding="utf-8"))
