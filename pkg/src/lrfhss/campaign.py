"""Monte-Carlo campaigns over families, coding rates, strategies and node counts.

One schedule is drawn per (family, coding rate, node count, repetition) and
every strategy is evaluated on that same schedule, so strategy and
demodulator comparisons are paired.  Seeds derive from the master seed and the
cell key alone, which keeps results independent of worker scheduling.
"""
from __future__ import annotations

import csv
import hashlib
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import groupby
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .channel import (CodingRate, SimulationConfig, build_occupancy, collided_slot_matrix,
                      schedule_transmissions)
from .families import FhsFamily
from .gateway import SimMetrics, StrategyConfig, run_schedule

DEFAULT_SEED = 20240229


def derive_seed(master_seed: int, *key) -> int:
    text = "|".join(str(k) for k in (master_seed,) + key)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass(frozen=True)
class CampaignRow:
    family: str
    coding_rate: CodingRate
    strategy: StrategyConfig
    nodes: int
    rep: int
    metrics: SimMetrics


CAMPAIGN_FIELDS = ("family", "cr", "demodulators", "early_decode", "early_drop",
                   "early_header_drop", "header_tolerance", "nodes", "rep", "sent",
                   "decoded_payloads", "decoded_packets", "collided", "header_dropped",
                   "discarded", "data_sent_kb", "data_decoded_kb")


def _run_cell(args) -> List[SimMetrics]:
    base, family, cr, nodes, rep, seed, strategies = args
    config = base.with_(coding_rate=cr, node_count=nodes, rng_seed=seed)
    schedule = schedule_transmissions(config, family, np.random.default_rng(seed))
    occupancy = build_occupancy(schedule)
    collided = collided_slot_matrix(schedule, occupancy)
    return [run_schedule(schedule, occupancy, s, collided) for s in strategies]


def run_campaign(base: SimulationConfig, families: Mapping[str, FhsFamily],
                 strategies: Sequence[StrategyConfig], node_counts: Iterable[int],
                 repetitions: int = 10, master_seed: int = DEFAULT_SEED,
                 coding_rates: Optional[Sequence] = None,
                 workers: int = 1) -> List[CampaignRow]:
    crs = [CodingRate.parse(c) for c in (coding_rates or [base.coding_rate])]
    node_counts = list(node_counts)
    strategies = list(strategies)
    for cr in crs:  # fail before any run if the frame cannot fit
        base.with_(coding_rate=cr)
    tasks, keys = [], []
    for name, family in families.items():
        for cr in crs:
            for nodes in node_counts:
                for rep in range(repetitions):
                    seed = derive_seed(master_seed, name, int(cr), nodes, rep)
                    tasks.append((base, family, cr, nodes, rep, seed, strategies))
                    keys.append((name, cr, nodes, rep))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_cell, tasks, chunksize=4))
    else:
        results = [_run_cell(t) for t in tasks]
    rows = [CampaignRow(name, cr, s, nodes, rep, m)
            for (name, cr, nodes, rep), ms in zip(keys, results)
            for s, m in zip(strategies, ms)]
    strategy_order = {s: i for i, s in enumerate(strategies)}
    rows.sort(key=lambda r: (r.family, r.coding_rate, strategy_order[r.strategy],
                             r.nodes, r.rep))
    return rows


def _kb(v: float) -> str:
    return f"{v:.3f}"


def campaign_csv(rows: Sequence[CampaignRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CAMPAIGN_FIELDS)
    for r in rows:
        s, m = r.strategy, r.metrics
        w.writerow([r.family, int(r.coding_rate), s.demodulators_text, int(s.early_decode),
                    int(s.early_drop), int(s.early_header_drop), s.header_tolerance_slots,
                    r.nodes, r.rep, m.sent, m.decoded_payloads, m.decoded_packets,
                    m.collided, m.header_dropped, m.discarded, _kb(m.data_sent_kb),
                    _kb(m.data_decoded_kb)])
    return buf.getvalue()


def parse_campaign_csv(text: str) -> List[CampaignRow]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        demods = None if rec["demodulators"] == "inf" else int(rec["demodulators"])
        strategy = StrategyConfig(bool(int(rec["early_decode"])), bool(int(rec["early_drop"])),
                                  bool(int(rec["early_header_drop"])),
                                  int(rec["header_tolerance"]), demods)
        cr = CodingRate.parse(rec["cr"])
        metrics = SimMetrics(int(rec["sent"]), int(rec["decoded_payloads"]),
                             int(rec["decoded_packets"]), int(rec["collided"]),
                             int(rec["header_dropped"]), int(rec["discarded"]),
                             cr.payload_bytes)
        rows.append(CampaignRow(rec["family"], cr, strategy, int(rec["nodes"]),
                                int(rec["rep"]), metrics))
    return rows


# --------------------------------------------------------------------------
# aggregation

CellKey = Tuple[str, CodingRate, StrategyConfig, int]

METRIC_NAMES = ("sent", "decoded_payloads", "decoded_packets", "collided", "header_dropped",
                "discarded", "data_sent_kb", "data_decoded_kb", "data_decoded_payload_kb")


def mean_metrics(rows: Sequence[CampaignRow]) -> Dict[CellKey, Dict[str, float]]:
    """Mean of every metric over repetitions, keyed by (family, cr, strategy, nodes)."""
    def key(r):
        return (r.family, r.coding_rate, r.strategy, r.nodes)

    out: Dict[CellKey, Dict[str, float]] = {}
    for k, group in groupby(sorted(rows, key=lambda r: (key(r)[0], key(r)[1], key(r)[3],
                                                        repr(key(r)[2]))), key=key):
        group = list(group)
        out[k] = {m: float(np.mean([getattr(r.metrics, m) for r in group]))
                  for m in METRIC_NAMES}
    return out


def leading_family(means, families: Sequence[str], cr: CodingRate, strategy: StrategyConfig,
                   nodes: int, metric: str = "data_decoded_kb") -> str:
    scores = [(means[(f, cr, strategy, nodes)][metric], f) for f in families]
    return max(scores, key=lambda s: s[0])[1]


def crossover_point(means, incumbent: str, challenger: str, cr: CodingRate,
                    strategy: StrategyConfig, node_counts: Sequence[int],
                    metric: str = "data_decoded_kb") -> Optional[int]:
    """Smallest sweep node count from which ``challenger`` leads at every later point."""
    point = None
    for n in sorted(node_counts):
        ahead = (means[(challenger, cr, strategy, n)][metric]
                 > means[(incumbent, cr, strategy, n)][metric])
        if ahead and point is None:
            point = n
        elif not ahead:
            point = None
    return point


@dataclass(frozen=True)
class LeadRange:
    demodulators: str
    coding_rate: CodingRate
    strategy: str
    first_nodes: int
    last_nodes: int
    first_kb: float
    last_kb: float
    family: str


def lead_ranges(means, metric: str = "data_decoded_kb") -> List[LeadRange]:
    """Node ranges where each family leads, per (strategy, coding rate)."""
    groups: Dict[Tuple[StrategyConfig, CodingRate], Dict[int, List[Tuple[float, str, float]]]] = {}
    for (fam, cr, strat, nodes), vals in means.items():
        groups.setdefault((strat, cr), {}).setdefault(nodes, []).append(
            (vals[metric], fam, vals["data_sent_kb"]))
    out = []
    for (strat, cr), by_nodes in sorted(groups.items(),
                                        key=lambda kv: (kv[0][0].demodulators_text,
                                                        kv[0][0].label, kv[0][1])):
        segments: List[list] = []
        for nodes in sorted(by_nodes):
            entries = by_nodes[nodes]
            top = max(e[0] for e in entries)
            leaders = sorted(e[1] for e in entries if e[0] == top)
            leader = leaders[0] if len(leaders) == 1 else "tie:" + "/".join(leaders)
            sent_kb = entries[0][2]
            if segments and segments[-1][4] == leader:
                segments[-1][1] = nodes
                segments[-1][3] = sent_kb
            else:
                segments.append([nodes, nodes, sent_kb, sent_kb, leader])
        for a, b, ka, kb, fam in segments:
            out.append(LeadRange(strat.demodulators_text, cr, strat.label, a, b, ka, kb, fam))
    return out


def lead_table(ranges: Sequence[LeadRange]) -> str:
    """Text table in the style of a best-family-per-load summary."""
    lines = [f"{'demods':>7} {'cr':>3} {'strategy':<22} {'nodes':>13} {'sent kB':>13}  leader"]
    for r in ranges:
        lines.append(f"{r.demodulators:>7} {int(r.coding_rate):>3} {r.strategy:<22} "
                     f"{r.first_nodes:>6}-{r.last_nodes:<6} "
                     f"{int(r.first_kb):>6}-{int(r.last_kb):<6}  {r.family}")
    return "\n".join(lines) + "\n"
