import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from lrfhss.channel import (FramePlan, Schedule, SimulationConfig, build_occupancy,
                            collided_slot_matrix, schedule_transmissions)
from lrfhss.families import build_named_family
from lrfhss.gateway import (Outcome, StrategyConfig, allocate_demodulators, decode_threshold,
                            evaluate_frame, evaluate_frames, run_schedule, run_simulation)

FAMILIES = {n: build_named_family(n) for n in ("driver", "li-fan-2l")}
BASELINE = StrategyConfig()
COMBOS = [StrategyConfig(a, b, c, tol) for a, b, c in itertools.product([False, True], repeat=3)
          for tol in (0, 4)]


def crowded(n, cr, seed, name="driver"):
    """A small schedule squeezed onto one OCW and a short horizon so collisions are common."""
    cfg = SimulationConfig(coding_rate=cr, node_count=n, ocw_count=1, sim_slots=320)
    sched = schedule_transmissions(cfg, FAMILIES[name], np.random.default_rng(seed))
    return sched, build_occupancy(sched)


def naive_greedy(start, release, k):
    """Reference allocator: sweep frames in (start, node) order with an explicit busy list."""
    busy, taken = [], []
    for i in sorted(range(len(start)), key=lambda i: (start[i], i)):
        busy = [r for r in busy if r > start[i]]
        ok = k is None or len(busy) < k
        if ok:
            busy.append(release[i])
        taken.append((i, ok))
    out = np.zeros(len(start), dtype=bool)
    for i, ok in taken:
        out[i] = ok
    return out


def test_thresholds():
    assert decode_threshold(13, 1) == 5
    assert decode_threshold(13, 2) == 9
    assert decode_threshold(31, "CR1") == 11
    assert decode_threshold(31, 2) == 21
    with pytest.raises(ValueError):
        decode_threshold(-1, 1)


def test_strategy_validation_and_labels():
    with pytest.raises(ValueError):
        StrategyConfig(header_tolerance_slots=-1)
    with pytest.raises(ValueError):
        StrategyConfig(demodulator_count=-3)
    assert BASELINE.label == "baseline"
    assert StrategyConfig(True, True, True, 4, 100).label == "earlydd+hdrdrp+hdrtol4"
    assert StrategyConfig(demodulator_count=None).demodulators_text == "inf"
    sched, occ = crowded(3, 1, 0)
    with pytest.raises(ValueError):
        evaluate_frames(sched, occ, StrategyConfig(header_tolerance_slots=14))


@pytest.mark.parametrize("cr", [1, 2])
def test_lone_frame(cr):
    cfg = SimulationConfig(coding_rate=cr, node_count=1)
    for strat in COMBOS:
        m = run_simulation(cfg, FAMILIES["li-fan-2l"], strat, np.random.default_rng(4))
        assert m.decoded_payloads == m.decoded_packets == 1
    sched = schedule_transmissions(cfg, FAMILIES["li-fan-2l"], np.random.default_rng(4))
    fate = evaluate_frame(sched[0], build_occupancy(sched), StrategyConfig(True, True, True), cfg)
    thr = decode_threshold(31, cr)
    assert fate.outcome is Outcome.PAYLOAD_DECODED and fate.packet_decoded
    assert fate.release_slot == sched[0].start_slot + cfg.header_span + 6 * thr


def _frames_with_collided(cfg, victim_hops, jammer_plans):
    plans = [FramePlan(0, 300, 0, None, 0, cfg.coding_rate, tuple(victim_hops))] + jammer_plans
    sched = Schedule.from_plans(plans, cfg)
    return sched, build_occupancy(sched)


def test_early_drop_fires_at_ninth_collision_of_thirteen():
    cfg = SimulationConfig(coding_rate=1, payload_fragments=13)
    e = cfg.element_count
    victim = [200 + h for h in range(e)]
    jammers = []
    # one jammer per fragment, aligned exactly on fragments 0..8 of the victim
    for k in range(9):
        hops = [(k * 20 + h) % 100 for h in range(e)]
        hops[3] = victim[3 + k]
        start = 300 + cfg.header_span + 6 * k - cfg.header_span
        jammers.append(FramePlan(k + 1, start, 0, None, 0, cfg.coding_rate, tuple(hops)))
    sched, occ = _frames_with_collided(cfg, victim, jammers)
    assert list(collided_slot_matrix(sched, occ)[0, 3:] > 0) == [True] * 9 + [False] * 4
    fate = evaluate_frame(sched[0], occ, StrategyConfig(early_drop=True), cfg)
    assert fate.outcome is Outcome.COLLIDED
    assert fate.release_slot == 300 + cfg.header_span + 6 * 9
    assert evaluate_frames(sched, occ, StrategyConfig(early_drop=True))[0] == fate


def test_all_headers_lost_with_header_drop():
    cfg = SimulationConfig(coding_rate=1)
    victim = [200 + h for h in range(34)]
    jammers = []
    for r in range(3):
        hops = [(r * 40 + h) % 120 for h in range(34)]
        hops[r] = victim[r]
        jammers.append(FramePlan(r + 1, 300, 0, None, 0, cfg.coding_rate, tuple(hops)))
    sched, occ = _frames_with_collided(cfg, victim, jammers)
    with_drop = evaluate_frame(sched[0], occ, StrategyConfig(early_header_drop=True), cfg)
    assert with_drop.outcome is Outcome.HEADER_DROPPED
    assert with_drop.release_slot == 300 + 42
    without = evaluate_frame(sched[0], occ, BASELINE, cfg)
    assert without.outcome is Outcome.PAYLOAD_DECODED and not without.packet_decoded


def test_header_tolerance_boundary():
    cfg = SimulationConfig(coding_rate=2)
    victim = [200 + h for h in range(33)]
    # jammer fragment overlaps the last 4 slots of each victim header replica
    jammers = []
    for r in range(2):
        hops = [(r * 50 + h) % 150 for h in range(33)]
        hops[2] = victim[r]
        start = 300 + 14 * (r + 1) - 4 - cfg.header_span
        jammers.append(FramePlan(r + 1, start, 0, None, 0, cfg.coding_rate, tuple(hops)))
    sched, occ = _frames_with_collided(cfg, victim, jammers)
    assert list(collided_slot_matrix(sched, occ)[0, :2]) == [4, 4]
    strict = evaluate_frame(sched[0], occ, StrategyConfig(early_header_drop=True), cfg)
    loose = evaluate_frame(sched[0], occ, StrategyConfig(early_header_drop=True,
                                                         header_tolerance_slots=4), cfg)
    assert strict.outcome is Outcome.HEADER_DROPPED
    assert loose.outcome is Outcome.PAYLOAD_DECODED and loose.packet_decoded


def test_scalar_and_vectorised_agree():
    for cr, seed in itertools.product([1, 2], range(3)):
        sched, occ = crowded(40, cr, seed)
        for strat in COMBOS:
            fates = evaluate_frames(sched, occ, strat)
            for i, plan in enumerate(sched):
                assert evaluate_frame(plan, occ, strat, sched.config) == fates[i]


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(1, 50), st.sampled_from([1, 2]), st.integers(0, 2**32 - 1),
       st.sampled_from(sorted(FAMILIES)), st.sampled_from([0, 4]))
def test_strategy_soundness(n, cr, seed, name, tol):
    sched, occ = crowded(n, cr, seed, name)
    cfg = sched.config
    f, thr = cfg.payload_fragments, decode_threshold(cfg.payload_fragments, cr)
    base = evaluate_frames(sched, occ, StrategyConfig(header_tolerance_slots=tol))
    drop = evaluate_frames(sched, occ, StrategyConfig(early_drop=True, header_tolerance_slots=tol))
    dec = evaluate_frames(sched, occ, StrategyConfig(early_decode=True, header_tolerance_slots=tol))
    frag_fail = collided_slot_matrix(sched, occ)[:, cfg.header_replicas:] > 0
    for i in range(n):
        fails = np.cumsum(frag_fail[i])
        fire = np.flatnonzero(fails > f - thr)
        end = int(sched.start[i]) + cfg.duration
        frag_end = int(sched.start[i]) + cfg.header_span + 6 * (np.arange(f) + 1)
        # Early Drop fires exactly on frames the baseline loses
        assert (fire.size > 0) == (base.outcome[i] == Outcome.COLLIDED)
        assert drop.outcome[i] == base.outcome[i]
        want = frag_end[fire[0]] if fire.size else end
        assert drop.release_slot[i] == want
        # Early Decode keeps the baseline verdict and never releases later
        assert dec.outcome[i] == base.outcome[i]
        assert dec.packet_decoded[i] == base.packet_decoded[i]
        assert dec.release_slot[i] <= base.release_slot[i] == end
    unlimited = [run_schedule(sched, occ, StrategyConfig(a, b, c, tol))
                 for a, b, c in itertools.product([False, True], repeat=3)]
    plain = unlimited[0]
    for strat_metrics in unlimited:
        assert strat_metrics.decoded_packets == plain.decoded_packets
        assert strat_metrics.discarded == 0
        assert strat_metrics.decoded_payloads <= plain.decoded_payloads
    # without header drop, payload counts are strategy-invariant as well
    for m in unlimited[::2]:
        assert m.decoded_payloads == plain.decoded_payloads
    # demodulator monotonicity on this fixed schedule
    for strat in (StrategyConfig(header_tolerance_slots=tol),
                  StrategyConfig(True, True, True, tol)):
        counts = [run_schedule(sched, occ, StrategyConfig(
                      strat.early_decode, strat.early_drop, strat.early_header_drop, tol, k))
                  for k in range(0, n + 2, max(1, n // 6))]
        for lo, hi in zip(counts, counts[1:]):
            assert hi.decoded_payloads >= lo.decoded_payloads
            assert hi.decoded_packets >= lo.decoded_packets


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 12), st.integers(1, 12)), min_size=0, max_size=12),
       st.one_of(st.none(), st.integers(0, 6)))
def test_allocator_matches_reference(frames, k):
    start = np.array([s for s, _ in frames], dtype=np.int64)
    release = np.array([s + d for s, d in frames], dtype=np.int64)
    assert (allocate_demodulators(start, release, k) == naive_greedy(start, release, k)).all()


def test_release_before_assign_on_same_slot():
    start = np.array([0, 5])
    release = np.array([5, 9])
    assert allocate_demodulators(start, release, 1).tolist() == [True, True]
    assert allocate_demodulators(np.array([0, 4]), release, 1).tolist() == [True, False]


def test_node_id_breaks_start_ties():
    start = np.array([3, 3, 3])
    release = np.array([10, 10, 10])
    assert allocate_demodulators(start, release, 2).tolist() == [True, True, False]


@pytest.mark.parametrize("cr", [1, 2])
def test_metrics_partition(cr):
    cfg = SimulationConfig(coding_rate=cr, node_count=3000)
    for strat in (StrategyConfig(demodulator_count=100), StrategyConfig(True, True, True, 4, 100),
                  StrategyConfig(True, True, True, 0, None)):
        m = run_simulation(cfg, FAMILIES["driver"], strat, np.random.default_rng(11))
        assert m.decoded_payloads + m.collided + m.header_dropped + m.discarded == m.sent == 3000
        assert m.decoded_packets <= m.decoded_payloads
        assert m.data_sent_kb == 3000 * cfg.coding_rate.payload_bytes / 1000


def test_data_volume_mapping():
    assert run_simulation(SimulationConfig(coding_rate=1, node_count=500), FAMILIES["driver"],
                          BASELINE, np.random.default_rng(0)).data_sent_kb == 29
    assert run_simulation(SimulationConfig(coding_rate=1, node_count=1725), FAMILIES["driver"],
                          BASELINE, np.random.default_rng(0)).data_sent_kb == pytest.approx(100.05)


def test_strategies_only_matter_under_scarcity():
    cfg = SimulationConfig(coding_rate=1, node_count=2000)
    off = run_simulation(cfg, FAMILIES["li-fan-2l"], StrategyConfig(header_tolerance_slots=4),
                         np.random.default_rng(3))
    on = run_simulation(cfg, FAMILIES["li-fan-2l"], StrategyConfig(True, True, False, 4),
                        np.random.default_rng(3))
    assert (off.decoded_payloads, off.decoded_packets) == (on.decoded_payloads, on.decoded_packets)
