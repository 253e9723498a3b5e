import pytest
from hypothesis import given, strategies as st

from lrfhss.lfsr import (LfsrConfig, advance_lfsr, generate_state_sequence, is_maximal,
                         measure_period, output_bits)

CASE1 = (33, 45, 48, 51, 54, 57)


def bitwise_step(state, poly, m):
    """Reference step written per register cell: h_i' = h_{i+1} + q_{i+1} h_0."""
    h = [(state >> i) & 1 for i in range(m)]
    q = [(poly >> i) & 1 for i in range(m)]  # q[i] holds q_{i+1}
    nxt = [(h[i + 1] ^ (q[i] & h[0])) for i in range(m - 1)] + [q[m - 1] & h[0]]
    return sum(b << i for i, b in enumerate(nxt))


def brute_period(poly, m, seed):
    seen = {}
    s, t = seed, 0
    while s not in seen:
        seen[s] = t
        s, t = bitwise_step(s, poly, m), t + 1
    return t - seen[s]


def test_config_validation():
    with pytest.raises(ValueError):
        LfsrConfig(6, 33, 0)
    with pytest.raises(ValueError):
        LfsrConfig(6, 33, 64)
    with pytest.raises(ValueError):
        LfsrConfig(6, 0b011111)  # top coefficient clear
    with pytest.raises(ValueError):
        LfsrConfig(6, 0b1100001)  # wider than the register


def test_zero_state_rejected():
    with pytest.raises(ValueError):
        advance_lfsr(0, LfsrConfig(6, 33))


def test_pure_shift_when_low_bit_clear():
    for poly in CASE1:
        assert advance_lfsr(6, LfsrConfig(6, poly)) == 3


def test_top_only_polynomial_moves_low_bit_to_top():
    assert advance_lfsr(1, LfsrConfig(6, 32)) == 32


@pytest.mark.parametrize("poly", CASE1)
def test_step_matches_cellwise_reference(poly):
    cfg = LfsrConfig(6, poly)
    for s in range(1, 64):
        assert advance_lfsr(s, cfg) == bitwise_step(s, poly, 6)


def test_state_sequence_examples():
    cfg = LfsrConfig(6, 33, 6)
    assert generate_state_sequence(cfg, 1) == [6]
    assert generate_state_sequence(cfg, 0) == []
    seq = generate_state_sequence(cfg, 64)
    assert seq[63] == seq[0]
    order5 = generate_state_sequence(LfsrConfig(5, 0x12, 1), 31)
    assert len(set(order5)) == 31 and 0 not in order5


@pytest.mark.parametrize("poly", CASE1)
def test_case1_polynomials_are_maximal(poly):
    cfg = LfsrConfig(6, poly, 6)
    assert measure_period(cfg) == 63 == brute_period(poly, 6, 6)
    assert sorted(generate_state_sequence(cfg, 63)) == list(range(1, 64))


@pytest.mark.parametrize("poly", [36, 41])
def test_non_primitive_polynomial(poly):
    # word 36 is x^6 + x^3 + 1, of order 9; the cycle through 1 under 41 has length 21
    cfg = LfsrConfig(6, poly, 1)
    p = measure_period(cfg)
    assert p == brute_period(poly, 6, 1)
    assert p < 63 and 63 % p == 0
    assert not is_maximal(cfg)


def test_rotation_polynomial_is_not_maximal():
    assert measure_period(LfsrConfig(6, 32, 1)) == 6


@pytest.mark.parametrize("poly", CASE1)
def test_balance_of_output_bits(poly):
    bits = output_bits(LfsrConfig(6, poly, 6), 63)
    assert sum(bits) == 32 and bits.count(0) == 31


@given(st.integers(3, 9).flatmap(
    lambda m: st.tuples(st.just(m), st.integers(1 << (m - 1), (1 << m) - 1))))
def test_step_is_a_bijection(mp):
    # any polynomial with q_m set gives an invertible map on nonzero states
    m, poly = mp
    cfg = LfsrConfig(m, poly)
    images = {advance_lfsr(s, cfg) for s in range(1, 1 << m)}
    assert images == set(range(1, 1 << m))


@given(st.integers(3, 9).flatmap(
    lambda m: st.tuples(st.just(m), st.integers(1 << (m - 1), (1 << m) - 1),
                        st.integers(1, (1 << m) - 1))))
def test_period_matches_brute_force(args):
    m, poly, seed = args
    assert measure_period(LfsrConfig(m, poly, seed)) == brute_period(poly, m, seed)
