import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamrelay.channel import ErasurePattern
from streamrelay.sde import (
    CodeParamsError,
    PacketStream,
    StreamDecoder,
    build_sde,
    decode_stream,
    encode_stream,
    placement_set,
)


def msgs(k, H, seed=0):
    rng = random.Random(seed)
    return [[rng.randrange(256) for _ in range(k)] for _ in range(H)]


def test_fig4_placement():
    c = build_sde(3, 6, 8, 3)
    assert (c.n, c.N) == (6, 9)
    assert c.placement == (0, 1, 2, 6, 7, 8)


def test_first_hop_of_worked_example():
    c = build_sde(1, 2, 5, 2)
    assert (c.n, c.N, c.placement, c.delays) == (3, 5, (0, 2, 4), (4, 2))
    assert (c.m, c.delta1, c.delta2) == (3, 0, 0)


def test_second_hop_of_worked_example():
    c = build_sde(1, 3, 6, 2)
    assert c.placement == (0, 3, 6)
    assert c.delays == (6, 3)


@pytest.mark.parametrize("a, k", [(1, 1), (2, 3), (3, 4)])
def test_pure_diagonal_when_a_equals_b(a, k):
    c = build_sde(a, a, 12, k)
    n = k + a
    assert c.placement == tuple(range(n))
    assert c.N == n
    assert c.delays == tuple(n - 1 - j for j in range(k))


@pytest.mark.parametrize(
    "a, b, T, k",
    [(0, 1, 2, 1), (3, 2, 5, 1), (1, 4, 3, 1), (1, 2, 5, 3), (1, 2, 5, 0), (3, 6, 8, 4)],
)
def test_build_errors(a, b, T, k):
    with pytest.raises(CodeParamsError):
        build_sde(a, b, T, k)


SMALL = [
    (a, b, T, k)
    for a in (1, 2, 3)
    for b in range(a, 7)
    for T in range(b, 13)
    for k in range(1, 13)
    if k <= ((T + 1) // b - 1) * a + min((T + 1) % b, a)
]


@pytest.mark.parametrize("a, b, T, k", SMALL[::7])
def test_structural_invariants(a, b, T, k):
    c = build_sde(a, b, T, k)
    S = c.placement
    assert S[0] == 0 and S[-1] == c.N - 1
    assert c.N == c.n + (b - a) * ((c.n - 1) // a)
    assert c.N <= T + 1
    for j in range(k):
        assert c.delays[j] == c.N - 1 - S[j] == c.N - 1 - j - (b - a) * (j // a)
        assert c.delays[j] <= T
    # any b consecutive packets hold at most a symbols of one codeword
    for off in range(-c.N, c.N):
        assert sum(off <= s < off + b for s in S) <= a
    assert c.rate == Fraction(c.k, c.n)


def test_parity_is_xor_of_diagonal():
    c = build_sde(1, 2, 5, 2)
    m = msgs(2, 30, 1)
    st_ = encode_stream(c, m)
    for i in range(30):
        want = (m[i - 4][0] if i >= 4 else 0) ^ (m[i - 2][1] if i >= 2 else 0)
        assert st_.packets[i] == [m[i][0], m[i][1], want]


def test_zero_messages_zero_stream():
    c = build_sde(2, 3, 9, 3)
    assert all(p == [0] * c.n for p in encode_stream(c, [[0] * 3] * 15).packets)


def test_repetition_diagonal():
    c = build_sde(1, 1, 1, 1)
    m = msgs(1, 10, 2)
    out = encode_stream(c, m).packets
    assert out[0] == [m[0][0], 0]
    for i in range(1, 10):
        assert out[i] == [m[i][0], m[i - 1][0]]


def test_no_erasures_zero_delay():
    c = build_sde(2, 4, 10, 3)
    m = msgs(3, 20)
    led = decode_stream(c, encode_stream(c, m))
    assert all(led.delay(i, j) == 0 and led.value(i, j) == m[i][j] for i in range(20) for j in range(3))


@pytest.mark.parametrize("s", [0, 1, 5, 9])
def test_burst_recovery_times(s):
    # codeword c = (m_c[0] @c, m_{c+2}[1] @c+2, parity @c+4); a burst on {s, s+1}
    # erases one symbol in each crossing codeword, recovered when its parity lands
    c = build_sde(1, 2, 5, 2)
    m = msgs(2, 20, s)
    rx = encode_stream(c, m, horizon=25).erase(ErasurePattern.burst(25, s, 2))
    led = decode_stream(c, rx)
    assert led.recovery_time(s, 0) == s + 4
    assert led.recovery_time(s, 1) == s + 2
    assert led.recovery_time(s + 1, 0) == s + 5
    assert led.recovery_time(s + 1, 1) == s + 3
    for i in (s, s + 1):
        assert [led.value(i, j) for j in range(2)] == m[i]


def test_fig4_burst_of_six():
    c = build_sde(3, 6, 8, 3)
    for start in range(0, 12):
        for cw in range(start - c.N + 1, start + 6):
            hit = [l for l, o in enumerate(c.placement) if start <= cw + o < start + 6]
            assert len(hit) <= 3
        m = msgs(3, 20, start)
        rx = encode_stream(c, m, horizon=30).erase(ErasurePattern.burst(30, start, 6))
        led = decode_stream(c, rx)
        for i in range(start, start + 6):
            for j in range(3):
                assert led.value(i, j) == m[i][j]
                assert led.delay(i, j) <= c.delays[j]


def test_straddling_codeword_loses_exactly_a():
    c = build_sde(3, 6, 8, 3)
    # codeword starting at 0 occupies {0,1,2,6,7,8}; burst [3,9) hits 6,7,8
    assert [o for o in c.placement if 3 <= o < 9] == [6, 7, 8]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 40), st.sets(st.integers(0, 29), max_size=2))
def test_any_a_random_erasures(seed, er):
    c = build_sde(2, 3, 8, 4)
    m = msgs(4, 30, seed)
    rx = encode_stream(c, m, horizon=40).erase(ErasurePattern(40, frozenset(er)))
    led = decode_stream(c, rx)
    for i in range(30):
        for j in range(4):
            assert led.value(i, j) == m[i][j]
            assert led.delay(i, j) <= c.delays[j]


def test_ledger_monotone_and_earliest():
    c = build_sde(1, 2, 5, 2)
    m = msgs(2, 12)
    dec = StreamDecoder(c)
    seen = {}
    for t, p in enumerate(encode_stream(c, m, horizon=18).erase(ErasurePattern(18, frozenset({3}))).packets):
        dec.push(p)
        for i, j, rt, v in dec.ledger.entries():
            assert rt >= i
            assert seen.setdefault((i, j), (rt, v)) == (rt, v)


def test_jsonl_roundtrip(tmp_path):
    c = build_sde(1, 2, 5, 2)
    s = encode_stream(c, msgs(2, 6)).erase(ErasurePattern(6, frozenset({2})))
    text = s.to_jsonl()
    assert '"erased": true' in text.splitlines()[2]
    back = PacketStream.from_jsonl(text)
    assert back.packets == s.packets and back.width == 3
    with pytest.raises(ValueError):
        PacketStream.from_jsonl('{"t": 0, "slots": [1], "erased": false}\n{"t": 2, "slots": [1], "erased": false}')


def test_placement_set_formula():
    assert placement_set(6, 3, 6) == (0, 1, 2, 6, 7, 8)
    assert placement_set(5, 2, 4) == (0, 1, 4, 5, 8)
