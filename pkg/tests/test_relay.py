import logging
import random
import re
from fractions import Fraction

import pytest

from streamrelay.channel import DcswChannel, ErasurePattern, is_permissible
from streamrelay.gf import GF256
from streamrelay.planner import RelayParams
from streamrelay.relay import (
    ConstructionError,
    EndToEndRun,
    UNAVAILABLE,
    build_relay_code,
    random_messages,
    relay_step,
    run_end_to_end,
    trace,
)
from streamrelay.sde import decode_stream, encode_stream
from streamrelay.verify import converse_witnesses

WORKED = RelayParams(1, 2, 1, 3, 8)
TERM = re.compile(r"(?:(\d+)\*)?m\[(\d+)\]\[(\d+)\]")


@pytest.fixture(scope="module")
def code():
    return build_relay_code(WORKED)


def evaluate(label, messages):
    if label == "0":
        return 0
    acc = 0
    for term in label.split("+"):
        c, i, j = TERM.fullmatch(term).groups()
        acc ^= GF256.mul(int(c or 1), messages[int(i)][int(j)])
    return acc


def test_worked_example_construction(code):
    assert code.k == 2
    assert (code.hop1.n, code.hop1.N, code.hop1.placement) == (3, 5, (0, 2, 4))
    assert (code.hop2.n, code.hop2.N, code.hop2.placement) == (3, 7, (0, 3, 6))
    assert code.profile == [(4, 3), (2, 6)]
    assert code.rate == Fraction(2, 3)


def test_symmetric_example():
    c = build_relay_code(RelayParams(1, 2, 1, 2, 8))
    assert c.k == 3 and c.hop1.n == c.hop2.n == 4
    assert c.rate == Fraction(3, 4)
    assert len({t + tau for t, tau in c.profile}) == 1


@pytest.mark.parametrize("node, rows", [("s", 7), ("r", 9), ("d", 7)])
def test_trace_golden(code, golden, node, rows):
    want = golden("worked_example_trace.json")[node]
    assert len(want) == rows
    lo, hi = want[0]["t"], want[-1]["t"]
    got = trace(code, node, lo, hi)
    assert [{"t": r["t"], "slots": r["slots"]} for r in got] == want


@pytest.mark.parametrize("node", ["s", "r", "d"])
def test_trace_values_match_labels(code, node):
    m = random_messages(2, 40, random.Random(9))
    for row in trace(code, node, 0, 30, m):
        assert [evaluate(lbl, m) for lbl in row["slots"]] == row["values"]


def test_trace_bad_node(code):
    with pytest.raises(ValueError):
        trace(code, "x", 0, 1)


def test_relay_step_flips_order(code):
    m = random_messages(2, 30, random.Random(1))
    led = decode_stream(code.hop1, encode_stream(code.hop1, m))
    for i in range(30):
        want = [m[i - 2][1] if i >= 2 else 0, m[i - 4][0] if i >= 4 else 0]
        assert relay_step(code, led, i) == want
    assert relay_step(code, led, 0) == [0, 0]


def test_schedule_lands_on_hop1_deadline(code):
    for i in range(20):
        for slot in range(code.k):
            src, j = code.schedule(i, slot)
            assert src + code.t[j] == i and j == code.k - 1 - slot


def test_relay_step_unavailable_on_unrecovered(code):
    m = random_messages(2, 30, random.Random(1))
    rx = encode_stream(code.hop1, m).erase(ErasurePattern(30, frozenset({10, 11, 12})))
    led = decode_stream(code.hop1, rx)
    assert UNAVAILABLE in [v for i in range(10, 20) for v in relay_step(code, led, i)]


def test_no_erasures(code):
    m = random_messages(2, 30, random.Random(2))
    led = run_end_to_end(code, m, ErasurePattern(30), ErasurePattern(30))
    assert led.misses() == []
    for i in range(30):
        for j in range(2):
            assert led.recovery_time(i, j) == i + code.t[j]
            assert led.slack(i, j) == 8 - code.t[j]
            assert led.deadlines[(i, j)] == i + code.t[j] + code.tau[j] <= i + 8


@pytest.mark.parametrize("s", range(0, 14))
def test_hop1_burst(code, s):
    m = random_messages(2, 20, random.Random(s))
    led = run_end_to_end(code, m, ErasurePattern.burst(20, s, 2), ErasurePattern(20))
    assert led.misses() == []
    assert all(led.recovery_time(i, j) <= i + 8 for i in range(20) for j in range(2))


def test_converse_scenarios_met(code):
    m = random_messages(2, 18, random.Random(4))
    ch1, ch2 = DcswChannel(1, 2, 6), DcswChannel(1, 3, 5)
    pairs = converse_witnesses(WORKED)
    assert len(pairs) == (18 - 2 + 1) + (18 - 3 + 1)
    for p1, p2 in pairs:
        assert is_permissible(ch1, p1) and is_permissible(ch2, p2)
        assert run_end_to_end(code, m, p1, p2).misses() == []


def test_non_permissible_hop1_poisons(code):
    m = random_messages(2, 20, random.Random(5))
    led = run_end_to_end(code, m, ErasurePattern.burst(20, 6, 3), ErasurePattern(20))
    assert led.poisoned
    assert set(led.poisoned) <= set(led.misses())
    js = led.to_json()
    assert js["misses"] == len(led.misses())
    assert any(e["poisoned"] for e in js["entries"])


def test_keep_streams(code):
    m = random_messages(2, 10, random.Random(6))
    run = run_end_to_end(code, m, ErasurePattern(10, frozenset({3})), ErasurePattern(10), keep_streams=True)
    assert isinstance(run, EndToEndRun)
    assert run.relay_rx.packets[3] is None
    assert len(run.source_tx) == len(run.relay_tx) == 10 + 8
    assert run.relay_tx.width == run.destination_rx.width == 3


def test_pattern_longer_than_run(code):
    with pytest.raises(ValueError):
        run_end_to_end(code, [[0, 0]] * 4, ErasurePattern(20), ErasurePattern(4))


def test_outside_regime_warns(caplog):
    with caplog.at_level(logging.WARNING):
        c = build_relay_code(RelayParams(1, 2, 1, 3, 9))
    assert "outside" in caplog.text
    assert c.rate == Fraction(2, 3)


def test_infeasible_floor_k():
    with pytest.raises(ConstructionError):
        build_relay_code(RelayParams(2, 2, 2, 4, 9))


def test_rate_uses_wider_hop():
    c = build_relay_code(RelayParams(1, 1, 2, 2, 7))
    assert c.rate == Fraction(c.k, max(c.hop1.n, c.hop2.n))
