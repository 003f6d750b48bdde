"""Symbol-wise decode-and-forward over source -> relay -> destination.

The source runs an ``(a, b'1, T1)`` SDE code. The relay decodes it and, at
time ``i``, places source symbol ``(i - t_j, j)`` into its own message slot
``k-1-j`` (symbol order flipped), regardless of when that symbol was actually
recovered. The relay then runs an ``(a, b'2, T2)`` SDE code towards the
destination.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction

from streamrelay.channel import ErasurePattern
from streamrelay.gf import GF256, GaloisField
from streamrelay.planner import RelayParams, regime_check
from streamrelay.sde import (
    DecodeLedger,
    PacketStream,
    SdeCode,
    StreamDecoder,
    StreamEncoder,
    build_sde,
    encode_stream,
)

log = logging.getLogger(__name__)

UNAVAILABLE = None


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class RelayCode:
    params: RelayParams
    hop1: SdeCode
    hop2: SdeCode

    @property
    def k(self) -> int:
        return self.hop1.k

    @property
    def t(self) -> tuple[int, ...]:
        return self.hop1.delays

    @property
    def tau(self) -> tuple[int, ...]:
        k = self.k
        return tuple(self.hop2.delays[k - 1 - j] for j in range(k))

    @property
    def profile(self) -> list[tuple[int, int]]:
        return list(zip(self.t, self.tau))

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, max(self.hop1.n, self.hop2.n))

    def schedule(self, i: int, slot: int) -> tuple[int, int]:
        """Source (time, symbol) carried in relay message slot ``slot`` at relay time ``i``."""
        j = self.k - 1 - slot
        return i - self.hop1.delays[j], j

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "k": self.k,
            "hop1": self.hop1.to_json(),
            "hop2": self.hop2.to_json(),
            "delay_profile": [list(d) for d in self.profile],
            "rate": {"num": self.rate.numerator, "den": self.rate.denominator},
        }


def build_relay_code(p: RelayParams, field: GaloisField = GF256) -> RelayCode:
    k = p.k_int
    if k < 1:
        raise ConstructionError(f"k={p.k} < 1: no code for {p.as_tuple()}")
    if not regime_check(p).optimal:
        log.warning("parameters %s are outside the rate-optimal regime", p.as_tuple())
    try:
        hop1 = build_sde(p.a, p.b1p, p.T1, k, field)
        hop2 = build_sde(p.a, p.b2p, p.T2, k, field)
    except ValueError as exc:
        raise ConstructionError(f"dispersion-span constraint fails for {p.as_tuple()}: {exc}") from exc
    code = RelayCode(p, hop1, hop2)
    bad = [j for j, (t, tau) in enumerate(code.profile) if t + tau > p.T]
    if bad:
        raise ConstructionError(f"delay profile {code.profile} exceeds T={p.T} for symbols {bad}")
    return code


def relay_step(code: RelayCode, hop1_ledger: DecodeLedger, i: int):
    """Relay message packet for time ``i``; UNAVAILABLE where a scheduled symbol was not recovered."""
    out = []
    for slot in range(code.k):
        src_t, j = code.schedule(i, slot)
        if src_t < 0:
            out.append(0)
            continue
        rt = hop1_ledger.recovery_time(src_t, j)
        out.append(hop1_ledger.value(src_t, j) if rt is not None and rt <= i else UNAVAILABLE)
    return out


def random_messages(k: int, H: int, rng: random.Random, order: int = 256) -> list[list[int]]:
    return [[rng.randrange(order) for _ in range(k)] for _ in range(H)]


@dataclass
class EndToEndLedger:
    T: int
    k: int
    H: int
    times: dict = field(default_factory=dict)
    poisoned: set = field(default_factory=set)
    wrong: set = field(default_factory=set)
    deadlines: dict = field(default_factory=dict)

    def recovery_time(self, i: int, j: int):
        return self.times.get((i, j))

    def slack(self, i: int, j: int):
        t = self.times.get((i, j))
        return None if t is None else self.T - (t - i)

    def misses(self) -> list[tuple[int, int]]:
        """Symbols that are unrecovered, late, wrong or poisoned."""
        out = []
        for i in range(self.H):
            for j in range(self.k):
                t = self.times.get((i, j))
                if t is None or t > i + self.T or (i, j) in self.poisoned or (i, j) in self.wrong:
                    out.append((i, j))
        return out

    def to_json(self) -> dict:
        entries = []
        for i in range(self.H):
            for j in range(self.k):
                t = self.times.get((i, j))
                entries.append({
                    "i": i,
                    "j": j,
                    "recovered": t,
                    "delay": None if t is None else t - i,
                    "slack": None if t is None else self.T - (t - i),
                    "scheduled": self.deadlines.get((i, j)),
                    "poisoned": (i, j) in self.poisoned,
                    "correct": t is not None and (i, j) not in self.wrong,
                })
        return {"T": self.T, "k": self.k, "H": self.H, "misses": len(self.misses()), "entries": entries}


@dataclass
class EndToEndRun:
    ledger: EndToEndLedger
    source_tx: PacketStream
    relay_rx: PacketStream
    relay_tx: PacketStream
    destination_rx: PacketStream


def run_end_to_end(
    code: RelayCode,
    messages,
    pat1: ErasurePattern,
    pat2: ErasurePattern,
    keep_streams: bool = False,
    source: PacketStream | None = None,
):
    """Simulate the three-node chain over ``len(messages)`` source packets.

    The simulation continues T slots past the last message (with zero
    messages and no erasures) so every symbol reaches its deadline.
    Returns an :class:`EndToEndLedger`, or an :class:`EndToEndRun` with all
    four packet streams when ``keep_streams`` is set. ``source`` may carry a
    pre-encoded hop-one stream of the same messages.
    """
    p = code.params
    k = code.k
    H = len(messages)
    if pat1.H > H + p.T or pat2.H > H + p.T:
        raise ValueError("pattern horizon exceeds the simulated span")
    L = H + p.T
    src = source if source is not None else encode_stream(code.hop1, messages, horizon=L)
    e1, e2 = pat1.erased, pat2.erased

    relay_dec = StreamDecoder(code.hop1)
    relay_enc = StreamEncoder(code.hop2)
    dest_dec = StreamDecoder(code.hop2)
    poisoned_relay = set()
    relay_rx, relay_tx, dest_rx = [], [], []
    for i in range(L):
        pkt = None if i in e1 else src.packets[i]
        relay_dec.push(pkt)
        msg = relay_step(code, relay_dec.ledger, i)
        for slot, v in enumerate(msg):
            if v is UNAVAILABLE:
                poisoned_relay.add(code.schedule(i, slot))
                msg[slot] = 0
        out = relay_enc.push(msg)
        rx = None if i in e2 else out
        dest_dec.push(rx)
        if keep_streams:
            relay_rx.append(pkt)
            relay_tx.append(out)
            dest_rx.append(rx)

    ledger = EndToEndLedger(p.T, k, H)
    dl = dest_dec.ledger
    t_src = code.hop1.delays
    for i in range(H):
        for j in range(k):
            r = i + t_src[j]
            slot = k - 1 - j
            ledger.deadlines[(i, j)] = r + code.hop2.delays[slot]
            t = dl.recovery_time(r, slot)
            if (i, j) in poisoned_relay:
                ledger.poisoned.add((i, j))
            if t is None:
                continue
            ledger.times[(i, j)] = t
            if dl.value(r, slot) != messages[i][j]:
                ledger.wrong.add((i, j))
    if not keep_streams:
        return ledger
    return EndToEndRun(
        ledger,
        src,
        PacketStream(code.hop1.n, relay_rx),
        PacketStream(code.hop2.n, relay_tx),
        PacketStream(code.hop2.n, dest_rx),
    )


# --- symbolic traces -------------------------------------------------------

def _label(i: int, j: int) -> str:
    return f"m[{i}][{j}]"


def _combo(terms: list[tuple[int, tuple[int, int]]]) -> str:
    parts = []
    for coeff, (i, j) in terms:
        if i < 0 or coeff == 0:
            continue
        parts.append(_label(i, j) if coeff == 1 else f"{coeff}*{_label(i, j)}")
    return "+".join(parts) if parts else "0"


def _node_labels(sde: SdeCode, t: int, source_of) -> list[str]:
    """Slot labels of packet ``t`` of ``sde``; ``source_of(time, slot)`` names a message symbol."""
    k, S = sde.k, sde.placement
    labels = []
    for l in range(k):
        i, j = source_of(t, l)
        labels.append(_label(i, j) if i >= 0 else "0")
    for row, s_l in zip(sde.base.parity, S[k:]):
        s = t - s_l
        labels.append(_combo([(c, source_of(s + S[j], j)) for j, c in enumerate(row)]))
    return labels


def trace(code: RelayCode, node: str, t_start: int, t_end: int, messages=None) -> list[dict]:
    """Per-time slot contents at ``node`` ('s', 'r' or 'd') for ``t_start..t_end`` inclusive.

    Node 'd' lists the source symbols it releases at time t under the fixed
    worst-case schedule, in relay slot order.
    """
    if node not in ("s", "r", "d"):
        raise ValueError(f"unknown node {node!r}")
    k = code.k
    if messages is None:
        messages = random_messages(k, t_end + 1, random.Random(0), code.hop1.base.field.order)

    def m(i, j):
        return messages[i][j] if 0 <= i < len(messages) else 0

    numeric = None
    if node in ("s", "r"):
        run = run_end_to_end(code, messages[: t_end + 1], ErasurePattern(0), ErasurePattern(0), keep_streams=True)
        numeric = run.source_tx if node == "s" else run.relay_tx
    rows = []
    for t in range(t_start, t_end + 1):
        if node == "s":
            labels = _node_labels(code.hop1, t, lambda i, l: (i, l))
            values = numeric.packets[t]
        elif node == "r":
            labels = _node_labels(code.hop2, t, code.schedule)
            values = numeric.packets[t]
        else:
            syms = []
            for slot in range(k):
                j = k - 1 - slot
                syms.append((t - code.t[j] - code.tau[j], j))
            labels = [_label(i, j) if i >= 0 else "0" for i, j in syms]
            values = [m(i, j) for i, j in syms]
        rows.append({"t": t, "node": node, "slots": labels, "values": list(values)})
    return rows
