"""Point-to-point streaming code by staggered diagonal embedding (SDE).

Symbol ``l`` of the base codeword that starts at time ``s`` travels in slot
``l`` of the packet sent at time ``s + S[l]``. Slots ``0..k-1`` of packet ``t``
therefore carry the message ``m_t`` verbatim and slot ``l >= k`` carries the
parity of the codeword starting at ``t - S[l]``. Messages before time 0 are
taken as all-zero, so every codeword symbol at a negative time is zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from streamrelay.gf import GF256, GaloisField
from streamrelay.mds import MdsCode
from streamrelay.planner import dispersion_span


class CodeParamsError(ValueError):
    pass


def placement_set(n: int, a: int, b: int) -> tuple[int, ...]:
    return tuple(i + (b - a) * (i // a) for i in range(n))


@dataclass(frozen=True)
class SdeCode:
    a: int
    b: int
    T: int
    k: int
    n: int
    N: int
    placement: tuple[int, ...]
    delays: tuple[int, ...]
    m: int
    delta1: int
    delta2: int
    base: MdsCode = field(repr=False, compare=False)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.n)

    @property
    def k_max(self) -> int:
        return (self.m - 1) * self.a + self.delta2

    def to_json(self) -> dict:
        return {
            "a": self.a, "b": self.b, "T": self.T, "k": self.k, "n": self.n, "N": self.N,
            "placement": list(self.placement),
            "delays": list(self.delays),
            "m": self.m, "delta1": self.delta1, "delta2": self.delta2,
            "field": self.base.field.order,
            "parity": self.base.parity,
        }


def build_sde(a: int, b: int, T: int, k: int, field: GaloisField = GF256) -> SdeCode:
    if a <= 0:
        raise CodeParamsError(f"a must be positive, got {a}")
    if a > b:
        raise CodeParamsError(f"a={a} exceeds b={b}")
    if b > T:
        raise CodeParamsError(f"b={b} exceeds T={T}")
    m, delta1 = divmod(T + 1, b)
    delta2 = min(delta1, a)
    k_max = (m - 1) * a + delta2
    if not 1 <= k <= k_max:
        raise CodeParamsError(f"k={k} outside [1, {k_max}] for (a, b, T)=({a}, {b}, {T})")
    n = k + a
    N = dispersion_span(n, a, b)
    S = placement_set(n, a, b)
    delays = tuple(N - 1 - S[j] for j in range(k))
    return SdeCode(a, b, T, k, n, N, S, delays, m, delta1, delta2, MdsCode(n, k, field))


@dataclass
class PacketStream:
    """Packets from ``start`` on; ``None`` marks an erased packet."""

    width: int
    packets: list = field(default_factory=list)
    start: int = 0

    def __len__(self):
        return len(self.packets)

    def __getitem__(self, t: int):
        return self.packets[t - self.start]

    def times(self) -> range:
        return range(self.start, self.start + len(self.packets))

    def erase(self, pattern) -> PacketStream:
        return PacketStream(
            self.width,
            [None if t in pattern.erased else p for t, p in zip(self.times(), self.packets)],
            self.start,
        )

    def to_jsonl(self) -> str:
        lines = []
        for t, p in zip(self.times(), self.packets):
            lines.append(json.dumps({"t": t, "slots": [] if p is None else list(p), "erased": p is None}))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str, width: int | None = None) -> PacketStream:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows:
            return cls(width or 0, [], 0)
        start = rows[0]["t"]
        packets = []
        for expect, row in enumerate(rows, start):
            if row["t"] != expect:
                raise ValueError(f"non-contiguous stream at t={row['t']}")
            packets.append(None if row["erased"] else list(row["slots"]))
        if width is None:
            width = next((len(p) for p in packets if p is not None), 0)
        if any(p is not None and len(p) != width for p in packets):
            raise ValueError("packets of unequal width")
        return cls(width, packets, start)

    def dump(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


class StreamEncoder:
    """Causal encoder: feed one k-symbol message per time step, get one n-symbol packet back."""

    def __init__(self, code: SdeCode):
        self.code = code
        self.t = 0
        self._history: list[list[int]] = []
        k, S = code.k, code.placement
        # (parity row, [(offset back from t, message slot)]) per parity slot
        self._taps = [
            (row, [(S[l] - S[j], j) for j in range(k)])
            for row, l in zip(code.base.parity, range(k, code.n))
        ]

    def push(self, msg) -> list[int]:
        code = self.code
        msg = list(msg)
        if len(msg) != code.k:
            raise ValueError(f"message width {len(msg)} != k={code.k}")
        t = self.t
        hist = self._history
        hist.append(msg)
        dot = code.base.field.dot
        packet = list(msg)
        for row, taps in self._taps:
            packet.append(dot(row, [hist[t - back][j] if back <= t else 0 for back, j in taps]))
        self.t += 1
        return packet


def encode_stream(code: SdeCode, messages, horizon: int | None = None) -> PacketStream:
    """Encode ``messages`` from time 0; past the end, messages are zero up to ``horizon``."""
    messages = list(messages)
    horizon = len(messages) if horizon is None else horizon
    enc = StreamEncoder(code)
    zero = [0] * code.k
    return PacketStream(code.n, [enc.push(messages[t] if t < len(messages) else zero) for t in range(horizon)])


class DecodeLedger:
    """Recovery time and value of each message symbol ``(time, slot)``.

    Symbols of unerased packets are recovered on arrival; the rest are
    recovered when their codeword decodes, or never (``None``).
    """

    def __init__(self, k: int):
        self.k = k
        self.arrived: dict[int, list[int]] = {}
        self.decoded: dict[tuple[int, int], tuple[int, int]] = {}

    def record(self, i: int, j: int, t: int, value: int) -> None:
        if i not in self.arrived and (i, j) not in self.decoded:
            self.decoded[(i, j)] = (t, value)

    def recovery_time(self, i: int, j: int):
        if i in self.arrived:
            return i
        hit = self.decoded.get((i, j))
        return None if hit is None else hit[0]

    def value(self, i: int, j: int):
        pkt = self.arrived.get(i)
        if pkt is not None:
            return pkt[j]
        hit = self.decoded.get((i, j))
        return None if hit is None else hit[1]

    def delay(self, i: int, j: int):
        t = self.recovery_time(i, j)
        return None if t is None else t - i

    def entries(self):
        """Yield ``(i, j, recovery_time, value)`` for every recovered symbol."""
        for i, pkt in self.arrived.items():
            for j in range(self.k):
                yield i, j, i, pkt[j]
        for (i, j), (t, v) in self.decoded.items():
            yield i, j, t, v


class StreamDecoder:
    """Incremental decoder; decodes a codeword as soon as k of its symbols have arrived.

    Only codewords with an erased message symbol keep state; their received
    symbols are read back from the last N packets.
    """

    def __init__(self, code: SdeCode):
        self.code = code
        self.ledger = DecodeLedger(code.k)
        self.t = 0
        self._recent: dict[int, list[int] | None] = {}
        # codeword start -> number of its symbols known so far
        self._pending: dict[int, int] = {}

    def _known(self, s: int, t: int):
        """(positions, values) of codeword ``s`` known at time ``t``, oldest first."""
        pos, vals = [], []
        for l, s_l in enumerate(self.code.placement):
            u = s + s_l
            if u > t:
                break
            if u < 0:
                pos.append(l)
                vals.append(0)
            else:
                pkt = self._recent[u]
                if pkt is not None:
                    pos.append(l)
                    vals.append(pkt[l])
        return pos, vals

    def push(self, packet) -> None:
        code = self.code
        t = self.t
        self.t += 1
        N, S, k = code.N, code.placement, code.k
        recent, pending = self._recent, self._pending
        recent[t] = packet
        recent.pop(t - N, None)
        pending.pop(t - N, None)
        if packet is None:
            for l in range(k):
                s = t - S[l]
                if s not in pending:
                    pending[s] = len(self._known(s, t)[0])
            return
        self.ledger.arrived[t] = packet[:k]
        if not pending:
            return
        for s_l in S:
            s = t - s_l
            c = pending.get(s)
            if c is None:
                continue
            c += 1
            if c < k:
                pending[s] = c
                continue
            del pending[s]
            pos, vals = self._known(s, t)
            self._decode(s, tuple(pos[:k]), vals[:k], t)

    def _decode(self, s: int, pos: tuple[int, ...], vals: list[int], t: int) -> None:
        code = self.code
        msg = code.base.solve(pos, vals)
        for j in range(code.k):
            i = s + code.placement[j]
            if i >= 0 and i not in self.ledger.arrived:
                self.ledger.record(i, j, t, msg[j])


def decode_stream(code: SdeCode, received: PacketStream) -> DecodeLedger:
    if received.start != 0:
        raise ValueError("streams are decoded from time 0")
    dec = StreamDecoder(code)
    for p in received.packets:
        dec.push(p)
    return dec.ledger
