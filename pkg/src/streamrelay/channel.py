"""Delay-constrained sliding-window (DCSW) erasure channel.

An ``(a, b, T)`` channel uses windows of ``w = T + 1`` slots. Inside every
window the erased slots must either number at most ``a`` or fit inside a span
of at most ``b`` consecutive slots. Slots outside ``[0, H)`` count as received.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterator

DEFAULT_HORIZON_CAP = 24


class HorizonCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class DcswChannel:
    a: int
    b: int
    T: int

    def __post_init__(self):
        if not 0 < self.a <= self.b <= self.T:
            raise ValueError(f"DCSW channel needs 0 < a <= b <= T, got a={self.a}, b={self.b}, T={self.T}")

    @property
    def w(self) -> int:
        return self.T + 1


@dataclass(frozen=True)
class ErasurePattern:
    H: int
    erased: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "erased", frozenset(self.erased))
        bad = [t for t in self.erased if not 0 <= t < self.H]
        if bad:
            raise ValueError(f"erasure indices {sorted(bad)} outside horizon {self.H}")

    @classmethod
    def burst(cls, H: int, start: int, length: int) -> ErasurePattern:
        return cls(H, frozenset(range(start, start + length)))

    def __contains__(self, t: int) -> bool:
        return t in self.erased

    def __len__(self) -> int:
        return len(self.erased)

    def shifted(self, dt: int) -> ErasurePattern:
        return ErasurePattern(self.H, frozenset(t + dt for t in self.erased))

    def to_json(self) -> dict:
        return {"H": self.H, "erased": sorted(self.erased)}

    @classmethod
    def from_json(cls, obj: dict) -> ErasurePattern:
        if not isinstance(obj, dict) or "H" not in obj or "erased" not in obj:
            raise ValueError('pattern must be a JSON object with keys "H" and "erased"')
        H = obj["H"]
        erased = obj["erased"]
        if not isinstance(H, int) or not isinstance(erased, list) or not all(isinstance(t, int) for t in erased):
            raise ValueError('pattern "H" must be an int and "erased" a list of ints')
        return cls(H, frozenset(erased))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> ErasurePattern:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _window_ok(erased_sorted: list[int], a: int, b: int) -> bool:
    return len(erased_sorted) <= a or erased_sorted[-1] - erased_sorted[0] + 1 <= b


def is_permissible(ch: DcswChannel, pat: ErasurePattern) -> bool:
    """Check every length-w window inside [0, H); a horizon shorter than w is one window."""
    w, H = ch.w, pat.H
    erased = sorted(pat.erased)
    for start in range(max(1, H - w + 1)):
        inside = [t for t in erased if start <= t < start + w]
        if not _window_ok(inside, ch.a, ch.b):
            return False
    return True


def _extension_ok(erased: list[int], t: int, ch: DcswChannel) -> bool:
    # Adding erasure t only tightens windows containing t; the one starting at
    # t-w+1 holds a superset of the others' erasures, so it is the binding one.
    lo = t - ch.w + 1
    count = 1
    first = t
    for e in reversed(erased):
        if e < lo:
            break
        count += 1
        first = e
    return count <= ch.a or t - first + 1 <= ch.b


def enumerate_patterns(ch: DcswChannel, H: int, cap: int = DEFAULT_HORIZON_CAP) -> Iterator[ErasurePattern]:
    """Yield every permissible pattern on [0, H) once, in lexicographic order.

    Order is lexicographic on the 0/1 indicator string (slot 0 first, received
    before erased), produced by depth-first extension.
    """
    if H > cap:
        raise HorizonCapExceeded(f"horizon {H} exceeds enumeration cap {cap}")
    if H < 0:
        raise ValueError("negative horizon")
    erased: list[int] = []

    def extend(t: int) -> Iterator[ErasurePattern]:
        if t == H:
            yield ErasurePattern(H, frozenset(erased))
            return
        yield from extend(t + 1)
        if _extension_ok(erased, t, ch):
            erased.append(t)
            yield from extend(t + 1)
            erased.pop()

    yield from extend(0)


def brute_force_patterns(ch: DcswChannel, H: int) -> list[ErasurePattern]:
    """Filter all 2^H subsets through :func:`is_permissible` (small H only)."""
    out = []
    for r in range(H + 1):
        for combo in combinations(range(H), r):
            pat = ErasurePattern(H, frozenset(combo))
            if is_permissible(ch, pat):
                out.append(pat)
    return out


def sample_permissible(ch: DcswChannel, H: int, rng: random.Random, p: float | None = None) -> ErasurePattern:
    """Random permissible pattern: erase each slot with probability ``p`` unless that breaks a window."""
    if p is None:
        p = rng.uniform(0.05, 0.7)
    erased: list[int] = []
    for t in range(H):
        if rng.random() < p and _extension_ok(erased, t, ch):
            erased.append(t)
    return ErasurePattern(H, frozenset(erased))


@dataclass(frozen=True)
class GilbertElliott:
    p_good_to_bad: float = 0.05
    p_bad_to_good: float = 0.5
    erase_good: float = 0.01
    erase_bad: float = 0.8
    seed: int = 42
    start_bad: bool = False

    def __post_init__(self):
        for name in ("p_good_to_bad", "p_bad_to_good", "erase_good", "erase_bad"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")

    def to_json(self) -> dict:
        return {
            "p_good_to_bad": self.p_good_to_bad,
            "p_bad_to_good": self.p_bad_to_good,
            "erase_good": self.erase_good,
            "erase_bad": self.erase_bad,
            "seed": self.seed,
            "start_bad": self.start_bad,
        }

    @classmethod
    def from_json(cls, obj: dict) -> GilbertElliott:
        return cls(**obj)


def sample_ge(ge: GilbertElliott, H: int, rng: random.Random | None = None) -> ErasurePattern:
    """Draw a pattern from the two-state chain; deterministic for a given seed.

    Each slot draws its erasure from the current state, then the state
    transitions.
    """
    if rng is None:
        rng = random.Random(ge.seed)
    bad = ge.start_bad
    erased = []
    for t in range(H):
        if rng.random() < (ge.erase_bad if bad else ge.erase_good):
            erased.append(t)
        if bad:
            bad = not (rng.random() < ge.p_bad_to_good)
        else:
            bad = rng.random() < ge.p_good_to_bad
    return ErasurePattern(H, frozenset(erased))
