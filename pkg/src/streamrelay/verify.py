"""Exhaustive and randomized verification of the relay construction."""

from __future__ import annotations

import logging
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from streamrelay.channel import (
    DEFAULT_HORIZON_CAP,
    DcswChannel,
    ErasurePattern,
    GilbertElliott,
    HorizonCapExceeded,
    enumerate_patterns,
    is_permissible,
    sample_ge,
    sample_permissible,
)
from streamrelay.gf import get_field
from streamrelay.planner import RelayParams, derived_params, frac_json, plan as plan_rates
from streamrelay.relay import ConstructionError, RelayCode, build_relay_code, random_messages, run_end_to_end
from streamrelay.sde import SdeCode, StreamDecoder, build_sde, encode_stream

log = logging.getLogger(__name__)

OPTIMAL = "OPTIMAL"
REGIME_OUTSIDE = "REGIME-OUTSIDE"
FAIL = "FAIL"
INCOMPLETE = "INCOMPLETE"

MODES = ("exhaustive", "joint", "ge")
MAX_WITNESSES = 10

# Gilbert-Elliott soak defaults (documented in the README).
DEFAULT_GE = GilbertElliott(p_good_to_bad=0.05, p_bad_to_good=0.5, erase_good=0.01, erase_bad=0.8, seed=42)


def worker_count() -> int:
    cap = os.environ.get("STREAMRELAY_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def default_hop_horizon(code: SdeCode) -> int:
    return code.N + code.T + 1


def default_joint_horizon(p: RelayParams) -> int:
    return 2 * (p.T + 1)


@dataclass
class HopResult:
    hop: int
    channel: DcswChannel
    horizon: int
    patterns: int = 0
    misses: int = 0
    failing_patterns: int = 0
    witnesses: list = field(default_factory=list)

    def merge(self, other: HopResult) -> HopResult:
        out = HopResult(self.hop, self.channel, self.horizon)
        out.patterns = self.patterns + other.patterns
        out.misses = self.misses + other.misses
        out.failing_patterns = self.failing_patterns + other.failing_patterns
        out.witnesses = sorted(self.witnesses + other.witnesses, key=_witness_key)[:MAX_WITNESSES]
        return out

    def to_json(self) -> dict:
        ch = self.channel
        return {
            "hop": self.hop,
            "channel": {"a": ch.a, "b": ch.b, "T": ch.T},
            "horizon": self.horizon,
            "patterns": self.patterns,
            "misses": self.misses,
            "failing_patterns": self.failing_patterns,
        }


def _witness_key(w: dict):
    return (str(w.get("hop")), w.get("index", 0), w["symbol"])


def _hop_worker(args) -> HopResult:
    (a, b, T, k, order), ch, H, hop, seed, part, parts = args
    code = build_sde(a, b, T, k, get_field(order))
    return _verify_hop_part(code, ch, H, hop, seed, part, parts)


def _verify_hop_part(code: SdeCode, ch: DcswChannel, H: int, hop: int, seed: int, part: int, parts: int) -> HopResult:
    rng = random.Random(f"hop{hop}:{seed}")
    messages = random_messages(code.k, H, rng, code.base.field.order)
    src = encode_stream(code, messages, horizon=H + code.N - 1).packets
    delays = code.delays
    res = HopResult(hop, ch, H)
    for idx, pat in enumerate(enumerate_patterns(ch, H, cap=max(H, DEFAULT_HORIZON_CAP))):
        if idx % parts != part:
            continue
        res.patterns += 1
        erased = pat.erased
        dec = StreamDecoder(code)
        for t, pkt in enumerate(src):
            dec.push(None if t in erased else pkt)
        ledger = dec.ledger
        bad = 0
        for i in erased:
            for j in range(code.k):
                got = ledger.recovery_time(i, j)
                if got is None or got > i + delays[j] or ledger.value(i, j) != messages[i][j]:
                    bad += 1
                    if len(res.witnesses) < MAX_WITNESSES:
                        res.witnesses.append({
                            "hop": hop,
                            "index": idx,
                            "pattern": pat.to_json(),
                            "symbol": [i, j],
                            "deadline": i + delays[j],
                            "actual": got,
                        })
        if bad:
            res.misses += bad
            res.failing_patterns += 1
    return res


def verify_hop(
    code: SdeCode,
    ch: DcswChannel,
    H: int | None = None,
    hop: int = 1,
    seed: int = 0,
    cap: int = DEFAULT_HORIZON_CAP,
    workers: int = 1,
) -> HopResult:
    """Run the decoder against every permissible pattern of ``ch`` on ``[0, H)``.

    A miss is a message symbol that is unrecovered, wrong, or later than its
    per-symbol delay. Symbols that arrive unerased are always on time, so only
    erased packets are inspected.
    """
    H = default_hop_horizon(code) if H is None else H
    if H > cap:
        raise HorizonCapExceeded(f"horizon {H} exceeds enumeration cap {cap}")
    if workers <= 1:
        return _verify_hop_part(code, ch, H, hop, seed, 0, 1)
    key = (code.a, code.b, code.T, code.k, code.base.field.order)
    jobs = [(key, ch, H, hop, seed, part, workers) for part in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_hop_worker, jobs))
    out = parts[0]
    for r in parts[1:]:
        out = out.merge(r)
    return out


def converse_witnesses(p: RelayParams, H: int | None = None) -> list[tuple[ErasurePattern, ErasurePattern]]:
    """Converse scenarios at every offset: a b1-burst on hop one alone, then a b2-burst on hop two alone."""
    H = default_joint_horizon(p) if H is None else H
    empty = ErasurePattern(H)
    pairs = [(ErasurePattern.burst(H, s, p.b1), empty) for s in range(H - p.b1 + 1)]
    pairs += [(empty, ErasurePattern.burst(H, s, p.b2)) for s in range(H - p.b2 + 1)]
    return pairs


@dataclass
class VerifyPlan:
    params: RelayParams
    mode: str = "exhaustive"
    horizon1: int | None = None
    horizon2: int | None = None
    joint_horizon: int | None = None
    samples: int = 10_000
    seed: int = 0
    widen1: int = 0
    widen2: int = 0
    cap: int = DEFAULT_HORIZON_CAP
    field_order: int = 256
    ge: GilbertElliott = DEFAULT_GE
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.samples < 0:
            raise ValueError("samples must be non-negative")

    def channels(self) -> tuple[DcswChannel, DcswChannel]:
        p = self.params
        return (
            DcswChannel(p.a1, p.b1 + self.widen1, p.T1),
            DcswChannel(p.a2, p.b2 + self.widen2, p.T2),
        )


@dataclass
class VerifyReport:
    params: RelayParams
    mode: str
    seed: int
    rate: Fraction | None
    bound: Fraction
    regime_optimal: bool
    hop_results: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    joint: dict | None = None
    ge: dict | None = None
    error: str | None = None
    incomplete: str | None = None
    elapsed: float = 0.0

    @property
    def misses(self) -> int:
        n = sum(h.misses for h in self.hop_results)
        if self.joint:
            n += self.joint["misses"]
        if self.ge:
            n += self.ge["permissible_misses"]
        return n

    @property
    def verdict(self) -> str:
        if self.misses:
            return FAIL
        if self.incomplete:
            return INCOMPLETE
        if self.error or not self.regime_optimal or self.rate != self.bound:
            return REGIME_OUTSIDE
        return OPTIMAL

    @property
    def passed(self) -> bool:
        if self.mode == "exhaustive":
            return self.verdict == OPTIMAL
        return self.error is None and self.incomplete is None and self.misses == 0

    def to_json(self) -> dict:
        out = {
            "params": self.params.to_json(),
            "derived": derived_params(self.params),
            "mode": self.mode,
            "rate": frac_json(self.rate),
            "bound": frac_json(self.bound),
            "hop_results": [h.to_json() for h in self.hop_results],
            "witnesses": self.witnesses,
            "misses": self.misses,
            "verdict": self.verdict,
            "seed": self.seed,
        }
        if self.joint is not None:
            out["joint"] = self.joint
        if self.ge is not None:
            out["ge"] = self.ge
        if self.error is not None:
            out["error"] = self.error
        if self.incomplete is not None:
            out["incomplete"] = self.incomplete
        return out


def _joint_messages(code: RelayCode, H: int, seed: int):
    return random_messages(code.k, H, random.Random(f"msg:{seed}"), code.hop1.base.field.order)


def _record_joint_miss(witnesses: list, ledger, pat1, pat2, tag, index) -> int:
    missed = ledger.misses()
    for i, j in missed:
        if len(witnesses) >= MAX_WITNESSES:
            break
        witnesses.append({
            "hop": tag,
            "index": index,
            "pat1": pat1.to_json(),
            "pat2": pat2.to_json(),
            "symbol": [i, j],
            "deadline": i + ledger.T,
            "actual": ledger.recovery_time(i, j),
        })
    return len(missed)


def _joint_chunk(plan: VerifyPlan, lo: int, hi: int, with_converse: bool):
    p = plan.params
    code = build_relay_code(p, get_field(plan.field_order))
    H = plan.joint_horizon or default_joint_horizon(p)
    ch1, ch2 = plan.channels()
    messages = _joint_messages(code, H, plan.seed)
    source = encode_stream(code.hop1, messages, horizon=H + p.T)
    witnesses: list = []
    misses = failing = 0
    runs = []
    if with_converse:
        runs += [("converse", idx, pair) for idx, pair in enumerate(converse_witnesses(p, H))]
    for idx in range(lo, hi):
        rng = random.Random(f"joint:{plan.seed}:{idx}")
        pat1 = sample_permissible(ch1, H, rng)
        pat2 = sample_permissible(ch2, H, rng)
        runs.append(("joint", idx, (pat1, pat2)))
    for tag, idx, (pat1, pat2) in runs:
        ledger = run_end_to_end(code, messages, pat1, pat2, source=source)
        n = _record_joint_miss(witnesses, ledger, pat1, pat2, tag, idx)
        misses += n
        failing += bool(n)
    return misses, failing, witnesses


def _joint_worker(args):
    return _joint_chunk(*args)


def _joint(plan: VerifyPlan, code: RelayCode, report: VerifyReport) -> None:
    p = plan.params
    H = plan.joint_horizon or default_joint_horizon(p)
    workers = max(1, min(plan.workers, plan.samples))
    bounds = [(plan.samples * w // workers, plan.samples * (w + 1) // workers) for w in range(workers)]
    jobs = [(plan, lo, hi, w == 0) for w, (lo, hi) in enumerate(bounds)]
    if workers == 1:
        parts = [_joint_chunk(*jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_joint_worker, jobs))
    misses = sum(m for m, _, _ in parts)
    failing = sum(f for _, f, _ in parts)
    for _, _, w in parts:
        report.witnesses.extend(w)
    report.joint = {
        "horizon": H,
        "samples": plan.samples,
        "converse_pairs": len(converse_witnesses(p, H)),
        "misses": misses,
        "failing_pairs": failing,
    }


def _ge_soak(plan: VerifyPlan, code: RelayCode, report: VerifyReport) -> None:
    p = plan.params
    H = plan.joint_horizon or default_joint_horizon(p)
    ch1, ch2 = plan.channels()
    messages = _joint_messages(code, H, plan.ge.seed)
    source = encode_stream(code.hop1, messages, horizon=H + p.T)
    acc = {
        "params": plan.ge.to_json(),
        "horizon": H,
        "samples": plan.samples,
        "permissible_pairs": 0,
        "erasures_hop1": 0,
        "erasures_hop2": 0,
        "slots_per_hop": plan.samples * H,
        "symbols": plan.samples * H * code.k,
        "symbols_missed": 0,
        "symbols_poisoned": 0,
        "permissible_misses": 0,
    }
    for idx in range(plan.samples):
        pat1 = sample_ge(plan.ge, H, random.Random(f"ge:{plan.ge.seed}:{idx}:1"))
        pat2 = sample_ge(plan.ge, H, random.Random(f"ge:{plan.ge.seed}:{idx}:2"))
        acc["erasures_hop1"] += len(pat1)
        acc["erasures_hop2"] += len(pat2)
        ok = is_permissible(ch1, pat1) and is_permissible(ch2, pat2)
        acc["permissible_pairs"] += ok
        ledger = run_end_to_end(code, messages, pat1, pat2, source=source)
        acc["symbols_poisoned"] += len(ledger.poisoned)
        if ok:
            acc["permissible_misses"] += _record_joint_miss(report.witnesses, ledger, pat1, pat2, "ge", idx)
        else:
            acc["symbols_missed"] += len(ledger.misses())
    lost = acc["symbols_missed"]
    acc["residual_loss"] = frac_json(Fraction(lost, acc["symbols"])) if acc["symbols"] else None
    report.ge = acc


def verify_relay(plan: VerifyPlan) -> VerifyReport:
    start = time.perf_counter()
    p = plan.params
    rates = plan_rates(p)
    report = VerifyReport(
        params=p,
        mode=plan.mode,
        seed=plan.seed if plan.mode != "ge" else plan.ge.seed,
        rate=rates.rate,
        bound=rates.bound,
        regime_optimal=rates.regime.optimal,
    )
    try:
        code = build_relay_code(p, get_field(plan.field_order))
    except ConstructionError as exc:
        report.error = str(exc)
        report.elapsed = time.perf_counter() - start
        return report
    ch1, ch2 = plan.channels()
    if plan.mode == "exhaustive":
        for hop, sde, ch, H in ((1, code.hop1, ch1, plan.horizon1), (2, code.hop2, ch2, plan.horizon2)):
            H = default_hop_horizon(sde) if H is None else H
            if H > plan.cap:
                report.incomplete = f"hop {hop} horizon {H} exceeds enumeration cap {plan.cap}"
                break
            res = verify_hop(sde, ch, H, hop=hop, seed=plan.seed, cap=plan.cap, workers=plan.workers)
            report.hop_results.append(res)
            report.witnesses.extend(res.witnesses)
    elif plan.mode == "joint":
        _joint(plan, code, report)
    else:
        _ge_soak(plan, code, report)
    report.witnesses = report.witnesses[:MAX_WITNESSES]
    report.elapsed = time.perf_counter() - start
    return report
