"""Command-line driver: plan, construct, trace, simulate, verify.

Exit codes: 0 success or verified, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

from streamrelay.channel import DcswChannel, ErasurePattern, GilbertElliott, is_permissible, sample_ge
from streamrelay.gf import get_field
from streamrelay.planner import InvalidParams, RelayParams, plan
from streamrelay.relay import ConstructionError, build_relay_code, random_messages, run_end_to_end, trace
from streamrelay.verify import DEFAULT_GE, MODES, VerifyPlan, default_joint_horizon, verify_relay, worker_count

log = logging.getLogger("streamrelay")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_params(p: argparse.ArgumentParser, optional: bool = False) -> None:
    p.add_argument("params", nargs="*" if optional else 5, type=int, metavar="N",
                   help="a1 b1 a2 b2 T")
    p.add_argument("--field", type=int, choices=(256, 65536), default=256)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamrelay", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="rates, bound, k and delay profile")
    _add_params(p)
    p.add_argument("--out")

    p = sub.add_parser("construct", help="build both hop codes and print them")
    _add_params(p)
    p.add_argument("--out")

    p = sub.add_parser("trace", help="symbolic per-node slot table")
    _add_params(p)
    p.add_argument("--node", choices=("s", "r", "d", "all"), default="all")
    p.add_argument("--from", dest="t_start", type=int, default=None)
    p.add_argument("--to", dest="t_end", type=int, default=None)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="one end-to-end run over given erasure patterns")
    _add_params(p)
    p.add_argument("--pat1", help="hop-one pattern file")
    p.add_argument("--pat2", help="hop-two pattern file")
    p.add_argument("--ge", action="store_true", help="draw both patterns from a Gilbert-Elliott channel")
    p.add_argument("--ge-config", help="JSON file with Gilbert-Elliott parameters")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-dir", help="write the four packet streams as JSON lines")
    p.add_argument("--out")

    p = sub.add_parser("verify", help="exhaustive / randomized verification")
    _add_params(p, optional=True)
    p.add_argument("--from-plan", help="read parameters from a `plan` JSON output")
    p.add_argument("--mode", choices=MODES, default="exhaustive")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--cap", type=int, default=24)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--ge-config")
    p.add_argument("--widen-hop1", type=int, default=0, help="verify hop one against bursts this much longer")
    p.add_argument("--widen-hop2", type=int, default=0)
    p.add_argument("--out")
    return parser


def _params(args) -> RelayParams:
    vals = list(getattr(args, "params", None) or [])
    if getattr(args, "from_plan", None):
        if vals:
            raise UsageError("give either positional parameters or --from-plan, not both")
        obj = json.loads(Path(args.from_plan).read_text(encoding="utf-8"))
        obj = obj.get("params", obj)
        vals = [obj[k] for k in ("a1", "b1", "a2", "b2", "T")]
    if len(vals) != 5:
        raise UsageError("expected five parameters: a1 b1 a2 b2 T")
    try:
        return RelayParams(*vals)
    except InvalidParams as exc:
        raise UsageError(str(exc)) from exc


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    print(text)


def _ge_from(path: str | None) -> GilbertElliott:
    if not path:
        return DEFAULT_GE
    try:
        return GilbertElliott.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad Gilbert-Elliott config {path}: {exc}") from exc


def cmd_plan(args) -> int:
    _emit(plan(_params(args)).to_json(), args.out)
    return EXIT_OK


def cmd_construct(args) -> int:
    p = _params(args)
    try:
        code = build_relay_code(p, get_field(args.field))
    except ConstructionError as exc:
        raise UsageError(str(exc)) from exc
    _emit(code.to_json(), args.out)
    return EXIT_OK


def _table(rows: list[dict]) -> str:
    lines = []
    for node in dict.fromkeys(r["node"] for r in rows):
        cols = [r for r in rows if r["node"] == node]
        width = max(len(s) for r in cols for s in r["slots"] + [str(r["t"])]) + 2
        lines.append(f"node {node}")
        lines.append(("time".ljust(8) + "".join(str(r["t"]).ljust(width) for r in cols)).rstrip())
        for slot in range(len(cols[0]["slots"])):
            lines.append((f"[{slot}]".ljust(8) + "".join(r["slots"][slot].ljust(width) for r in cols)).rstrip())
        lines.append("")
    return "\n".join(lines)


def cmd_trace(args) -> int:
    p = _params(args)
    try:
        code = build_relay_code(p, get_field(args.field))
    except ConstructionError as exc:
        raise UsageError(str(exc)) from exc
    t_start = 0 if args.t_start is None else args.t_start
    t_end = t_start + 2 * p.T if args.t_end is None else args.t_end
    if t_start < 0 or t_end < t_start:
        raise UsageError("need 0 <= --from <= --to")
    messages = random_messages(code.k, t_end + 1, random.Random(args.seed), args.field)
    nodes = ("s", "r", "d") if args.node == "all" else (args.node,)
    rows = [row for node in nodes for row in trace(code, node, t_start, t_end, messages)]
    if args.format == "table":
        text = _table(rows)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        print(text)
    else:
        _emit({"params": p.to_json(), "rows": rows}, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = _params(args)
    try:
        code = build_relay_code(p, get_field(args.field))
    except ConstructionError as exc:
        raise UsageError(str(exc)) from exc
    try:
        pat1 = ErasurePattern.load(args.pat1) if args.pat1 else None
        pat2 = ErasurePattern.load(args.pat2) if args.pat2 else None
    except (OSError, ValueError) as exc:
        raise UsageError(f"malformed pattern file: {exc}") from exc
    horizons = [pat.H for pat in (pat1, pat2) if pat is not None]
    H = args.horizon or (max(horizons) if horizons else default_joint_horizon(p))
    if args.ge:
        ge = _ge_from(args.ge_config)
        pat1 = pat1 or sample_ge(ge, H, random.Random(f"ge:{ge.seed}:1"))
        pat2 = pat2 or sample_ge(ge, H, random.Random(f"ge:{ge.seed}:2"))
    pat1 = pat1 or ErasurePattern(H)
    pat2 = pat2 or ErasurePattern(H)
    if max(pat1.H, pat2.H) > H:
        raise UsageError(f"pattern horizon exceeds simulation horizon {H}")
    ok1 = is_permissible(DcswChannel(p.a1, p.b1, p.T1), pat1)
    ok2 = is_permissible(DcswChannel(p.a2, p.b2, p.T2), pat2)
    if not (ok1 and ok2):
        log.warning("pattern not permissible (hop1=%s, hop2=%s); deadlines are not guaranteed", ok1, ok2)
    messages = random_messages(code.k, H, random.Random(args.seed), args.field)
    run = run_end_to_end(code, messages, pat1, pat2, keep_streams=True)
    if args.dump_dir:
        d = Path(args.dump_dir)
        d.mkdir(parents=True, exist_ok=True)
        run.source_tx.dump(d / "source_tx.jsonl")
        run.relay_rx.dump(d / "relay_rx.jsonl")
        run.relay_tx.dump(d / "relay_tx.jsonl")
        run.destination_rx.dump(d / "destination_rx.jsonl")
    _emit({
        "params": p.to_json(),
        "seed": args.seed,
        "pat1": pat1.to_json(),
        "pat2": pat2.to_json(),
        "permissible": {"hop1": ok1, "hop2": ok2},
        "ledger": run.ledger.to_json(),
    }, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    p = _params(args)
    ge = _ge_from(args.ge_config)
    if args.seed is not None and args.mode == "ge":
        ge = GilbertElliott(**{**ge.to_json(), "seed": args.seed})
    try:
        vplan = VerifyPlan(
            params=p,
            mode=args.mode,
            horizon1=args.horizon,
            horizon2=args.horizon,
            joint_horizon=args.horizon,
            samples=args.samples,
            seed=args.seed or 0,
            widen1=args.widen_hop1,
            widen2=args.widen_hop2,
            cap=args.cap,
            field_order=args.field,
            ge=ge,
            workers=worker_count(),
        )
        vplan.channels()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = verify_relay(vplan)
    _emit(report.to_json(), args.out)
    log.info("verdict %s in %.2fs", report.verdict, report.elapsed)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "plan": cmd_plan,
    "construct": cmd_construct,
    "trace": cmd_trace,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"streamrelay {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
