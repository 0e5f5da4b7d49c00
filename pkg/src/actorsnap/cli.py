"""Command-line entry point.

    actorsnap bench run --name counting --iters 10 --workers 2 --snapshot every-k:2 --out out/
    actorsnap bench latency --requests 100000 --snapshot every-n:1000 --out out/
    actorsnap bench overhead --iters 10 --out out/
    actorsnap snapshot dump out/snap-1.asnp
    actorsnap restore out/snap-1.asnp --continue
    actorsnap verify --seed 7
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import snapfile
from .errors import ActorSnapError
from .restore import load_snapshot
from .runtime import ActorSystem


def _policy(text: str, kind: str) -> int | None:
    if text == "none":
        return None
    prefix, _, n = text.partition(":")
    if prefix != kind or not n.isdigit() or int(n) < 1:
        raise argparse.ArgumentTypeError(f"expected 'none' or '{kind}:N' with N >= 1, got {text!r}")
    return int(n)


def _params(items) -> dict:
    out = {}
    for item in items or ():
        k, sep, v = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        try:
            out[k] = int(v)
        except ValueError:
            out[k] = float(v)
    return out


def _kv(d: dict, out=None) -> None:
    for k, v in d.items():
        print(f"{k}={v}", file=out or sys.stdout)


# -- bench -----------------------------------------------------------------------

def cmd_bench_run(a) -> int:
    from .bench.harness import BenchConfig, run_benchmark

    cfg = BenchConfig(a.name, a.iters, a.warmup, a.workers, _policy(a.snapshot, "every-k"), a.out, a.seed,
                      a.scale, _params(a.param), a.placement, a.during_turns)
    res = run_benchmark(cfg)
    _kv(res.summary())
    if cfg.out:
        print(f"csv={cfg.out}/{cfg.name}.csv")
    return 0 if res.all_ok else 1


def cmd_bench_overhead(a) -> int:
    from .bench.harness import format_table, overhead_table

    rows = overhead_table(a.names or None, a.iters, a.every_k, a.out, workers=a.workers, scale=a.scale,
                          placement=a.placement, seed=a.seed)
    print(format_table(rows))
    return 0 if all(r.ok for r in rows) else 1


def cmd_bench_latency(a) -> int:
    from .bench.latency import LatencyConfig, baseline_delta, restore_and_replay, run_latency_workload

    cfg = LatencyConfig(a.requests, a.workers, _policy(a.snapshot, "every-n"), a.concurrency, a.think_time,
                        a.seed, out=a.out, keep_snapshots=False)
    res = run_latency_workload(cfg)
    summary = res.summary()
    summary.pop("window_throughput", None)
    if a.baseline and cfg.every_n:
        base = run_latency_workload(LatencyConfig(a.requests, a.workers, None, a.concurrency, a.think_time, a.seed))
        summary.update(baseline_delta(base, res))
    if a.restore_check and res.snapshots:
        ok, _, replayed = restore_and_replay(res)
        summary["restore_replayed_requests"] = replayed
        summary["restore_ledger_match"] = str(ok).lower()
    _kv(summary)
    if cfg.out:
        print(f"csv={cfg.out}/latency.csv")
    return 0 if summary.get("errors") == 0 and summary.get("restore_ledger_match", "true") == "true" else 1


# -- snapshot files -------------------------------------------------------------

def cmd_snapshot_dump(a) -> int:
    sf = snapfile.read_snapshot(a.file)
    print(snapfile.dump(sf, records=not a.summary))
    rep = snapfile.validate_snapshot(sf)
    print(f"validation={'ok' if rep.ok else 'defects'} records={rep.records} reachable={rep.reachable}")
    for d in rep.defects:
        print(f"defect: {d}")
    return 0 if rep.ok else 1


def _define_for(sf: snapfile.SnapshotFile, system: ActorSystem, name: str | None):
    """Register the program that wrote ``sf``; returns (kind, program)."""
    from .bench import latency, programs, race

    names = {t.name for t in sf.types}
    if name:
        if name == "latency":
            latency.define(system)
            return "latency", None
        prog = programs.get(name)
        prog.define(system)
        return "benchmark", prog
    prog = programs.detect(names)
    if prog is not None:
        prog.define(system)
        return "benchmark", prog
    if {"Session", "Lookup", "Booking"} <= names:
        latency.define(system)
        return "latency", None
    if {"RaceA", "RaceB"} <= names:
        race.define(system)
        system.externals.update(interleave=lambda: None, poked=lambda: None)
        return "race", None
    return "unknown", None


def cmd_restore(a) -> int:
    from .bench import programs

    sf = snapfile.read_snapshot(a.file)
    s = ActorSystem(a.workers, seed=a.seed)
    try:
        kind, prog = _define_for(sf, s, a.program)
        rs = load_snapshot(sf, s)
        mail = sum(len(v) for v in rs.restored_messages.values())
        _kv({"snapshot_id": sf.snapshot_id, "phase": sf.phase, "program": prog.name if prog else kind,
             "actors": len(s.actors) - 1, "records": rs.records, "restored_messages": mail,
             "resolutions": len(sf.resolutions)})
        if not a.cont:
            return 0
        rs.resume()
        s.wait_idle()
        _kv({"turns_after_resume": rs.turns_executed(), "failures": len(s.failures)})
        if prog is not None:
            handle = programs.locate(prog, s)
            got = prog.result(s, handle)
            print(f"result={got!r}")
            if a.param:
                params = {**prog.params, **_params(a.param)}
                ok, _, want = prog.check(s, handle, params)
                print(f"expected={want!r}")
                print(f"self_check={'pass' if ok else 'fail'}")
                return 0 if ok else 1
        return 0 if not s.failures else 1
    finally:
        s.shutdown()


def cmd_verify(a) -> int:
    from .bench.programs import PROGRAMS
    from .bench.race import run_race
    from .bench.verify import verify_roundtrip

    names = a.program or list(PROGRAMS)
    fails = 0
    for seed in range(a.seed, a.seed + a.seeds):
        for name in names:
            prog = PROGRAMS[name]
            r = verify_roundtrip(prog, seed, prog.params if a.full else None)
            print(r.line())
            fails += not r.passed
    if not a.no_race:
        on, off = run_race(repair=True), run_race(repair=False)
        ok = on.continued and off.stalled
        print(f"{'PASS' if ok else 'FAIL'} program=race repair=on continued={str(on.continued).lower()} "
              f"repair=off stalled={str(off.stalled).lower()}")
        fails += not ok
    print(f"failures={fails}")
    return 0 if fails == 0 else 1


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    from .bench.programs import PROGRAMS

    p = argparse.ArgumentParser(prog="actorsnap", description="Actor runtime with asynchronous snapshots.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="benchmarks").add_subparsers(dest="bench_command", required=True)

    r = bench.add_parser("run", help="run one benchmark for N iterations")
    r.add_argument("--name", required=True, choices=list(PROGRAMS))
    r.add_argument("--iters", type=int, default=10)
    r.add_argument("--warmup", type=int, default=None, help="iterations to discard (default 10%%)")
    r.add_argument("--workers", type=int, default=0, help="0 selects the deterministic scheduler")
    r.add_argument("--snapshot", default="none", help="none or every-k:M")
    r.add_argument("--out", default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--scale", choices=("full", "small"), default="full")
    r.add_argument("--placement", choices=("before", "during"), default="during")
    r.add_argument("--during-turns", type=int, default=200)
    r.add_argument("--param", action="append", metavar="KEY=VALUE")
    r.set_defaults(fn=cmd_bench_run)

    o = bench.add_parser("overhead", help="overhead table with and without snapshots")
    o.add_argument("names", nargs="*", default=[], help=f"benchmarks (default: all of {', '.join(PROGRAMS)})")
    o.add_argument("--iters", type=int, default=10)
    o.add_argument("--every-k", type=int, default=2)
    o.add_argument("--workers", type=int, default=0)
    o.add_argument("--scale", choices=("full", "small"), default="full")
    o.add_argument("--placement", choices=("before", "during"), default="during")
    o.add_argument("--seed", type=int, default=None)
    o.add_argument("--out", default=None)
    o.set_defaults(fn=cmd_bench_overhead)

    lt = bench.add_parser("latency", help="request/response latency workload")
    lt.add_argument("--requests", type=int, default=100_000)
    lt.add_argument("--workers", type=int, default=2)
    lt.add_argument("--snapshot", default="none", help="none or every-n:N")
    lt.add_argument("--concurrency", type=int, default=8)
    lt.add_argument("--think-time", type=float, default=0.0)
    lt.add_argument("--seed", type=int, default=0)
    lt.add_argument("--out", default=None)
    lt.add_argument("--baseline", action="store_true", help="also run without snapshots and report the delta")
    lt.add_argument("--restore-check", action="store_true",
                    help="restore the last snapshot, replay later requests and compare the ledger")
    lt.set_defaults(fn=cmd_bench_latency)

    snap = sub.add_parser("snapshot", help="snapshot files").add_subparsers(dest="snap_command", required=True)
    d = snap.add_parser("dump", help="print and validate a snapshot file")
    d.add_argument("file")
    d.add_argument("--summary", action="store_true", help="sections only, no heap records")
    d.set_defaults(fn=cmd_snapshot_dump)

    rs = sub.add_parser("restore", help="restore a snapshot file")
    rs.add_argument("file")
    rs.add_argument("--continue", dest="cont", action="store_true", help="resume and run to quiescence")
    rs.add_argument("--program", default=None, help="program that wrote the file (detected by default)")
    rs.add_argument("--workers", type=int, default=0)
    rs.add_argument("--seed", type=int, default=None)
    rs.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="benchmark parameters, enables the self-check")
    rs.set_defaults(fn=cmd_restore)

    v = sub.add_parser("verify", help="snapshot/restore round-trip checks")
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    v.add_argument("--program", action="append", choices=list(PROGRAMS))
    v.add_argument("--full", action="store_true", help="full-size benchmark parameters")
    v.add_argument("--no-race", action="store_true", help="skip the lost-resolution race check")
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    p = build_parser()
    a = p.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.fn(a)
    except (ActorSnapError, OSError, ValueError, KeyError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
