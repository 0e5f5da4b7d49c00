"""Request/response latency workload.

A miniature airline booking service made of three actors: a session actor
holding customer records, a lookup actor with a preloaded flight cache and
a booking actor keeping the ledger. A seeded generator on its own thread
keeps a fixed number of requests outstanding (closed loop), optionally
triggers a snapshot every N requests, and timestamps each response from the
promise callback. Records flow through a queue to a single consumer.
"""

from __future__ import annotations

import bisect
import csv
import os
import queue
import random
import threading
import time
from dataclasses import dataclass, field

from ..errors import SnapshotInProgress
from ..messages import ERRORED
from ..restore import load_snapshot
from ..runtime import ActorSystem
from ..values import Arr, FarRef, Obj, acting_as

REQUEST_MIX = (("query", 0.45), ("book", 0.20), ("view", 0.15), ("login", 0.15), ("logout", 0.05))
AIRPORTS = ("AMS", "BOS", "CDG", "DXB", "FRA", "GRU", "HKG", "JFK", "LAX", "LHR",
            "MAD", "NRT", "ORD", "PEK", "SFO", "SIN", "SYD", "YYZ", "ZRH", "BRU")
WINDOW = 0.1


@dataclass
class LatencyConfig:
    requests: int = 100_000
    workers: int = 2
    every_n: int | None = None
    concurrency: int = 8
    think_time: float = 0.0
    seed: int = 0
    customers: int = 1000
    flights: int = 2000
    out: str | None = None
    keep_snapshots: bool = True

    def __post_init__(self) -> None:
        if self.requests < 1:
            raise ValueError("requests must be >= 1")
        if self.every_n is not None and self.every_n < 1:
            raise ValueError("snapshot interval must be >= 1")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.think_time < 0:
            raise ValueError("think time must be >= 0")


@dataclass(slots=True)
class LatencyRecord:
    request_id: int
    request_type: str
    enqueue_time: float
    response_time: float
    latency_us: int
    snapshot_active: bool
    ok: bool = True


@dataclass
class Request:
    rid: int
    kind: str
    args: tuple
    phase: int


@dataclass
class LatencyResult:
    config: LatencyConfig
    records: list[LatencyRecord]
    requests: list[Request]
    duration: float
    turn_stamps: list[float]
    snapshots: list = field(default_factory=list)
    deferred_triggers: int = 0
    ledger: tuple = ()
    handle: dict = field(default_factory=dict)
    start: float = 0.0

    # -- metrics --------------------------------------------------------------

    def windows(self) -> list[int]:
        """Completed requests per 100 ms window over the whole run."""
        n = max(1, int(self.duration / WINDOW))
        counts = [0] * n
        for r in self.records:
            k = int(r.response_time / WINDOW)
            if k < n:
                counts[k] += 1
        return counts

    def snapshot_windows(self) -> list[tuple[int, float, int]]:
        """(snapshot id, window start offset, completed turns) for each full
        100 ms window laid end to end from a trigger up to the end of its
        write. A snapshot shorter than 100 ms contains no full window."""
        stamps = self.turn_stamps
        out = []
        for st in self.snapshots:
            t0, t1 = st.triggered_at, st.finished_at
            k = 0
            while t0 + (k + 1) * WINDOW <= t1:
                a = t0 + k * WINDOW
                n = bisect.bisect_right(stamps, a + WINDOW) - bisect.bisect_left(stamps, a)
                out.append((st.id, a - t0, n))
                k += 1
        return out

    def max_gap_during_snapshots(self) -> float:
        """Longest stretch without a completed turn inside any trigger-to-write
        interval, counting the stretches after the trigger and before the end.
        Below 100 ms exactly when every 100 ms window (at any offset) between
        trigger and finalize holds at least one turn."""
        stamps = self.turn_stamps
        worst = 0.0
        for st in self.snapshots:
            lo = bisect.bisect_left(stamps, st.triggered_at)
            hi = bisect.bisect_right(stamps, st.finished_at)
            prev = st.triggered_at
            for t in stamps[lo:hi]:
                worst = max(worst, t - prev)
                prev = t
            worst = max(worst, st.finished_at - prev)
        return worst

    def no_global_pause(self) -> bool:
        return self.max_gap_during_snapshots() < WINDOW and min(self.windows()) > 0

    def summary(self) -> dict:
        recs = self.records
        total = len(recs)
        lat = [r.latency_us for r in recs]
        slow100 = sum(1 for x in lat if x > 100_000)
        slow200 = sum(1 for x in lat if x > 200_000)
        slow500 = sum(1 for x in lat if x > 500_000)
        wins = self.windows()
        out: dict = {
            "requests": total,
            "workers": self.config.workers,
            "snapshot_policy": f"every-n:{self.config.every_n}" if self.config.every_n else "none",
            "seed": self.config.seed,
            "duration_s": f"{self.duration:.3f}",
            "throughput_rps": f"{total / self.duration:.1f}" if self.duration > 0 else "0",
            "errors": sum(1 for r in recs if not r.ok),
            "slow_100ms_count": slow100,
            "slow_100ms_share": f"{slow100 / total:.6f}" if total else "0",
            "slow_200ms_count": slow200,
            "slow_200ms_share": f"{slow200 / total:.6f}" if total else "0",
            "slow_500ms_count": slow500,
            "max_latency_us": max(lat) if lat else 0,
            "mean_latency_us": f"{sum(lat) / total:.1f}" if total else "0",
        }
        for kind, _ in REQUEST_MIX:
            ks = [r.latency_us for r in recs if r.request_type == kind]
            out[f"count_{kind}"] = len(ks)
            out[f"mean_us_{kind}"] = f"{sum(ks) / len(ks):.1f}" if ks else "0"
        out["windows"] = len(wins)
        out["window_min_rps"] = f"{min(wins) / WINDOW:.0f}"
        out["window_max_rps"] = f"{max(wins) / WINDOW:.0f}"
        out["window_throughput"] = ",".join(str(w) for w in wins)
        if self.config.every_n:
            sw = self.snapshot_windows()
            sizes = [st.size for st in self.snapshots]
            out["snapshots"] = len(self.snapshots)
            out["deferred_triggers"] = self.deferred_triggers
            out["snapshot_bytes_max"] = max(sizes) if sizes else 0
            out["snapshot_bytes_mean"] = f"{sum(sizes) / len(sizes):.0f}" if sizes else "0"
            out["snapshot_sizes"] = ",".join(str(s) for s in sizes)
            out["snapshot_ms_max"] = (f"{max(st.finished_at - st.triggered_at for st in self.snapshots) * 1e3:.2f}"
                                      if self.snapshots else "0")
            out["snapshot_windows"] = len(sw)
            out["snapshot_window_min_turns"] = min((n for _, _, n in sw), default="none")
            out["max_turn_gap_ms_during_snapshot"] = f"{self.max_gap_during_snapshots() * 1e3:.2f}"
            out["no_global_pause"] = str(self.no_global_pause()).lower()
        return out


# -- the service ---------------------------------------------------------------

def define(s: ActorSystem) -> None:
    # Customer: uid, logins, active
    # Flight: number, origin, dest, seats, price
    # Session root: customers, booking, lookup
    # Lookup root: flights, routes (per origin/dest pair, shared Flight objects)
    # Booking root: per-customer counts, per-flight counts, total

    def login(ctx, this, uid):
        c = this[0][uid]
        c[1] += 1
        c[2] = True
        return c[1]

    def logout(ctx, this, uid):
        c = this[0][uid]
        was = c[2]
        c[2] = False
        return was

    def book(ctx, this, uid, flight):
        if not 0 <= uid < len(this[0]):
            raise ValueError(f"unknown customer {uid}")
        return ctx.send(this[1], "book", uid, flight)

    def query(ctx, this, origin, dest):
        best = None
        for f in this[1][origin * len(AIRPORTS) + dest]:
            if f[3] > 0 and (best is None or f[4] < best[4]):
                best = f
        return -1 if best is None else best[0]

    def ledger_book(ctx, this, uid, flight):
        this[0][uid] += 1
        this[1][flight] += 1
        this[2] += 1
        return this[2]

    def ledger_view(ctx, this, uid):
        return this[0][uid]

    s.define("Customer", 3)
    s.define("Flight", 5)
    s.define("Session", 3, {"login": login, "logout": logout, "book": book})
    s.define("Lookup", 2, {"query": query})
    s.define("Booking", 3, {"book": ledger_book, "view": ledger_view})


def setup(s: ActorSystem, customers: int, flights: int, seed: int) -> dict:
    rng = random.Random(seed)
    booking = s.spawn("Booking", None, None, 0)
    lookup = s.spawn("Lookup", None, None)
    session = s.spawn("Session", None, booking, lookup)
    b, lk, se = (s.actors[r.owner] for r in (booking, lookup, session))
    n_air = len(AIRPORTS)
    with acting_as(lk.id):
        routes = Arr(lk.id, [Arr(lk.id, []) for _ in range(n_air * n_air)])
        fl = Arr(lk.id, [])
        for i in range(flights):
            o = rng.randrange(n_air)
            d = (o + 1 + rng.randrange(n_air - 1)) % n_air
            f = Obj(lk.id, s.types["Flight"], [i, AIRPORTS[o], AIRPORTS[d], 200 + rng.randrange(200),
                                               round(50 + rng.random() * 950, 2)])
            fl.append(f)
            routes[o * n_air + d].append(f)
        lk.root[0] = fl
        lk.root[1] = routes
    with acting_as(se.id):
        se.root[0] = Arr(se.id, [Obj(se.id, s.types["Customer"], [i, 0, False]) for i in range(customers)])
    with acting_as(b.id):
        b.root[0] = Arr(b.id, [0] * customers)
        b.root[1] = Arr(b.id, [0] * flights)
    return {"session": session.owner, "lookup": lookup.owner, "booking": booking.owner,
            "customers": customers, "flights": flights}


def ledger(s: ActorSystem, handle: dict) -> tuple:
    bid = handle["booking"]
    root = s.actors[bid].root
    with acting_as(bid):
        return tuple(root[0]), tuple(root[1]), root[2]


def make_request(rng: random.Random, rid: int, handle: dict) -> tuple[str, tuple]:
    x = rng.random()
    acc = 0.0
    kind = REQUEST_MIX[-1][0]
    for k, w in REQUEST_MIX:
        acc += w
        if x < acc:
            kind = k
            break
    uid = rng.randrange(handle["customers"])
    if kind == "query":
        o = rng.randrange(len(AIRPORTS))
        return kind, (o, (o + 1 + rng.randrange(len(AIRPORTS) - 1)) % len(AIRPORTS))
    if kind == "book":
        return kind, (uid, rng.randrange(handle["flights"]))
    return kind, (uid,)


def _target(kind: str) -> tuple[str, str]:
    if kind == "query":
        return "lookup", "query"
    if kind == "view":
        return "booking", "view"
    return "session", kind


def send_request(s: ActorSystem, refs: dict, kind: str, args: tuple):
    who, sel = _target(kind)
    return s.send(refs[who], sel, *args)


# -- driver ----------------------------------------------------------------------

def run_latency_workload(cfg: LatencyConfig) -> LatencyResult:
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
    s = ActorSystem(cfg.workers, batch=None if cfg.workers else 16, snapshot_dir=cfg.out)
    define(s)
    handle = setup(s, cfg.customers, cfg.flights, cfg.seed)
    refs = {k: _far(s, handle[k]) for k in ("session", "lookup", "booking")}

    stamps: list[float] = []
    s.turn_end_hook = lambda _a, _now=time.perf_counter, _app=stamps.append: _app(_now())
    # Per-request rows stay plain tuples of atoms while the run is live: the
    # cyclic collector untracks those, so full collections do not rescan
    # 10^5 bookkeeping objects (a pause that would hit snapshots hardest).
    records_q: queue.SimpleQueue = queue.SimpleQueue()
    records: list[tuple] = []
    reqs: list[tuple] = []
    slots = threading.Semaphore(cfg.concurrency)
    rng = random.Random(cfg.seed)
    deferred = 0

    def consumer() -> None:
        while True:
            r = records_q.get()
            if r is None:
                return
            records.append(r)

    def on_done(p, rid, kind, t0, active0):
        t1 = time.perf_counter()
        records_q.put((rid, kind, t0 - start, t1 - start, max(0, int((t1 - t0) * 1e6)),
                       active0 or s.snapshot is not None, p.state != ERRORED))
        slots.release()

    def issue(rid: int) -> None:
        kind, args = make_request(rng, rid, handle)
        reqs.append((rid, kind, args, s.phase))
        t0 = time.perf_counter()
        p = send_request(s, refs, kind, args)
        p.add_callback(lambda p, rid=rid, kind=kind, t0=t0, a=s.snapshot is not None: on_done(p, rid, kind, t0, a))

    def maybe_trigger(rid: int, pending: bool) -> bool:
        nonlocal deferred
        if cfg.every_n and rid and rid % cfg.every_n == 0:
            if pending:
                deferred += 1
            pending = True
        if pending:
            try:
                s.trigger_snapshot()
                return False
            except SnapshotInProgress:
                return True
        return False

    cons = threading.Thread(target=consumer, name="latency-records", daemon=True)
    cons.start()
    start = time.perf_counter()
    try:
        if cfg.workers:
            def generator() -> None:
                pending = False
                for rid in range(cfg.requests):
                    slots.acquire()
                    if s.failures:
                        slots.release()
                        return
                    pending = maybe_trigger(rid, pending)
                    if cfg.think_time:
                        time.sleep(cfg.think_time)
                    issue(rid)

            gen = threading.Thread(target=generator, name="latency-generator", daemon=True)
            gen.start()
            gen.join()
            s.wait_idle()
        else:
            pending = False
            for rid in range(cfg.requests):
                while not slots.acquire(blocking=False):
                    s.run(max_steps=1)
                pending = maybe_trigger(rid, pending)
                issue(rid)
            s.run()
            while s.snapshot is not None:
                s.await_snapshot()
                s.run()
        duration = time.perf_counter() - start
        if s.failures:
            raise RuntimeError(f"worker failures: {s.failures[:3]}")
        result = LatencyResult(cfg, [], [], duration, stamps, list(s.snapshots), deferred,
                               ledger(s, handle), handle, start)
    finally:
        records_q.put(None)
        cons.join()
        s.shutdown()
    result.records = [LatencyRecord(*r) for r in records]
    result.requests = [Request(*r) for r in reqs]
    result.turn_stamps.sort()
    if not cfg.keep_snapshots:
        for st in result.snapshots[:-1]:
            st.data = None
    if cfg.out:
        write_outputs(result, cfg.out)
    return result


def _far(s: ActorSystem, aid: int) -> FarRef:
    return FarRef(aid, s.actors[aid].root)


def write_outputs(res: LatencyResult, out: str) -> None:
    with open(os.path.join(out, "latency.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["request_id", "request_type", "enqueue_s", "response_s", "latency_us", "snapshot_active", "ok"])
        for r in res.records:
            w.writerow([r.request_id, r.request_type, f"{r.enqueue_time:.6f}", f"{r.response_time:.6f}",
                        r.latency_us, int(r.snapshot_active), int(r.ok)])
    with open(os.path.join(out, "summary.txt"), "w") as f:
        for k, v in res.summary().items():
            f.write(f"{k}={v}\n")


def restore_and_replay(res: LatencyResult, snapshot=None) -> tuple[bool, tuple, int]:
    """Restore the last snapshot, replay every request issued in or after its
    phase, and compare the booking ledger with the uninterrupted run.

    Returns (equal, restored ledger, replayed request count).
    """
    st = res.snapshots[-1] if snapshot is None else snapshot
    src = st.path if st.path and os.path.exists(st.path) else st.data
    fresh = ActorSystem(batch=16)
    define(fresh)
    rs = load_snapshot(src, fresh)
    rs.resume()
    fresh.run()
    refs = {k: rs.ref(res.handle[k]) for k in ("session", "lookup", "booking")}
    replay = [r for r in res.requests if r.phase >= st.phase]
    failed = []
    for r in replay:
        p = send_request(fresh, refs, r.kind, r.args)
        p.add_callback(lambda p: failed.append(p) if p.state == ERRORED else None)
    fresh.run()
    got = ledger(fresh, res.handle)
    return got == res.ledger and not failed, got, len(replay)


def baseline_delta(base: LatencyResult, snap: LatencyResult) -> dict:
    """Change in the share of requests slower than 100 ms."""
    b = base.summary()
    s = snap.summary()
    bs, ss = float(b["slow_100ms_share"]), float(s["slow_100ms_share"])
    rel = (ss - bs) / bs * 100 if bs > 0 else float("inf") if ss > 0 else 0.0
    return {
        "baseline_slow_100ms_share": f"{bs:.6f}",
        "snapshot_slow_100ms_share": f"{ss:.6f}",
        "slow_100ms_share_delta": f"{ss - bs:+.6f}",
        "slow_100ms_relative_change_pct": f"{rel:+.2f}" if rel != float("inf") else "inf",
        "reference_relative_change_pct": "+5.43",
        "baseline_max_latency_us": b["max_latency_us"],
        "snapshot_max_latency_us": s["max_latency_us"],
    }
