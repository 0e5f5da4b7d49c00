"""Engineered lost-promise-resolution race.

Actor A asks B for work and keeps the result promise ``p`` in its root,
sending a continuation to ``p`` right away. The snapshot is triggered while
B's turn is still running; A then serializes ``p`` as unresolved, and only
afterwards does B (still in the old phase) resolve it. Unless the
resolution is recorded separately, the restored ``p`` never resolves and a
continuation sent to it after restore is never delivered.

Two drivers are provided: a deterministic one that interleaves A's capture
step inside B's turn on a single thread, and a threaded one that produces
the same interleaving with two workers and events.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from ..messages import UNRESOLVED
from ..restore import load_snapshot
from ..runtime import ActorSystem


def define(s: ActorSystem) -> None:
    # RaceA fields: b, p, reached
    def start(ctx, this):
        p = ctx.send(this[0], "work")
        this[1] = p
        ctx.tell(p, "cont", ctx.me)

    def again(ctx, this):
        ctx.tell(this[1], "cont", ctx.me)

    def reached(ctx, this):
        this[2] += 1

    def poke(ctx, this):
        ctx.external("poked")

    def work(ctx, this):
        ctx.external("interleave")
        this[0] += 1
        return ctx.new("RaceToken", this[0])

    def cont(ctx, this, a):
        ctx.tell(a, "reached")

    s.define("RaceA", 3, {"start": start, "again": again, "reached": reached, "poke": poke})
    s.define("RaceB", 1, {"work": work})
    s.define("RaceToken", 1, {"cont": cont})


@dataclass
class RaceOutcome:
    repair: bool
    resolutions: int
    reached: int
    promise_resolved: bool
    pending_continuations: int
    snapshot: bytes

    @property
    def continued(self) -> bool:
        return self.reached == 2 and self.promise_resolved

    @property
    def stalled(self) -> bool:
        return not self.promise_resolved and self.pending_continuations > 0


def _deterministic_snapshot(repair: bool):
    s = ActorSystem()
    define(s)
    s.repair_lost_resolutions = repair
    b = s.spawn("RaceB", 0)
    a = s.spawn("RaceA", b, None, 0)
    actor_a = s.actors[a.owner]

    def interleave():
        # the snapshot starts while B's turn is in flight; A then runs its
        # first new-phase step and serializes the still-unresolved promise
        s.trigger_snapshot()
        s._capture_step(actor_a)

    s.externals["interleave"] = interleave
    s.externals["poked"] = lambda: None
    s.tell(a, "start")
    s.run()
    st = s.await_snapshot()
    return st, a.owner


def _threaded_snapshot(repair: bool, timeout: float = 5.0):
    s = ActorSystem(workers=2, batch=1)
    define(s)
    s.repair_lost_resolutions = repair
    in_work = threading.Event()
    release = threading.Event()
    poked = threading.Event()
    b = s.spawn("RaceB", 0)
    a = s.spawn("RaceA", b, None, 0)

    def interleave():
        in_work.set()
        release.wait(timeout)

    s.externals["interleave"] = interleave
    s.externals["poked"] = poked.set
    try:
        s.tell(a, "start")
        if not in_work.wait(timeout):
            raise TimeoutError("B never started its turn")
        s.trigger_snapshot()
        s.tell(a, "poke")
        if not poked.wait(timeout):
            raise TimeoutError("A never ran in the new phase")
        release.set()
        st = s.await_snapshot(timeout)
        s.wait_idle(timeout)
    finally:
        release.set()
        s.shutdown()
    return st, a.owner


def run_race(repair: bool = True, threaded: bool = False) -> RaceOutcome:
    st, a_id = _threaded_snapshot(repair) if threaded else _deterministic_snapshot(repair)
    data = st.data

    fresh = ActorSystem()
    define(fresh)
    fresh.externals["interleave"] = lambda: None
    fresh.externals["poked"] = lambda: None
    rs = load_snapshot(data, fresh)
    rs.resume()
    fresh.run()
    fresh.tell(rs.ref(a_id), "again")
    fresh.run()
    root = fresh.actors[a_id].root
    p = root[1]
    return RaceOutcome(
        repair=repair,
        resolutions=len(st.resolutions),
        reached=root[2],
        promise_resolved=p.state != UNRESOLVED,
        pending_continuations=len(p.accumulated),
        snapshot=data,
    )
