"""Invariants checked over generated programs, heaps and schedules."""

from __future__ import annotations

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from actorsnap import ActorSystem, snapfile
from actorsnap.bench import heapgen
from actorsnap.bench.programs import PROGRAMS
from actorsnap.bench.verify import heap_signature, snapshot_at
from actorsnap.errors import AlreadyResolved
from actorsnap.messages import RESOLVED
from actorsnap.restore import load_snapshot
from actorsnap.values import FarRef, acting_as

SLOW = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SLOW
@given(st.integers(0, 10_000), st.integers(1, 400))
def test_restored_heap_is_isomorphic(seed, size):
    s = ActorSystem()
    heapgen.define(s)
    heapgen.build_heap(s, seed, max_objects=size)
    sig = heap_signature(s)
    s.trigger_snapshot()
    data = s.await_snapshot().data
    sf = snapfile.read_snapshot(data)
    assert snapfile.validate_snapshot(sf).ok
    t = ActorSystem()
    heapgen.define(t)
    load_snapshot(sf, t)
    assert heap_signature(t) == sig


@SLOW
@given(st.sampled_from(sorted(PROGRAMS)), st.integers(0, 1000), st.integers(1, 600))
def test_capture_equals_stale_processed(name, seed, step):
    prog = PROGRAMS[name]
    _, _, snap, orc = snapshot_at(prog, dict(prog.small), seed, step)
    assert orc.defects(snap) == []
    assert snapfile.validate_snapshot(snapfile.read_snapshot(snap.data)).ok


@SLOW
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60),
       st.integers(0, 1000))
def test_per_sender_fifo_under_any_schedule(sends, seed):
    s = ActorSystem(seed=seed)
    got: dict = {}

    def relay(ctx, this, dst, k):
        ctx.tell(dst, "recv", this[0], k)

    def recv(ctx, this, src, k):
        got.setdefault((this[0], src), []).append(k)

    s.define("Node", 1, {"relay": relay, "recv": recv})
    refs = [s.spawn("Node", i) for i in range(4)]
    for k, (a, b) in enumerate(sends):
        s.tell(refs[a], "relay", refs[b], k)
    s.run()
    want: dict = {}
    for k, (a, b) in enumerate(sends):
        want.setdefault((b, a), []).append(k)
    assert got == want


@SLOW
@given(st.integers(0, 1000), st.lists(st.integers(1, 40), min_size=1, max_size=4))
def test_local_phase_is_monotonic(seed, triggers):
    s = ActorSystem(seed=seed)
    seen: dict = {}
    bad = []

    def hook(actor, msg, g):
        if actor.local_phase < seen.get(actor.id, 0):
            bad.append(actor.id)
        seen[actor.id] = actor.local_phase

    s.turn_hook = hook
    s.define("Ping", 1, {"ping": lambda ctx, this, n: ctx.tell(this[0], "ping", n - 1) if n else None})
    a = s.spawn("Ping", None)
    b = s.spawn("Ping", None)
    with acting_as(a.owner):
        a.target[0] = FarRef(b.owner, b.target)
    with acting_as(b.owner):
        b.target[0] = FarRef(a.owner, a.target)
    s.tell(a, "ping", 300)
    for steps in triggers:
        s.run(max_steps=steps)
        s.trigger_snapshot()
        s.await_snapshot()
    s.run()
    assert not bad
    assert all(act.local_phase <= s.phase for act in s.actors.values())


@given(st.lists(st.integers(), min_size=1, max_size=5))
def test_promise_resolves_at_most_once(values):
    s = ActorSystem()
    p = s.new_promise(0)
    for i, v in enumerate(values):
        if i == 0:
            s.resolve_promise(p, v)
        else:
            try:
                s.resolve_promise(p, v)
                raise AssertionError("second resolution accepted")
            except AlreadyResolved:
                pass
    assert p.state == RESOLVED and p.value == values[0]


@SLOW
@given(st.integers(0, 500))
def test_each_object_serialized_once(seed):
    s = ActorSystem()
    heapgen.define(s)
    stats = heapgen.build_heap(s, seed, max_objects=300)
    s.trigger_snapshot()
    sf = snapfile.read_snapshot(s.await_snapshot().data)
    containers = 0
    for start, end in sf.heaps.values():
        pos = start
        while pos < end:
            tag, layout, _, pos = sf.record_at(pos)
            name = sf.type_name(tag)
            containers += name.startswith("Node") or name == "Array"
    # node objects plus one root list per holder; nothing duplicated
    assert containers == stats.objects + stats.actors
