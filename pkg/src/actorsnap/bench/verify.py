"""Snapshot round-trip verification.

``verify_roundtrip`` runs a program under the seeded deterministic
scheduler, triggers a snapshot at a seeded step, restores the snapshot into
a fresh system under a different schedule and compares the outcome with an
uninterrupted run. While the snapshot is active, a turn hook records every
processed message so the captured set can be checked against the messages
that were actually processed with a stale phase.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .. import snapfile
from ..messages import Promise
from ..restore import load_snapshot
from ..runtime import ActorSystem
from ..values import Arr, FarRef, Obj
from .programs import PROGRAMS, Program


@dataclass
class CaptureOracle:
    """Independent record of stale-phase turns during a snapshot window."""

    system: ActorSystem
    stale_turns: set = field(default_factory=set)
    late_stale: list = field(default_factory=list)
    queued_at_completion: list = field(default_factory=list)
    window_turns: int = 0

    def install(self) -> CaptureOracle:
        self.system.turn_hook = self._turn
        self.system.snapshot_hook = self._done
        return self

    def _turn(self, actor, msg, g) -> None:
        st = self.system.snapshot
        if st is not None and st.phase == g:
            self.window_turns += 1
            if msg.sender_phase < g:
                self.stale_turns.add((actor.id, msg.msg_no))
        elif msg.sender_phase < g:
            self.late_stale.append((actor.id, msg.msg_no, msg.sender_phase, g))

    def _done(self, st) -> None:
        for a in list(self.system.actors.values()):
            if a.has_stale(st.phase):
                self.queued_at_completion.append(a.id)

    def defects(self, st) -> list[str]:
        captured = [(a, n) for a, n, _ in st.messages]
        out = []
        if len(captured) != len(set(captured)):
            out.append("a message was captured twice")
        cap = set(captured)
        if cap != self.stale_turns:
            missing = sorted(self.stale_turns - cap)[:5]
            extra = sorted(cap - self.stale_turns)[:5]
            out.append(f"captured set differs: missing={missing} extra={extra}")
        if self.late_stale:
            out.append(f"stale messages processed after completion: {self.late_stale[:5]}")
        if self.queued_at_completion:
            out.append(f"stale messages still queued at completion: {self.queued_at_completion[:5]}")
        return out


def heap_signature(system: ActorSystem) -> tuple:
    """Canonical form of everything reachable from registered roots.

    Objects are numbered in traversal order starting from each actor's roots
    (actors in id order), so two heaps get equal signatures exactly when
    they are isomorphic with the same actor ids.
    """
    numbers: dict[int, int] = {}
    nodes: list = []
    queue: list = []

    def ref(v):
        t = type(v)
        if t is Obj or t is Arr or t is Promise:
            k = id(v)
            if k not in numbers:
                numbers[k] = len(numbers)
                queue.append(v)
                nodes.append(None)
            return ("@", numbers[k])
        if t is FarRef:
            return ("far", v.owner, ref(v.target))
        if t is float:
            return ("f", v.hex())
        return (t.__name__, v)

    roots = []
    for aid in sorted(system.actors):
        a = system.actors[aid]
        if a.roots:
            roots.append((aid, tuple(ref(v) for v in a.roots)))
    i = 0
    while i < len(queue):
        v = queue[i]
        t = type(v)
        if t is Obj:
            nodes[i] = ("obj", v.tag.name, v.owner, tuple(ref(x) for x in v.fields))
        elif t is Arr:
            nodes[i] = ("arr", v.owner, tuple(ref(x) for x in v.fields))
        else:
            nodes[i] = ("promise", v.owner, v.state, ref(v.value),
                        tuple((m.selector, ref(m.receiver), tuple(ref(x) for x in m.args), ref(m.result))
                              for m in v.accumulated),
                        tuple(ref(d) for d, _ in v.dependents))
        i += 1
    return tuple(roots), tuple(nodes)


@dataclass
class RoundTrip:
    program: str
    seed: int
    passed: bool
    trigger_step: int = 0
    total_steps: int = 0
    captured: int = 0
    snapshot_bytes: int = 0
    rounds: int = 0
    defects: list[str] = field(default_factory=list)
    expected: object = None
    restored: object = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" defects={'; '.join(self.defects)}" if self.defects else ""
        return (f"{status} program={self.program} seed={self.seed} trigger_step={self.trigger_step}"
                f"/{self.total_steps} captured={self.captured} bytes={self.snapshot_bytes}{extra}")


def _system(prog: Program, seed: int, batch: int) -> ActorSystem:
    s = ActorSystem(seed=seed, batch=batch)
    prog.define(s)
    return s


def snapshot_at(prog: Program, params: dict, seed: int, step: int, batch: int = 1,
                oracle: bool = True):
    """Run to ``step``, trigger, and drive the system until the snapshot is written."""
    s = _system(prog, seed, batch)
    handle = prog.setup(s, params)
    orc = CaptureOracle(s).install() if oracle else None
    s.run(max_steps=step)
    s.trigger_snapshot()
    st = s.await_snapshot()
    return s, handle, st, orc


def verify_roundtrip(prog: Program | str, seed: int, params: dict | None = None, batch: int = 1,
                     check_heap: bool = True, kill: bool = False) -> RoundTrip:
    """With ``kill`` the snapshotted system is dropped right after the write
    instead of also being run to completion."""
    if isinstance(prog, str):
        prog = PROGRAMS[prog]
    params = dict(prog.small if params is None else params)
    out = RoundTrip(prog.name, seed, False)

    base = _system(prog, seed, batch)
    handle = prog.setup(base, params)
    out.total_steps = base.run()
    ok, want, expected = prog.check(base, handle, params)
    out.expected = want
    if not ok:
        out.defects.append(f"uninterrupted run failed its self-check: {want!r} != {expected!r}")
        return out
    sig = heap_signature(base) if check_heap and prog.stable_heap else None

    rng = random.Random(f"{prog.name}:{seed}")
    out.trigger_step = rng.randint(1, max(1, out.total_steps - 1))
    s, handle, st, orc = snapshot_at(prog, params, seed, out.trigger_step, batch)
    out.captured = len(st.messages)
    out.snapshot_bytes = st.size
    out.rounds = st.rounds
    out.defects += orc.defects(st)
    sf = snapfile.read_snapshot(st.data)
    rep = snapfile.validate_snapshot(sf)
    out.defects += [f"validator: {d}" for d in rep.defects[:5]]

    if kill:
        s.shutdown()
        del s
    else:
        # the original keeps running to completion as well
        s.run()
        ok1, got1, _ = prog.check(s, handle, params)
        if not ok1:
            out.defects.append(f"snapshotted run diverged: {got1!r}")

    fresh = _system(prog, seed + 7919, batch)
    rs = load_snapshot(sf, fresh)
    if rs.turns_executed():
        out.defects.append("turns executed before resume")
    rs.resume()
    fresh.run()
    _, got, _ = prog.check(fresh, handle, params)
    out.restored = got
    if got != want:
        out.defects.append(f"restored result {got!r} != uninterrupted {want!r}")
    if sig is not None and heap_signature(fresh) != sig:
        out.defects.append("restored heap is not isomorphic to the uninterrupted heap")
    out.passed = not out.defects
    return out


def verify_all(seed: int, names=None, **kw) -> list[RoundTrip]:
    return [verify_roundtrip(PROGRAMS[n], seed, **kw) for n in (names or PROGRAMS)]
