"""Asynchronous snapshot capture.

A snapshot is taken without pausing the system. Triggering bumps the global
phase; every actor then serializes its registered roots at its first turn
in the new phase, and every message processed with a stale sender phase is
serialized just before it executes. Objects owned by another actor are
never read directly: a placeholder word is written and the owner is asked
(through its deferred queue) to serialize the object and backpatch the
reference.

Completion is detected by a sentinel task on the run queue, a drain of the
tasks that were in flight when it ran, and a fixpoint that force-schedules
actors with outstanding deferred work.
"""

from __future__ import annotations

import logging
import threading
import time

from . import kernels, snapfile
from .messages import Message as _Message
from .messages import Promise as _Promise
from .errors import BufferOverflow, SnapshotNotComplete, ValueOutOfRange
from .values import (
    INT64_MAX,
    INT64_MIN,
    T_ARRAY,
    T_BOOL,
    T_FARREF,
    T_FLOAT,
    T_INT,
    T_MESSAGE,
    T_NULL,
    T_PROMISE,
    T_TEXT,
    Arr,
    FarRef,
    Obj,
)

log = logging.getLogger("actorsnap")

OFFSET_MASK = kernels.OFFSET_MASK

class _Sentinel:
    def __repr__(self) -> str:
        return "<snapshot sentinel>"


SENTINEL = _Sentinel()

_tl = threading.local()


def needs_capture(msg_phase: int, global_phase: int, active: bool) -> bool:
    return active and msg_phase != global_phase


class SnapshotState:
    """Bookkeeping for the one active snapshot."""

    def __init__(self, system, sid: int, phase: int, path: str | None = None) -> None:
        self.system = system
        self.id = sid
        self.phase = phase
        self.path = path
        self.active = True
        self.lock = threading.Lock()
        # id(object) -> (object, ref word); holding the object pins its id
        self.registry: dict[int, tuple[object, int]] = {}
        self.texts: dict[str, int] = {}
        self.messages: list[tuple[int, int, int]] = []
        self.resolutions: list[tuple[int, int, int, int]] = []
        self.roots: list[tuple[int, int]] = []
        self.with_deferred: set[int] = set()
        self.serializers: list[Serializer] = []
        self.patches: list[tuple[int, int, int]] = []
        self.sentinel_passed = False
        self.drain_marks: list | None = None
        self.watch: list | None = None
        self.forcing: list | None = None
        self.rounds = 0
        self.root_rounds = 0
        self.complete = False
        self.done = threading.Event()
        self.error: BaseException | None = None
        self.data: bytes | None = None
        self.size = 0
        self.triggered_at = time.perf_counter()
        self.completed_at: float | None = None
        self.finished_at: float | None = None

    def __repr__(self) -> str:
        return f"<SnapshotState {self.id} phase={self.phase} active={self.active}>"

    # -- per-thread buffers -------------------------------------------------

    def serializer(self) -> Serializer:
        ser = getattr(_tl, "ser", None)
        if ser is None or ser.st is not self:
            with self.lock:
                ser = Serializer(self, len(self.serializers))
                self.serializers.append(ser)
            _tl.ser = ser
        return ser

    def text_ref(self, s: str, ser: Serializer) -> int:
        w = self.texts.get(s)
        if w is None:
            with self.lock:
                w = self.texts.get(s)
                if w is None:
                    w = ser.base | ser.buf.rec_text(T_TEXT, s)
                    self.texts[s] = w
        return w

    def add_patch(self, bid: int, at: int, word: int) -> None:
        with self.lock:
            self.patches.append((bid, at, word))

    # -- racy promise resolution --------------------------------------------

    def record_lost_resolution(self, p, value, resolver, state: int) -> None:
        """Called under ``p.lock`` by a stale-phase resolver."""
        if (type(value) is Obj or type(value) is Arr) and value.owner != resolver.id:
            value = FarRef(value.owner, value)
        ser = self.serializer()
        w = ser.serialize(value, resolver.id)
        pref = self.registry[id(p)][1]
        with self.lock:
            self.resolutions.append((pref, w, resolver.id, 0 if state == 1 else 1))

    # -- completion ---------------------------------------------------------

    def mark_sentinel(self, scheduler, index: int) -> None:
        self.drain_marks = scheduler.busy_marks(index)
        self.sentinel_passed = True

    def _force(self, actors: list) -> None:
        self.forcing = [(a, a.capture_steps) for a in actors]
        for a in actors:
            self.system.force(a)

    def poll(self) -> bool:
        """Advance completion detection; True once the snapshot is complete."""
        if self.complete:
            return True
        if not self.sentinel_passed:
            return False
        system = self.system
        g = self.phase
        if self.watch is None:
            if not system.scheduler.drained(self):
                return False
            self.watch = [a for a in list(system.actors.values())
                          if a.local_phase < g or a.has_stale(g)]
        if self.forcing:
            for a, seen in self.forcing:
                if a.capture_steps <= seen:
                    return False
            self.forcing = None
        watch = [a for a in self.watch if a.has_stale(g) or (a.local_phase < g and a.roots)]
        self.watch = watch
        for a in watch:
            if a.has_stale(g):
                return False
        with self.lock:
            pending = sorted(self.with_deferred)
        if pending:
            self.rounds += 1
            self._force([system.actors[i] for i in pending])
            return False
        stale = [a for a in watch if a.local_phase < g and a.roots]
        if stale:
            # roots of actors that never ran in the new phase
            self.root_rounds += 1
            self._force(stale)
            return False
        self.complete = True
        self.completed_at = time.perf_counter()
        return True

    def run_to_completion(self, interval: float = 0.0005) -> None:
        """Writer-thread loop for the threaded scheduler."""
        try:
            while not self.poll():
                time.sleep(interval)
        except BaseException as exc:  # surface through await_snapshot
            log.exception("snapshot %d completion failed", self.id)
            self.error = exc
            self.active = False
            self.system._snapshot_finished(self)
            self.done.set()
            return
        self.finish()

    def finalize(self, path: str | None = None) -> bytes:
        """Encode the completed snapshot and optionally write it to ``path``."""
        if not self.complete:
            raise SnapshotNotComplete(f"snapshot {self.id} has not completed")
        self.active = False
        bufs = {ser.bid: ser.buf for ser in self.serializers}
        with self.lock:
            patches, self.patches = self.patches, []
        for bid, at, word in patches:
            bufs[bid].set_u64(at, word)
        data = snapfile.encode_snapshot(
            self.id, self.phase, self.messages, self.resolutions,
            list(self.system.types), self.roots,
            [(ser.bid, ser.buf.getvalue()) for ser in self.serializers],
        )
        path = path or self.path
        if path is not None:
            snapfile.write_atomic(path, data)
            self.path = path
        self.size = len(data)
        self.data = data
        for ser in self.serializers:
            ser.buf.clear()
        return data

    def finish(self) -> None:
        try:
            self.finalize()
        except BaseException as exc:
            log.exception("snapshot %d write failed", self.id)
            self.error = exc
        finally:
            self.active = False
            self.registry.clear()
            self.finished_at = time.perf_counter()
            self.system._snapshot_finished(self)
            self.done.set()
        log.debug("snapshot %d written: %d bytes, %d messages, %d rounds",
                  self.id, self.size, len(self.messages), self.rounds)


class Serializer:
    """Graph walker writing into one thread-confined buffer."""

    __slots__ = ("st", "bid", "buf", "base", "registry", "g")

    def __init__(self, st: SnapshotState, bid: int) -> None:
        if bid > kernels.MAX_BUFFER_ID - 1:
            raise BufferOverflow("too many snapshot buffers")
        self.st = st
        self.bid = bid
        self.buf = kernels.ByteBuffer()
        self.base = bid << kernels.OFFSET_BITS
        self.registry = st.registry
        self.g = st.phase

    # top-level entry points

    def serialize(self, v, actor_id: int) -> int:
        t = type(v)
        if (t is Obj or t is Arr) and v.owner != actor_id:
            v = FarRef(v.owner, v)
        elif t is _Promise and v.owner != actor_id:
            raise TypeError("cannot serialize a foreign promise at top level")
        work: list = []
        w = self._record(v, actor_id, work)
        self._drain(work, actor_id)
        return w

    def serialize_message(self, actor, msg) -> int:
        w = self.serialize(msg, actor.id)
        st = self.st
        with st.lock:
            st.messages.append((actor.id, msg.msg_no, w))
        return w

    def serialize_roots(self, actor) -> None:
        st = self.st
        for v in list(actor.roots):
            w = self.serialize(v, actor.id)
            with st.lock:
                st.roots.append((actor.id, w))

    def process_deferred(self, actor) -> None:
        q = actor.deferred
        st = self.st
        while True:
            try:
                est, obj, bid, at = q.popleft()
            except IndexError:
                with st.lock:
                    if not q:
                        st.with_deferred.discard(actor.id)
                        return
                continue
            if est is not st:
                continue
            w = self.serialize(obj, actor.id)
            if bid == self.bid:
                self.buf.set_u64(at, w)
            else:
                st.add_patch(bid, at, w)

    # graph walk

    def _drain(self, work: list, actor_id: int) -> None:
        put = self._put
        while work:
            values, at = work.pop()
            for v in values:
                put(v, actor_id, work, at)
                at += 8

    def _put(self, v, actor_id: int, work: list, at: int) -> None:
        t = type(v)
        if t is Obj or t is Arr or t is _Promise:
            e = self.registry.get(id(v))
            if e is not None:
                self.buf.set_u64(at, e[1])
                return
            if v.owner != actor_id:
                self._defer(v, at)
                return
            self.buf.set_u64(at, self._alloc(v, work))
            return
        self.buf.set_u64(at, self._record(v, actor_id, work))

    def _defer(self, obj, at: int) -> None:
        st = self.st
        e = self.registry.get(id(obj))
        if e is not None:
            self.buf.set_u64(at, e[1])
            return
        owner = st.system.actors[obj.owner]
        with st.lock:
            owner.deferred.append((st, obj, self.bid, at))
            st.with_deferred.add(owner.id)

    def _record(self, v, actor_id: int, work: list) -> int:
        buf = self.buf
        t = type(v)
        if t is int:
            if not INT64_MIN <= v <= INT64_MAX:
                raise ValueOutOfRange(f"{v} does not fit in 64 bits")
            pos = buf.rec_int(T_INT, v)
        elif t is str:
            pos = buf.rec_text(T_TEXT, v)
        elif t is Obj or t is Arr or t is _Promise or t is _Message:
            e = self.registry.get(id(v))
            if e is not None:
                return e[1]
            return self._alloc(v, work)
        elif t is FarRef:
            pos = buf.rec_farref(T_FARREF, v.owner)
            self._defer(v.target, pos + 12)
        elif t is float:
            pos = buf.rec_float(T_FLOAT, v)
        elif t is bool:
            pos = buf.rec_bool(T_BOOL, v)
        elif v is None:
            pos = buf.rec_null(T_NULL)
        else:
            raise TypeError(f"cannot serialize {t.__name__}")
        if pos > OFFSET_MASK:
            raise BufferOverflow("snapshot buffer exceeds 48-bit offsets")
        return self.base | pos

    def _alloc(self, v, work: list) -> int:
        buf = self.buf
        t = type(v)
        if t is Obj:
            fields = v.fields
            pos = buf.rec_object(v.tag.id, len(fields))
            w = self.base | pos
            self.registry[id(v)] = (v, w)
            if fields:
                work.append((fields, pos + 4))
        elif t is Arr:
            items = tuple(v.fields)
            pos = buf.rec_array(v.tag.id if v.tag is not None else T_ARRAY, len(items))
            w = self.base | pos
            self.registry[id(v)] = (v, w)
            if items:
                work.append((items, pos + 8))
        elif t is _Message:
            pos = len(buf)
            w = self.base | pos
            self.registry[id(v)] = (v, w)
            buf.put_u32(T_MESSAGE)
            head = buf.reserve_words(2)
            args = v.args
            buf.put_u32(len(args))
            apos = buf.reserve_words(len(args))
            res = v.result
            if res is None:
                buf.put_u8(0)
            else:
                buf.put_u8(1)
                rpos = buf.reserve_words(1)
            buf.put_u64(v.sender_phase)
            buf.put_u64(v.msg_no)
            buf.set_u64(head + 8, self.st.text_ref(v.selector, self))
            if res is not None:
                work.append(((res,), rpos))
            if args:
                work.append((args, apos))
            work.append(((v.receiver,), head))
        else:
            w = self._alloc_promise(v, work)
        if (w & OFFSET_MASK) > OFFSET_MASK - 8:
            raise BufferOverflow("snapshot buffer exceeds 48-bit offsets")
        return w

    def _alloc_promise(self, p, work: list) -> int:
        buf = self.buf
        g = self.g
        pos = len(buf)
        w = self.base | pos
        with p.lock:
            if p.state == 0 or p.resolved_phase >= g:
                state = 0
                value = None
                src = p.accumulated if p.state == 0 else p.forwarded
                acc = [m for m in src if m.sender_phase < g]
                deps = [d for d, ph in p.dependents if ph < g]
                if p.state == 0:
                    p.serialized_in = self.st.id
            else:
                state = p.state
                value = p.value
                acc = deps = ()
            # registered before the lock is released so a racing resolver finds it
            self.registry[id(p)] = (p, w)
        buf.put_u32(T_PROMISE)
        buf.put_u64(p.owner)
        buf.put_u8(state)
        if state:
            vpos = buf.reserve_words(1)
            work.append(((value,), vpos))
        buf.put_u32(len(acc))
        apos = buf.reserve_words(len(acc))
        buf.put_u32(len(deps))
        dpos = buf.reserve_words(len(deps))
        if acc:
            work.append((acc, apos))
        if deps:
            work.append((deps, dpos))
        return w
