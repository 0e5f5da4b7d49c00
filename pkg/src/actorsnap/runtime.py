"""Communicating event loops.

Each actor owns a heap, a FIFO mailbox and an event loop that processes one
message per turn. Actors are multiplexed over a scheduler: either a pool of
worker threads or a single-threaded deterministic loop used for testing.

Cross-actor values travel as far references; promises are owner-local and
are resolved directly under a per-promise lock, which is what makes the
lost-resolution race observable during a snapshot.
"""

from __future__ import annotations

import itertools
import logging
import os
import queue
import random
import threading
import time
from collections import deque
from typing import Any, Callable

from . import capture
from .messages import ERRORED, RESOLVED, UNRESOLVED, Message, Promise
from .errors import (
    AlreadyResolved,
    DoesNotUnderstand,
    ForeignAccess,
    SnapshotInProgress,
    TurnBudgetExceeded,
)
from .values import (
    MAIN_ACTOR,
    T_BOOL,
    T_FLOAT,
    T_INT,
    T_NULL,
    T_TEXT,
    Arr,
    FarRef,
    HeapObject,
    Kind,
    Obj,
    TypeRegistry,
    TypeTag,
    _current,
    set_current_actor,
)

log = logging.getLogger("actorsnap")

_SCALAR_TAGS = {type(None): T_NULL, bool: T_BOOL, int: T_INT, float: T_FLOAT, str: T_TEXT}
_PLAIN = frozenset(_SCALAR_TAGS)


class Actor:
    __slots__ = (
        "id", "system", "mailbox", "lock", "local_phase", "deferred", "roots",
        "next_msg_no", "scheduled", "forced", "pending", "ctx", "root",
        "capture_steps", "turns", "ops", "log",
    )

    def __init__(self, system: ActorSystem, aid: int, phase: int) -> None:
        self.id = aid
        self.system = system
        self.mailbox: deque[Message] = deque()
        self.lock = threading.Lock()
        self.local_phase = phase
        self.deferred: deque = deque()
        self.roots: list = []
        self.next_msg_no = 0
        self.scheduled = False
        self.forced = False
        # sender phase -> number of queued messages carrying it
        self.pending: dict[int, int] = {}
        self.ctx = TurnContext(system, self)
        self.root: Obj | None = None
        self.capture_steps = 0
        self.turns = 0
        self.ops = 0
        self.log: list | None = None

    def has_stale(self, phase: int) -> bool:
        with self.lock:
            return any(p < phase for p in self.pending)

    def __repr__(self) -> str:
        return f"<Actor {self.id} phase={self.local_phase} queued={len(self.mailbox)}>"


class TurnContext:
    """Capabilities handed to behaviors: ``fn(ctx, receiver, *args)``."""

    __slots__ = ("system", "actor")

    def __init__(self, system: ActorSystem, actor: Actor) -> None:
        self.system = system
        self.actor = actor

    @property
    def actor_id(self) -> int:
        return self.actor.id

    @property
    def phase(self) -> int:
        return self.actor.local_phase

    @property
    def me(self) -> FarRef:
        return FarRef(self.actor.id, self.actor.root)

    def _op(self) -> None:
        a = self.actor
        a.ops += 1
        budget = self.system.turn_budget
        if budget is not None and a.ops > budget:
            raise TurnBudgetExceeded(f"actor {a.id} exceeded {budget} operations in one turn")

    def send(self, target, selector: str, *args) -> Promise:
        self._op()
        return self.system._send(self.actor, self.actor.local_phase, target, selector, args, True)

    def tell(self, target, selector: str, *args) -> None:
        self._op()
        self.system._send(self.actor, self.actor.local_phase, target, selector, args, False)

    def spawn(self, type_: TypeTag | str, *fields) -> FarRef:
        self._op()
        return self.system.spawn(type_, *fields, spawner=self.actor)

    def new(self, type_: TypeTag | str, *fields) -> Obj:
        self._op()
        tag = self.system.types[type_] if not isinstance(type_, TypeTag) else type_
        if tag.kind is not Kind.OBJECT:
            raise TypeError(f"{tag.name} is not an object type")
        return Obj(self.actor.id, tag, fields)

    def array(self, items=()) -> Arr:
        self._op()
        return Arr(self.actor.id, items)

    def promise(self) -> Promise:
        return self.system.new_promise(self.actor.id)

    def resolve(self, p: Promise, value) -> None:
        self.system.resolve_promise(p, value, self.actor)

    def fail(self, p: Promise, error) -> None:
        self.system.resolve_promise(p, error, self.actor, errored=True)

    def register_root(self, v) -> None:
        self.actor.roots.append(v)

    def external(self, name: str, *args):
        """Call a host-provided side effect (never captured)."""
        return self.system.externals[name](*args)


def type_id_of(v) -> int:
    t = type(v)
    if t is Obj:
        return v.tag.id
    tid = _SCALAR_TAGS.get(t)
    if tid is not None:
        return tid
    if t is Arr:
        return v.tag.id if v.tag is not None else 6
    raise TypeError(f"{t.__name__} is not a message receiver")


class ActorSystem:
    """Actor runtime with asynchronous snapshot support.

    ``workers=0`` selects the deterministic single-threaded scheduler (driven
    by :meth:`run`); ``seed`` then picks a random runnable actor at every
    step, otherwise actors run in FIFO order. ``workers>=1`` starts a thread
    pool.
    """

    def __init__(
        self,
        workers: int = 0,
        *,
        seed: int | None = None,
        batch: int | None = None,
        snapshot_dir: str | None = None,
        turn_budget: int | None = None,
        log_dequeues: bool = False,
    ) -> None:
        self.types = TypeRegistry()
        self._methods: dict[tuple[int, str], Callable] = {}
        self.actors: dict[int, Actor] = {}
        self.phase = 0
        self._phase_lock = threading.RLock()
        self.snapshot: capture.SnapshotState | None = None
        self.snapshots: list[capture.SnapshotState] = []
        self._snapshot_seq = 0
        self._actor_ids = itertools.count(1)
        self._promise_ids = itertools.count(1)
        self.externals: dict[str, Callable] = {}
        self.snapshot_dir = snapshot_dir
        self.turn_budget = turn_budget
        self.log_dequeues = log_dequeues
        self.repair_lost_resolutions = True
        self._paused = False
        self.failures: list[BaseException] = []
        self.turn_hook: Callable | None = None
        self.turn_end_hook: Callable | None = None
        self.snapshot_hook: Callable | None = None
        self.main = Actor(self, MAIN_ACTOR, 0)
        self.actors[MAIN_ACTOR] = self.main
        if workers <= 0:
            self.scheduler = DeterministicScheduler(self, seed=seed, batch=batch or 1)
        else:
            self.scheduler = ThreadPoolScheduler(self, workers, batch=batch or 64)
        self.deterministic = workers <= 0

    # -- program definition -------------------------------------------------

    def define(self, name: str, fields: int | tuple | list = 0, methods: dict | None = None,
               kind: Kind = Kind.OBJECT) -> TypeTag:
        arity = fields if isinstance(fields, int) else len(fields)
        tag = self.types.get(name)
        if tag is None:
            tag = self.types.register(name, arity, kind)
        for sel, fn in (methods or {}).items():
            self._methods[(tag.id, sel)] = fn
        return tag

    def add_methods(self, type_name: str, methods: dict) -> None:
        tag = self.types[type_name]
        for sel, fn in methods.items():
            self._methods[(tag.id, sel)] = fn

    def method(self, type_name: str, selector: str | None = None):
        def deco(fn):
            self.add_methods(type_name, {selector or fn.__name__: fn})
            return fn
        return deco

    # -- actors ---------------------------------------------------------------

    def spawn(self, type_: TypeTag | str, *fields, spawner: Actor | None = None) -> FarRef:
        tag = type_ if isinstance(type_, TypeTag) else self.types[type_]
        with self._phase_lock:
            aid = next(self._actor_ids)
            phase = spawner.local_phase if spawner is not None else self.phase
            actor = Actor(self, aid, phase)
            if self.log_dequeues:
                actor.log = []
            root = Obj(aid, tag, [self.pass_across(f, aid, phase) for f in fields])
            actor.root = root
            actor.roots.append(root)
            self.actors[aid] = actor
        return FarRef(aid, root)

    def actor(self, aid: int) -> Actor:
        return self.actors[aid]

    def register_root(self, actor_id: int, v) -> None:
        self.actors[actor_id].roots.append(v)

    def new_promise(self, owner: int) -> Promise:
        return Promise(next(self._promise_ids), owner)

    # -- boundary crossing ---------------------------------------------------

    def pass_across(self, v, receiver: int, phase: int | None = None):
        """Translate ``v`` for delivery into ``receiver``'s heap."""
        t = type(v)
        if t is Obj or t is Arr:
            return v if v.owner == receiver else FarRef(v.owner, v)
        if t is FarRef:
            return v.target if v.owner == receiver else v
        if t is Promise:
            if v.owner == receiver:
                return v
            q = self.new_promise(receiver)
            self._chain(v, q, self.phase if phase is None else phase, receiver)
            return q
        if t in _SCALAR_TAGS:
            return v
        raise TypeError(f"{t.__name__} is not an actor value")

    def _chain(self, src: Promise, dep: Promise, phase: int, resolver_id: int) -> None:
        with src.lock:
            if src.state == UNRESOLVED:
                src.dependents.append((dep, phase))
                return
            state, value = src.state, src.value
        self._settle(dep, state, self.pass_across(value, dep.owner, phase), resolver_id, phase)

    # -- sending -------------------------------------------------------------

    def send(self, target, selector: str, *args) -> Promise:
        """Send from the host (the main actor); returns a main-owned promise."""
        with self._phase_lock:
            return self._send(self.main, self.phase, target, selector, args, True)

    def tell(self, target, selector: str, *args) -> None:
        with self._phase_lock:
            self._send(self.main, self.phase, target, selector, args, False)

    def _send(self, sender: Actor, phase: int, target, selector: str, args: tuple, want_result: bool):
        sid = sender.id
        result = Promise(next(self._promise_ids), sid) if want_result else None
        t = type(target)
        if t is FarRef:
            dest = sender if target.owner == sid else self.actors[target.owner]
            receiver = target.target
        elif t is Obj or t is Arr:
            if target.owner != sid:
                raise ForeignAccess(f"actor {sid} sent to a near reference owned by {target.owner}")
            dest = sender
            receiver = target
        elif t is Promise:
            if target.owner != sid:
                raise ForeignAccess(f"actor {sid} holds promise owned by {target.owner}")
            msg = Message(target, selector, args, phase, result, sid)
            with target.lock:
                if target.state == UNRESOLVED:
                    target.accumulated.append(msg)
                    return result
                state, value = target.state, target.value
            self._forward(msg, state, value, sid, phase, sender)
            return result
        else:
            dest = sender
            receiver = target
        did = dest.id
        if did != sid and args:
            args = tuple([a if type(a) in _PLAIN else self.pass_across(a, did, phase) for a in args])
        self._enqueue(dest, Message(receiver, selector, args, phase, result, sid))
        return result

    def _enqueue(self, dest: Actor, msg: Message) -> None:
        with dest.lock:
            msg.msg_no = dest.next_msg_no
            dest.next_msg_no += 1
            dest.mailbox.append(msg)
            p = msg.sender_phase
            pend = dest.pending
            pend[p] = pend.get(p, 0) + 1
            if dest.scheduled or self._paused:
                return
            dest.scheduled = True
        self.scheduler.submit(dest)

    def _forward(self, msg: Message, state: int, value, owner: int, stamp: int, resolver: Actor | None) -> None:
        """Deliver a message that was addressed to a promise now settled."""
        if state == ERRORED:
            if msg.result is not None:
                self._settle(msg.result, ERRORED, value, resolver.id if resolver else MAIN_ACTOR, stamp)
            return
        t = type(value)
        if t is FarRef:
            dest = self.actors[value.owner]
            receiver = value.target
        elif t is Obj or t is Arr:
            dest = self.actors[value.owner]
            receiver = value
        else:
            dest = self.actors[owner]
            receiver = value
        did = dest.id
        args = msg.args
        if did != owner:
            args = tuple([self.pass_across(a, did, stamp) for a in args])
        self._enqueue(dest, Message(receiver, msg.selector, args, stamp, msg.result, owner))

    # -- promise resolution --------------------------------------------------

    def resolve_promise(self, p: Promise, value, resolver: Actor | None = None, errored: bool = False) -> None:
        resolver = resolver or self.main
        rphase = resolver.local_phase if resolver is not self.main else self.phase
        if type(value) is Promise and not errored:
            with p.lock:
                if p.state != UNRESOLVED:
                    raise AlreadyResolved(repr(p))
            chained = self.pass_across(value, p.owner, rphase)
            self._chain(chained, p, rphase, resolver.id)
            return
        self._settle(p, ERRORED if errored else RESOLVED, self.pass_across(value, p.owner, rphase),
                     resolver.id, rphase)

    def _settle(self, p: Promise, state: int, value, resolver_id: int, rphase: int,
                covered_from: int = -1) -> None:
        # covered_from: phase of a parent resolution record that already replays this one
        with p.lock:
            if p.state != UNRESOLVED:
                raise AlreadyResolved(repr(p))
            p.state = state
            p.value = value
            p.resolved_phase = rphase
            msgs = p.accumulated
            p.accumulated = []
            p.forwarded = msgs
            deps = list(p.dependents)
            floor = rphase if rphase > covered_from else covered_from
            recorded = False
            st = self.snapshot
            if (st is not None and st.active and p.serialized_in == st.id
                    and rphase != st.phase and covered_from < 0 and self.repair_lost_resolutions):
                st.record_lost_resolution(p, value, self.actors[resolver_id], state)
                recorded = True
                # replayed from the resolution record on restore, so not captured again
                floor = st.phase
            ev, cbs = p._event, p._callbacks
            p._callbacks = None
        if ev is not None:
            ev.set()
        if cbs:
            for fn in cbs:
                fn(p)
        resolver = self.actors.get(resolver_id)
        for m in msgs:
            stamp = m.sender_phase if m.sender_phase > floor else floor
            self._forward(m, state, value, p.owner, stamp, resolver)
        g = st.phase if recorded else covered_from
        for dep, ph in deps:
            self._settle(dep, state, self.pass_across(value, dep.owner, rphase), resolver_id, rphase,
                         g if g >= 0 and ph < g else -1)

    # -- turns ---------------------------------------------------------------

    def _advance(self, actor: Actor, g: int, st) -> None:
        if st is not None and st.phase == g and st.active and actor.roots:
            st.serializer().serialize_roots(actor)
        actor.local_phase = g

    def _prologue(self, actor: Actor, msg: Message, g: int) -> None:
        """Phase adoption and capture work ahead of a turn body."""
        st = self.snapshot
        if st is not None and st.phase != g:
            st = None
        if actor.local_phase != g:
            self._advance(actor, g, st)
        if st is not None and st.active:
            if actor.deferred:
                st.serializer().process_deferred(actor)
            if msg.sender_phase != g:
                st.serializer().serialize_message(actor, msg)

    def _capture_step(self, actor: Actor) -> None:
        """Forced scheduling: adopt the phase and drain deferred serializations."""
        with actor.lock:
            actor.forced = False
        g = self.phase
        st = self.snapshot
        if st is not None and st.phase == g and st.active:
            prev = getattr(_current, "actor", None)
            _current.actor = actor.id
            try:
                if actor.local_phase != g:
                    self._advance(actor, g, st)
                if actor.deferred:
                    st.serializer().process_deferred(actor)
            finally:
                _current.actor = prev
        actor.capture_steps += 1

    def _run_actor(self, actor: Actor, budget: int) -> None:
        prev = getattr(_current, "actor", None)
        _current.actor = actor.id
        mailbox = actor.mailbox
        lock = actor.lock
        try:
            if actor.forced:
                self._capture_step(actor)
            pend = actor.pending
            methods = self._methods
            ctx = actor.ctx
            n = 0
            while n < budget:
                with lock:
                    if not mailbox:
                        break
                    msg = mailbox.popleft()
                n += 1
                g = self.phase
                if actor.local_phase != g or self.snapshot is not None:
                    self._prologue(actor, msg, g)
                p = msg.sender_phase
                with lock:
                    c = pend[p] - 1
                    if c:
                        pend[p] = c
                    else:
                        del pend[p]
                actor.turns += 1
                if actor.log is not None:
                    actor.log.append((msg.sender, msg.msg_no, msg.selector))
                if self.turn_hook is not None:
                    self.turn_hook(actor, msg, g)
                actor.ops = 0
                receiver = msg.receiver
                fn = methods.get((receiver.tag.id if type(receiver) is Obj else type_id_of(receiver),
                                  msg.selector))
                try:
                    if fn is None:
                        raise DoesNotUnderstand(
                            f"{type(receiver).__name__} does not understand {msg.selector!r}")
                    ret = fn(ctx, receiver, *msg.args)
                    ok = True
                except TurnBudgetExceeded:
                    raise
                except Exception as exc:  # behavior failure breaks the result promise
                    log.debug("turn failed on actor %d: %r", actor.id, exc)
                    ret = f"{type(exc).__name__}: {exc}"
                    ok = False
                if msg.result is not None:
                    self.resolve_promise(msg.result, ret, actor, errored=not ok)
                if self.turn_end_hook is not None:
                    self.turn_end_hook(actor)
        finally:
            _current.actor = prev
        with lock:
            if mailbox or actor.forced:
                again = True
            else:
                actor.scheduled = False
                again = False
        if again:
            self.scheduler.submit(actor)

    def force(self, actor: Actor) -> None:
        with actor.lock:
            actor.forced = True
            if actor.scheduled:
                return
            actor.scheduled = True
        self.scheduler.submit(actor)

    # -- snapshots -----------------------------------------------------------

    def trigger_snapshot(self, path: str | None = None) -> int:
        with self._phase_lock:
            if self.snapshot is not None:
                raise SnapshotInProgress(f"snapshot {self.snapshot.id} still active")
            self._snapshot_seq += 1
            if path is None and self.snapshot_dir is not None:
                path = os.path.join(self.snapshot_dir, f"snap-{self._snapshot_seq}.asnp")
            st = capture.SnapshotState(self, self._snapshot_seq, self.phase + 1, path)
            self.snapshot = st
            self.snapshots.append(st)
            self.phase = st.phase
        log.debug("snapshot %d triggered, phase %d", st.id, st.phase)
        self.scheduler.submit(capture.SENTINEL)
        self.scheduler.snapshot_started(st)
        return st.id

    def snapshot_active(self) -> bool:
        return self.snapshot is not None

    def snapshot_every(self, interval: float) -> threading.Event:
        """Trigger a snapshot every ``interval`` seconds from a timer thread,
        skipping ticks while one is still active. Threaded mode only; set the
        returned event to stop."""
        if self.deterministic:
            raise RuntimeError("timer snapshots need the threaded scheduler")
        if interval <= 0:
            raise ValueError("interval must be > 0")
        stop = threading.Event()

        def tick() -> None:
            while not stop.wait(interval):
                try:
                    self.trigger_snapshot()
                except SnapshotInProgress:
                    pass

        threading.Thread(target=tick, name="actorsnap-timer", daemon=True).start()
        return stop

    def await_snapshot(self, timeout: float | None = None) -> capture.SnapshotState:
        """Block (or, deterministically, run) until the latest snapshot is written."""
        st = self.snapshots[-1]
        if self.deterministic:
            self.scheduler.run(until=lambda: st.done.is_set())
            if not st.done.is_set():
                raise RuntimeError("deterministic scheduler stalled before snapshot completion")
        elif not st.done.wait(timeout):
            raise TimeoutError(f"snapshot {st.id} did not complete")
        if st.error is not None:
            raise st.error
        return st

    def _snapshot_finished(self, st) -> None:
        with self._phase_lock:
            if self.snapshot is st:
                self.snapshot = None
        if self.snapshot_hook is not None:
            self.snapshot_hook(st)

    # -- driving -------------------------------------------------------------

    def run(self, max_steps: int | None = None, until: Callable[[], bool] | None = None) -> int:
        """Deterministic mode: execute steps; threaded mode: wait until idle."""
        if self.deterministic:
            return self.scheduler.run(max_steps=max_steps, until=until)
        self.scheduler.wait_idle()
        return 0

    def wait_idle(self, timeout: float | None = None) -> bool:
        if self.deterministic:
            self.scheduler.run()
            return True
        return self.scheduler.wait_idle(timeout)

    def shutdown(self) -> None:
        self.scheduler.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


class DeterministicScheduler:
    """Single-threaded run loop; one actor step per iteration."""

    workers = 1

    def __init__(self, system: ActorSystem, seed: int | None = None, batch: int = 1) -> None:
        self.system = system
        self.rng = random.Random(seed) if seed is not None else None
        self._random = self.rng.random if self.rng is not None else None
        self.batch = batch
        self.ready: deque | list = deque() if self.rng is None else []
        self.steps = 0

    def submit(self, item) -> None:
        self.ready.append(item)

    def snapshot_started(self, st) -> None:
        pass

    def drained(self, st) -> bool:
        return True

    def _next(self):
        ready = self.ready
        if self.rng is None:
            return ready.popleft()
        i = int(self._random() * len(ready))
        item = ready[i]
        last = ready.pop()
        if i < len(ready):
            ready[i] = last
        return item

    def run(self, max_steps: int | None = None, until: Callable[[], bool] | None = None) -> int:
        system = self.system
        ready = self.ready
        run_actor = system._run_actor
        batch = self.batch
        done = 0
        prev = _current.__dict__.get("worker")
        _current.worker = 0
        try:
            while True:
                if until is not None and until():
                    break
                if max_steps is not None and done >= max_steps:
                    break
                if not ready:
                    st = system.snapshot
                    if st is None or not self._poll(st) and not ready:
                        break
                    continue
                item = self._next()
                done += 1
                self.steps += 1
                if item is capture.SENTINEL:
                    st = system.snapshot
                    if st is not None:
                        st.sentinel_passed = True
                else:
                    run_actor(item, batch)
                st = system.snapshot
                if st is not None and st.sentinel_passed:
                    self._poll(st)
        finally:
            _current.worker = prev
        return done

    def _poll(self, st) -> bool:
        if st.poll():
            st.finish()
            return True
        return bool(self.ready)

    def wait_idle(self, timeout=None) -> bool:
        self.run()
        return True

    def shutdown(self) -> None:
        pass


class ThreadPoolScheduler:
    """Shared run queue served by a fixed pool of worker threads."""

    def __init__(self, system: ActorSystem, workers: int, batch: int = 64) -> None:
        self.system = system
        self.workers = workers
        self.batch = batch
        self.queue: queue.SimpleQueue = queue.SimpleQueue()
        self._lock = threading.Lock()
        self._idle = threading.Condition(self._lock)
        self.outstanding = 0
        self.task_seq = [0] * workers
        self.current: list[Any] = [None] * workers
        self._stop = False
        self.threads = [
            threading.Thread(target=self._worker, args=(i,), name=f"actorsnap-worker-{i}", daemon=True)
            for i in range(workers)
        ]
        for t in self.threads:
            t.start()

    def submit(self, item) -> None:
        with self._lock:
            self.outstanding += 1
        self.queue.put(item)

    def snapshot_started(self, st) -> None:
        threading.Thread(target=st.run_to_completion, name=f"actorsnap-writer-{st.id}", daemon=True).start()

    def _worker(self, index: int) -> None:
        _current.worker = index
        system = self.system
        get = self.queue.get
        batch = self.batch
        while True:
            item = get()
            if item is None:
                break
            self.current[index] = item
            try:
                if item is capture.SENTINEL:
                    st = system.snapshot
                    if st is not None:
                        st.mark_sentinel(self, index)
                else:
                    system._run_actor(item, batch)
            except TurnBudgetExceeded as exc:
                system.failures.append(exc)
                self._stop = True
            except BaseException as exc:  # keep the pool alive; surface via failures
                log.exception("worker %d failed", index)
                system.failures.append(exc)
            finally:
                self.current[index] = None
                self.task_seq[index] += 1
                with self._lock:
                    self.outstanding -= 1
                    if self.outstanding == 0:
                        self._idle.notify_all()

    def busy_marks(self, exclude: int) -> list[tuple[int, int]]:
        return [(i, self.task_seq[i]) for i in range(self.workers)
                if i != exclude and self.current[i] is not None]

    def drained(self, st) -> bool:
        marks = st.drain_marks
        return marks is not None and all(self.task_seq[i] > seq for i, seq in marks)

    def wait_idle(self, timeout: float | None = None) -> bool:
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._lock:
            while self.outstanding:
                left = None if deadline is None else deadline - time.monotonic()
                if left is not None and left <= 0:
                    return False
                self._idle.wait(left)
        st = self.system.snapshot
        if st is not None:
            left = None if deadline is None else max(0.0, deadline - time.monotonic())
            if not st.done.wait(left):
                return False
            return self.wait_idle(None if deadline is None else max(0.0, deadline - time.monotonic()))
        return True

    def shutdown(self) -> None:
        for _ in self.threads:
            self.queue.put(None)
        for t in self.threads:
            t.join(timeout=5)
