"""Rebuild an actor system from a snapshot file.

The host program must create a fresh :class:`~actorsnap.runtime.ActorSystem`
and issue the same ``define`` calls as the program that wrote the snapshot;
types are matched by name, arity and kind. Loading happens with the system
paused: mailboxes are refilled in ascending message-number order and
recorded resolutions are replayed, but no actor runs until :meth:`resume`.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

from . import kernels, snapfile
from .errors import AlreadyResolved, ArityMismatch, RestoreError, UnknownTypeName
from .messages import ERRORED, RESOLVED, UNRESOLVED, Message, Promise
from .runtime import Actor, ActorSystem
from .values import T_ARRAY, Arr, FarRef, Obj, TypeTag

L_NULL, L_BOOL, L_INT, L_FLOAT, L_TEXT = (
    kernels.L_NULL, kernels.L_BOOL, kernels.L_INT, kernels.L_FLOAT, kernels.L_TEXT)
L_FARREF, L_OBJECT, L_ARRAY, L_MESSAGE, L_PROMISE = (
    kernels.L_FARREF, kernels.L_OBJECT, kernels.L_ARRAY, kernels.L_MESSAGE, kernels.L_PROMISE)


def reconcile_types(sf: snapfile.SnapshotFile, system: ActorSystem) -> list[TypeTag]:
    """Map file type ids to this process's tags."""
    out = []
    for t in sf.types:
        local = system.types.get(t.name)
        if local is None:
            raise UnknownTypeName(f"type {t.name!r} is not defined in this program")
        if local.arity != t.arity:
            raise ArityMismatch(f"type {t.name!r} has arity {local.arity}, snapshot says {t.arity}")
        if int(local.kind) != t.kind:
            raise RestoreError(f"type {t.name!r} kind differs from snapshot")
        out.append(local)
    return out


class Loader:
    """Address-keyed deserialization with identity preservation.

    Container records become empty shells in the cache before their fields
    are decoded, so back-references (cycles, sharing) resolve to the same
    instance; pending field fills form the fixup work list.
    """

    def __init__(self, sf: snapfile.SnapshotFile, system: ActorSystem) -> None:
        self.sf = sf
        self.system = system
        self.tags = reconcile_types(sf, system)
        self.cache: dict[int, object] = {}
        self.fixups: list = []
        self.messages: list[Message] = []
        self.data = memoryview(sf.data)

    def deserialize_at(self, word: int, owner: int):
        v = self._get(word, owner)
        self._run()
        return v

    def _get(self, word: int, owner: int):
        addr = self.sf.resolve(word)
        cache = self.cache
        if addr in cache:
            return cache[addr]
        tag, layout, payload, _ = kernels.parse_record(self.data, addr, self.sf.layouts, self.sf.arities)
        fix = self.fixups
        if layout == L_OBJECT:
            v = Obj.__new__(Obj)
            v.tag = self.tags[tag]
            v.owner = owner
            v.fields = [None] * len(payload)
            cache[addr] = v
            fix.append((v.fields, payload, owner))
        elif layout == L_ARRAY:
            v = Arr(owner, (), None if tag == T_ARRAY else self.tags[tag])
            v.fields = [None] * len(payload)
            cache[addr] = v
            fix.append((v.fields, payload, owner))
        elif layout == L_FARREF:
            actor, target = payload
            self._actor(actor)
            v = FarRef(actor, None)
            cache[addr] = v
            fix.append((v, target, actor))
        elif layout == L_MESSAGE:
            recv, sel, args, result, _phase, msg_no = payload
            v = Message(None, "", [None] * len(args), 0, None)
            v.msg_no = msg_no
            cache[addr] = v
            self.messages.append(v)
            fix.append((v, (recv, sel, args, result), owner))
        elif layout == L_PROMISE:
            p_owner, state, value, acc, deps = payload
            self._actor(p_owner)
            v = self.system.new_promise(p_owner)
            v.resolved_phase = 0
            cache[addr] = v
            fix.append((v, (state, value, acc, deps), p_owner))
        elif layout in (L_INT, L_TEXT, L_FLOAT, L_BOOL, L_NULL):
            v = payload
            cache[addr] = v
        else:
            raise RestoreError(f"unexpected layout {layout} at {addr}")
        return v

    def _run(self) -> None:
        fix = self.fixups
        get = self._get
        while fix:
            target, refs, owner = fix.pop()
            t = type(target)
            if t is list:
                for i, w in enumerate(refs):
                    target[i] = get(w, owner)
            elif t is FarRef:
                target.target = get(refs, target.owner)
            elif t is Message:
                recv, sel, args, result = refs
                target.receiver = get(recv, owner)
                selector = get(sel, owner)
                if type(selector) is not str:
                    raise RestoreError("message selector is not text")
                target.selector = selector
                for i, w in enumerate(args):
                    target.args[i] = get(w, owner)
                if result is not None:
                    target.result = get(result, owner)
            elif t is Promise:
                state, value, acc, deps = refs
                if state == UNRESOLVED:
                    target.accumulated = [get(w, owner) for w in acc]
                    target.dependents = [(get(w, owner), 0) for w in deps]
                else:
                    target.state = RESOLVED if state == 1 else ERRORED
                    target.value = get(value, owner)
        for m in self.messages:
            if type(m.args) is list:
                m.args = tuple(m.args)

    def _actor(self, aid: int) -> Actor:
        system = self.system
        a = system.actors.get(aid)
        if a is None:
            a = Actor(system, aid, 0)
            if system.log_dequeues:
                a.log = []
            system.actors[aid] = a
        return a


@dataclass
class RestoredSystem:
    system: ActorSystem
    snapshot: snapfile.SnapshotFile
    roots: dict[int, list] = field(default_factory=dict)
    restored_messages: dict[int, list[int]] = field(default_factory=dict)
    records: int = 0
    resumed: bool = False

    def root(self, actor_id: int):
        return self.system.actors[actor_id].root

    def ref(self, actor_id: int) -> FarRef:
        return FarRef(actor_id, self.system.actors[actor_id].root)

    def turns_executed(self) -> int:
        return sum(a.turns for a in self.system.actors.values())

    def resume(self) -> ActorSystem:
        if self.resumed:
            raise RestoreError("system already resumed")
        self.resumed = True
        system = self.system
        system._paused = False
        for a in sorted(system.actors.values(), key=lambda a: a.id):
            with a.lock:
                if not a.mailbox or a.scheduled:
                    continue
                a.scheduled = True
            system.scheduler.submit(a)
        return system


def load_snapshot(src, system: ActorSystem, validate: bool = True) -> RestoredSystem:
    """Load ``src`` (a path, bytes or parsed file) into the fresh ``system``."""
    if isinstance(src, snapfile.SnapshotFile):
        sf = src
    else:
        sf = snapfile.read_snapshot(src if not isinstance(src, os.PathLike) else os.fspath(src))
    if validate:
        rep = snapfile.validate_snapshot(sf)
        if not rep.ok:
            raise RestoreError("snapshot has defects: " + "; ".join(rep.defects[:5]))
    if len(system.actors) > 1 or system.phase != 0:
        raise RestoreError("restore needs a fresh actor system")
    system._paused = True
    ld = Loader(sf, system)
    out = RestoredSystem(system, sf)

    for actor_id, ref in sf.roots:
        a = ld._actor(actor_id)
        v = ld.deserialize_at(ref, actor_id)
        a.roots.append(v)
        if a.root is None and type(v) is Obj:
            a.root = v
        out.roots.setdefault(actor_id, []).append(v)

    entries = sorted(sf.messages, key=lambda e: (e[0], e[1]))
    msgs = []
    for actor_id, msg_no, ref in entries:
        ld._actor(actor_id)
        msgs.append((actor_id, msg_no, ld.deserialize_at(ref, actor_id)))
    for actor_id, msg_no, m in msgs:
        a = system.actors[actor_id]
        m.sender_phase = 0
        m.msg_no = a.next_msg_no
        a.next_msg_no += 1
        a.mailbox.append(m)
        a.pending[0] = a.pending.get(0, 0) + 1
        out.restored_messages.setdefault(actor_id, []).append(msg_no)

    for m in ld.messages:
        m.sender_phase = 0
    apply_resolutions(ld, sf.resolutions)

    top = max(system.actors)
    system._actor_ids = itertools.count(top + 1)
    out.records = len(ld.cache)
    return out


def apply_resolutions(ld: Loader, entries) -> None:
    system = ld.system
    for pref, vref, actor_id, state in entries:
        p = ld.deserialize_at(pref, actor_id)
        if type(p) is not Promise:
            raise RestoreError("resolution entry does not name a promise")
        if p.state != UNRESOLVED:
            raise AlreadyResolved(f"promise {p!r} resolved twice during restore")
        ld._actor(actor_id)
        v = ld.deserialize_at(vref, actor_id)
        system._settle(p, ERRORED if state else RESOLVED, system.pass_across(v, p.owner, 0), actor_id, 0)


def restore(src, system: ActorSystem, resume: bool = True) -> RestoredSystem:
    rs = load_snapshot(src, system)
    if resume:
        rs.resume()
    return rs


__all__ = ["Loader", "RestoredSystem", "apply_resolutions", "load_snapshot", "reconcile_types", "restore"]
