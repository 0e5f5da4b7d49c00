"""Small programs shared by several test modules."""

from __future__ import annotations

from pathlib import Path

from actorsnap import ActorSystem
from actorsnap.values import FarRef, Obj, acting_as

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden_two_actor.asnp"


# -- fixed two-actor program for the golden file ---------------------------------

def golden_define(s: ActorSystem) -> None:
    # Ledger fields: entries, total, peer;  Entry fields: label, amount, next
    def post(ctx, this, label, amount):
        e = ctx.new("Entry", label, amount, this[0])
        this[0] = e
        this[1] += amount
        if amount > 1:
            ctx.tell(this[2], "post", label + "'", amount // 2)
        return this[1]

    def link(ctx, this, peer):
        this[2] = peer

    s.define("Ledger", 3, {"post": post, "link": link})
    s.define("Entry", 3)


def golden_snapshot(trigger_step: int = 5) -> bytes:
    """Run the fixed program under the FIFO deterministic scheduler and
    return the bytes of one snapshot taken after ``trigger_step`` steps."""
    s = ActorSystem()
    golden_define(s)
    a = s.spawn("Ledger", None, 0, None)
    b = s.spawn("Ledger", None, 0, None)
    s.tell(a, "link", b)
    s.tell(b, "link", a)
    for i, amount in enumerate((16, 9, 4)):
        s.send(a, "post", f"a{i}", amount)
        s.tell(b, "post", f"b{i}", amount + 1)
    s.run(max_steps=trigger_step)
    s.trigger_snapshot()
    st = s.await_snapshot()
    s.run()
    return st.data


# -- depth-d far-reference chain ------------------------------------------------

def chain_system(depth: int) -> tuple[ActorSystem, list[int]]:
    """``depth + 1`` actors; actor i holds a far reference to a non-root
    object of actor i + 1, so capturing actor 0's root defers through the
    whole chain one owner at a time."""
    s = ActorSystem()
    s.define("Head", 1, {"touch": lambda ctx, this: None})
    s.define("Link", 2)
    refs = [s.spawn("Head", None) for _ in range(depth + 1)]
    ids = [r.owner for r in refs]
    nxt = 0
    for aid in reversed(ids[1:]):
        with acting_as(aid):
            o = Obj(aid, s.types["Link"], [aid, nxt])
        nxt = FarRef(aid, o)
    with acting_as(ids[0]):
        s.actors[ids[0]].root[0] = nxt
    return s, ids


def chain_rounds(depth: int):
    s, ids = chain_system(depth)
    # queued ahead of the sentinel, so actor 0 captures its root first
    s.tell(FarRef(ids[0], s.actors[ids[0]].root), "touch")
    s.trigger_snapshot()
    st = s.await_snapshot()
    return st
