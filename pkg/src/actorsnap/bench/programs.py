"""Message-passing benchmark programs.

Each program registers its types on a system, spawns its actors and kicks
off work from the host, and can read its result back from actor roots once
the system is idle. Handles are plain dicts of actor ids so the same reader
works on a restored system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from ..runtime import ActorSystem
from ..values import Arr


@dataclass
class Program:
    name: str
    define: Callable[[ActorSystem], None]
    setup: Callable[[ActorSystem, dict], dict]
    result: Callable[[ActorSystem, dict], Any]
    expected: Callable[[dict], Any]
    params: dict = field(default_factory=dict)
    small: dict = field(default_factory=dict)
    # final heap does not depend on the interleaving
    stable_heap: bool = True

    def check(self, system: ActorSystem, handle: dict, params: dict) -> tuple[bool, Any, Any]:
        got = self.result(system, handle)
        want = self.expected(params)
        return got == want, got, want


def root(system: ActorSystem, aid: int):
    return system.actors[aid].root


# -- counting ----------------------------------------------------------------
# A producer streams increments to a counter in chunks; each chunk ends with a
# sync message so the counter's mailbox stays bounded.

def _counting_define(s: ActorSystem) -> None:
    def inc(ctx, this):
        this[0] += 1

    def sync(ctx, this, producer):
        ctx.tell(producer, "next")

    def nxt(ctx, this):
        counter, left, chunk = this[0], this[1], this[2]
        k = chunk if chunk < left else left
        tell = ctx.tell
        for _ in range(k):
            tell(counter, "inc")
        left -= k
        this[1] = left
        if left:
            tell(counter, "sync", ctx.me)

    s.define("Counter", 1, {"inc": inc, "sync": sync})
    s.define("CountProducer", 3, {"next": nxt})


def _counting_setup(s: ActorSystem, p: dict) -> dict:
    c = s.spawn("Counter", 0)
    pr = s.spawn("CountProducer", c, p["n"], p["chunk"])
    s.tell(pr, "next")
    return {"counter": c.owner, "producer": pr.owner}


COUNTING = Program(
    "counting", _counting_define, _counting_setup,
    lambda s, h: root(s, h["counter"])[0],
    lambda p: p["n"],
    params={"n": 1_000_000, "chunk": 1000},
    small={"n": 3000, "chunk": 100},
)


# -- ping-pong ---------------------------------------------------------------
# Each round trip goes through a promise: the pinger sends to the promise of
# its ping request, and the message is forwarded once pong resolves it.

def _pingpong_define(s: ActorSystem) -> None:
    def ping(ctx, this):
        this[0] += 1
        return this[0]

    def go(ctx, this):
        left = this[1]
        if not left:
            return
        this[1] = left - 1
        p = ctx.send(this[0], "ping")
        ctx.tell(p, "bounce", ctx.me)

    def bounce(ctx, n, pinger):
        ctx.tell(pinger, "go")

    s.define("Pong", 1, {"ping": ping})
    s.define("Ping", 2, {"go": go})
    s.add_methods("int", {"bounce": bounce})


def _pingpong_setup(s: ActorSystem, p: dict) -> dict:
    pong = s.spawn("Pong", 0)
    ping = s.spawn("Ping", pong, p["n"])
    s.tell(ping, "go")
    return {"ping": ping.owner, "pong": pong.owner}


PINGPONG = Program(
    "pingpong", _pingpong_define, _pingpong_setup,
    lambda s, h: (root(s, h["pong"])[0], root(s, h["ping"])[1]),
    lambda p: (p["n"], 0),
    params={"n": 40_000},
    small={"n": 300},
)


# -- fork-join actor creation -------------------------------------------------

def _work(x: int) -> int:
    # small deterministic computation standing in for per-actor work
    acc = x
    for i in range(10):
        acc = (acc * 1103515245 + 12345 + i) & 0x7FFFFFFF
    return acc


def _fjc_define(s: ActorSystem) -> None:
    def start(ctx, this):
        me = ctx.me
        for i in range(this[0]):
            w = ctx.spawn("FJWorker", me, i)
            ctx.tell(w, "work")

    def work(ctx, this):
        ctx.tell(this[0], "done", _work(this[1]) & 1)

    def done(ctx, this, bit):
        this[1] += 1
        this[2] += bit

    s.define("FJMaster", 3, {"start": start, "done": done})
    s.define("FJWorker", 2, {"work": work})


def _fjc_setup(s: ActorSystem, p: dict) -> dict:
    m = s.spawn("FJMaster", p["n"], 0, 0)
    s.tell(m, "start")
    return {"master": m.owner}


FJCREATE = Program(
    "fjcreate", _fjc_define, _fjc_setup,
    lambda s, h: (root(s, h["master"])[1], root(s, h["master"])[2]),
    lambda p: (p["n"], sum(_work(i) & 1 for i in range(p["n"]))),
    params={"n": 20_000},
    small={"n": 60},
)


# -- fork-join throughput -----------------------------------------------------

def _fjt_define(s: ActorSystem) -> None:
    def start(ctx, this):
        n = this[1]
        for w in this[0]:
            for j in range(n):
                ctx.tell(w, "work", j)

    def work(ctx, this, j):
        this[0] += 1
        this[1] = (this[1] * 31 + _work(j)) % 1_000_003

    s.define("FJTMaster", 2, {"start": start})
    s.define("FJTWorker", 2, {"work": work})


def _fjt_setup(s: ActorSystem, p: dict) -> dict:
    workers = [s.spawn("FJTWorker", 0, 0) for _ in range(p["k"])]
    m = s.spawn("FJTMaster", None, p["n"])
    master = root(s, m.owner)
    master.fields[0] = Arr(m.owner, workers)
    s.tell(m, "start")
    return {"master": m.owner, "workers": [w.owner for w in workers]}


def _fjt_expected(p: dict):
    acc = 0
    for j in range(p["n"]):
        acc = (acc * 31 + _work(j)) % 1_000_003
    return [(p["n"], acc)] * p["k"]


FJTHROUGHPUT = Program(
    "fjthroughput", _fjt_define, _fjt_setup,
    lambda s, h: [(root(s, w)[0], root(s, w)[1]) for w in h["workers"]],
    _fjt_expected,
    params={"k": 8, "n": 10_000},
    small={"k": 3, "n": 200},
)


# -- chameneos ----------------------------------------------------------------

def _complement(a: int, b: int) -> int:
    return a if a == b else 3 - a - b


def _cham_define(s: ActorSystem) -> None:
    # Mall fields: left, waiting, waiting_color, total, finished
    def meet(ctx, this, cham, color):
        if this[0] == 0:
            ctx.tell(cham, "stop")
            return
        waiting = this[1]
        if waiting is None:
            this[1] = cham
            this[2] = color
            return
        this[0] -= 1
        ctx.tell(cham, "met", this[2])
        ctx.tell(waiting, "met", color)
        this[1] = None

    def report(ctx, this, meetings):
        this[3] += meetings
        this[4] += 1

    # Chameneo fields: mall, color, meetings
    def cstart(ctx, this):
        ctx.tell(this[0], "meet", ctx.me, this[1])

    def met(ctx, this, other):
        this[1] = _complement(this[1], other)
        this[2] += 1
        ctx.tell(this[0], "meet", ctx.me, this[1])

    def stop(ctx, this):
        ctx.tell(this[0], "report", this[2])

    s.define("Mall", 5, {"meet": meet, "report": report})
    s.define("Chameneo", 3, {"start": cstart, "met": met, "stop": stop})


def _cham_setup(s: ActorSystem, p: dict) -> dict:
    mall = s.spawn("Mall", p["meetings"], None, 0, 0, 0)
    chams = [s.spawn("Chameneo", mall, i % 3, 0) for i in range(p["chameneos"])]
    for c in chams:
        s.tell(c, "start")
    return {"mall": mall.owner, "chams": [c.owner for c in chams]}


CHAMENEOS = Program(
    "chameneos", _cham_define, _cham_setup,
    lambda s, h: (root(s, h["mall"])[3], root(s, h["mall"])[4]),
    lambda p: (2 * p["meetings"], p["chameneos"]),
    params={"meetings": 40_000, "chameneos": 10},
    small={"meetings": 300, "chameneos": 5},
    stable_heap=False,
)


# -- trapezoidal approximation -------------------------------------------------

def _f(x: float) -> float:
    return math.sqrt(1.0 + x * x) * math.sin(x) + 1.0 / (1.0 + x)


def _partial(lo: int, hi: int, a: float, h: float) -> float:
    s = 0.0
    for i in range(lo, hi):
        x0 = a + i * h
        s += (_f(x0) + _f(x0 + h)) * h / 2.0
    return s


def _slices(n: int, w: int) -> list[tuple[int, int]]:
    return [(i * n // w, (i + 1) * n // w) for i in range(w)]


def _trap_define(s: ActorSystem) -> None:
    # Master fields: workers, partials, received, result, a, b, n
    def start(ctx, this):
        w = this[0]
        a, b, n = this[4], this[5], this[6]
        h = (b - a) / n
        this[1] = ctx.array([None] * w)
        me = ctx.me
        for i, (lo, hi) in enumerate(_slices(n, w)):
            worker = ctx.spawn("TrapWorker", me, i)
            ctx.tell(worker, "work", lo, hi, a, h)

    def partial(ctx, this, i, v):
        parts = this[1]
        parts[i] = v
        this[2] += 1
        if this[2] == this[0]:
            total = 0.0
            for x in parts:
                total += x
            this[3] = total

    def work(ctx, this, lo, hi, a, h):
        ctx.tell(this[0], "partial", this[1], _partial(lo, hi, a, h))

    s.define("TrapMaster", 7, {"start": start, "partial": partial})
    s.define("TrapWorker", 2, {"work": work})


def _trap_setup(s: ActorSystem, p: dict) -> dict:
    m = s.spawn("TrapMaster", p["workers"], None, 0, None, p["a"], p["b"], p["n"])
    s.tell(m, "start")
    return {"master": m.owner}


def _trap_expected(p: dict) -> float:
    h = (p["b"] - p["a"]) / p["n"]
    total = 0.0
    for lo, hi in _slices(p["n"], p["workers"]):
        total += _partial(lo, hi, p["a"], h)
    return total


TRAPEZOID = Program(
    "trapezoid", _trap_define, _trap_setup,
    lambda s, h: root(s, h["master"])[3],
    _trap_expected,
    params={"workers": 16, "n": 400_000, "a": 0.0, "b": 10.0},
    small={"workers": 6, "n": 3000, "a": 0.0, "b": 10.0},
)


# -- big ----------------------------------------------------------------------

def _lcg(x: int) -> int:
    return (x * 1103515245 + 12345) & 0x7FFFFFFF


def _big_define(s: ActorSystem) -> None:
    # BigActor fields: neighbors, seed, remaining, sink, pongs
    def add(ctx, this, ref):
        this[0].append(ref)

    def send_one(ctx, this):
        seed = _lcg(this[1])
        this[1] = seed
        nb = this[0]
        ctx.tell(nb[seed % len(nb)], "ping", ctx.me)

    def start(ctx, this):
        send_one(ctx, this)

    def ping(ctx, this, sender):
        ctx.tell(sender, "pong")

    def pong(ctx, this):
        this[4] += 1
        this[2] -= 1
        if this[2]:
            send_one(ctx, this)
        else:
            ctx.tell(this[3], "done", this[4])

    def done(ctx, this, n):
        this[0] += 1
        this[1] += n

    s.define("BigActor", 5, {"add": add, "start": start, "ping": ping, "pong": pong})
    s.define("BigSink", 2, {"done": done})


def _big_setup(s: ActorSystem, p: dict) -> dict:
    sink = s.spawn("BigSink", 0, 0)
    actors = []
    for i in range(p["actors"]):
        a = s.spawn("BigActor", None, 7919 * (i + 1), p["pings"], sink, 0)
        root(s, a.owner).fields[0] = Arr(a.owner)
        actors.append(a)
    for i, a in enumerate(actors):
        for j, b in enumerate(actors):
            if i != j:
                s.tell(a, "add", b)
    for a in actors:
        s.tell(a, "start")
    return {"sink": sink.owner, "actors": [a.owner for a in actors]}


BIG = Program(
    "big", _big_define, _big_setup,
    lambda s, h: (root(s, h["sink"])[0], root(s, h["sink"])[1]),
    lambda p: (p["actors"], p["actors"] * p["pings"]),
    params={"actors": 32, "pings": 1500},
    small={"actors": 6, "pings": 40},
)


# -- sleeping barber ------------------------------------------------------------

def _barber_define(s: ActorSystem) -> None:
    # Room fields: capacity, queue, barber, busy, served, turned_away
    def arrive(ctx, this, cid):
        if not this[3]:
            this[3] = True
            ctx.tell(this[2], "cut", cid)
        elif len(this[1]) < this[0]:
            this[1].append(cid)
        else:
            this[5] += 1

    def finished(ctx, this):
        this[4] += 1
        q = this[1]
        if len(q):
            ctx.tell(this[2], "cut", q.pop(0))
        else:
            this[3] = False

    # Barber fields: room, cuts
    def cut(ctx, this, cid):
        this[1] += 1
        _work(cid)
        ctx.tell(this[0], "finished")

    # Generator fields: room, left, next_id
    def nxt(ctx, this):
        ctx.tell(this[0], "arrive", this[2])
        this[2] += 1
        this[1] -= 1
        if this[1]:
            ctx.tell(ctx.me, "next")

    s.define("BarberRoom", 6, {"arrive": arrive, "finished": finished})
    s.define("Barber", 2, {"cut": cut})
    s.define("CustomerGen", 3, {"next": nxt})


def _barber_setup(s: ActorSystem, p: dict) -> dict:
    room = s.spawn("BarberRoom", p["capacity"], None, None, False, 0, 0)
    barber = s.spawn("Barber", room, 0)
    r = root(s, room.owner)
    r.fields[1] = Arr(room.owner)
    r.fields[2] = barber
    gen = s.spawn("CustomerGen", room, p["customers"], 0)
    s.tell(gen, "next")
    return {"room": room.owner, "barber": barber.owner}


def _barber_result(s: ActorSystem, h: dict):
    r = root(s, h["room"])
    served, turned = r[4], r[5]
    return served + turned, served == root(s, h["barber"])[1]


BARBER = Program(
    "barber", _barber_define, _barber_setup, _barber_result,
    lambda p: (p["customers"], True),
    params={"customers": 40_000, "capacity": 5},
    small={"customers": 400, "capacity": 3},
    stable_heap=False,
)


PROGRAMS: dict[str, Program] = {
    p.name: p for p in (COUNTING, PINGPONG, FJCREATE, FJTHROUGHPUT, CHAMENEOS, TRAPEZOID, BIG, BARBER)
}


def get(name: str) -> Program:
    try:
        return PROGRAMS[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; choose from {', '.join(PROGRAMS)}") from None


def define_all(s: ActorSystem) -> None:
    for p in PROGRAMS.values():
        p.define(s)


def detect(type_names) -> Program | None:
    """The program whose types appear in a snapshot's type table."""
    names = set(type_names)
    probe = ActorSystem()
    builtin = {t.name for t in probe.types}
    best = None
    for prog in PROGRAMS.values():
        probe = ActorSystem()
        prog.define(probe)
        own = {t.name for t in probe.types} - builtin
        if own and own <= names and (best is None or len(own) > best[0]):
            best = (len(own), prog)
    return best[1] if best else None


def locate(prog: Program, system: ActorSystem) -> dict:
    """Rebuild a handle for ``prog`` from the actors of a (restored) system.

    Roles are matched by the type of each actor's root object, learned from
    a probe run of the program's setup; list-valued roles collect every
    actor of that type in id order.
    """
    probe = ActorSystem()
    prog.define(probe)
    sample = prog.setup(probe, prog.small)
    by_type: dict[str, list[int]] = {}
    for aid in sorted(system.actors):
        r = system.actors[aid].root
        if r is not None:
            by_type.setdefault(r.tag.name, []).append(aid)
    handle: dict = {}
    for role, v in sample.items():
        if isinstance(v, int):
            ids = by_type.get(probe.actors[v].root.tag.name)
            if not ids:
                raise LookupError(f"no actor for role {role!r}")
            handle[role] = ids[0]
        elif isinstance(v, list) and v and all(isinstance(x, int) for x in v):
            handle[role] = list(by_type.get(probe.actors[v[0]].root.tag.name, []))
        else:
            handle[role] = v
    return handle
