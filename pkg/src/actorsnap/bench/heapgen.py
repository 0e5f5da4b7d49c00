"""Seeded random heaps for snapshot round-trip testing.

``build_heap`` populates idle actors with a random object graph: a spanning
tree guarantees reachability from the actors' roots, and the remaining
reference slots are filled with shared edges (to an already referenced
node), back edges (to an ancestor, closing a cycle) or primitives. Edges
between actors become far references; some nodes are promises, unresolved
ones carrying accumulated messages and chained dependents.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..messages import ERRORED, RESOLVED, Message, Promise
from ..runtime import ActorSystem
from ..values import Arr, FarRef, Obj, acting_as


@dataclass
class HeapStats:
    seed: int
    actors: int
    objects: int
    promises: int
    unresolved: int
    ref_edges: int
    shared_edges: int
    back_edges: int
    far_edges: int

    @property
    def sharing(self) -> float:
        return self.shared_edges / self.ref_edges if self.ref_edges else 0.0

    @property
    def cycle_share(self) -> float:
        extra = self.ref_edges - (self.objects + self.promises - 1)
        return self.back_edges / extra if extra > 0 else 0.0


def define(s: ActorSystem) -> None:
    s.define("Holder", 1)
    for k in range(5):
        s.define(f"Node{k}", k)


def _prim(rng: random.Random):
    r = rng.random()
    if r < 0.4:
        return rng.randint(-(1 << 40), 1 << 40)
    if r < 0.6:
        return rng.choice(("a", "bc", "flight", "", "naïve ünïcode"))
    if r < 0.75:
        return rng.random() * 1e6
    if r < 0.9:
        return rng.random() < 0.5
    return None


def build_heap(s: ActorSystem, seed: int, max_objects: int = 10_000, sharing: float = 0.6,
               cycles: float = 0.15, promise_share: float = 0.03) -> HeapStats:
    """Populate ``s`` (with :func:`define` applied) and return edge statistics."""
    rng = random.Random(seed)
    n_actors = rng.randint(3, 5)
    holders = [s.spawn("Holder", None) for _ in range(n_actors)]
    aids = [h.owner for h in holders]
    n = max_objects if seed % 50 == 0 else rng.randint(1, max_objects)
    tags = [s.types[f"Node{k}"] for k in range(5)]

    nodes: list = []
    owners: list[int] = []
    parent: list[int] = []
    slots: list[list] = []      # per node: mutable list of slot values (None = free)
    free: list[int] = []        # nodes with at least one free slot
    root_lists: dict[int, list] = {a: [] for a in aids}
    st = HeapStats(seed, n_actors, 0, 0, 0, 0, 0, 0, 0)

    def tree_edge(src_owner: int, j: int):
        st.ref_edges += 1
        if owners[j] != src_owner:
            st.far_edges += 1
            return FarRef(owners[j], nodes[j])
        return nodes[j]

    def edge(src_owner: int, j: int):
        # every node already has its tree (or root list) referrer
        st.shared_edges += 1
        return tree_edge(src_owner, j)

    for i in range(n):
        owner = rng.choice(aids)
        r = rng.random()
        if r < promise_share:
            v = s.new_promise(owner)
            k = 0
            st.promises += 1
        elif r < 0.25:
            k = rng.randint(0, 6)
            v = Arr(owner, [None] * k)
            st.objects += 1
        else:
            k = rng.randint(0, 4)
            v = Obj(owner, tags[k], [None] * k)
            st.objects += 1
        nodes.append(v)
        owners.append(owner)
        slots.append([None] * k)
        # attach to the spanning tree; promises only under their owner
        p = -1
        ci = -1
        if free:
            for _ in range(4):
                ci = rng.randrange(len(free))
                if type(v) is not Promise or owners[free[ci]] == owner:
                    p = free[ci]
                    break
        parent.append(p)
        if p < 0:
            root_lists[owner].append(i)
        else:
            sl = slots[p]
            sl[sl.index(None)] = ("ref", i)
            if None not in sl:
                free[ci] = free[-1]
                free.pop()
        if k:
            free.append(i)

    def pick_target(i: int, owner: int) -> int | None:
        r = rng.random()
        back = False
        if r < sharing:
            j = rng.randrange(n)
        elif r < sharing + cycles:
            j = i
            for _ in range(rng.randint(0, 8)):
                if parent[j] < 0:
                    break
                j = parent[j]
            back = True
        else:
            return None
        if type(nodes[j]) is Promise and owners[j] != owner:
            return None
        st.back_edges += back
        return j

    def value_for(i: int, owner: int):
        j = pick_target(i, owner)
        return _prim(rng) if j is None else edge(owner, j)

    for i, v in enumerate(nodes):
        owner = owners[i]
        with acting_as(owner):
            if type(v) is Promise:
                if rng.random() < 0.7:
                    st.unresolved += 1
                    for _ in range(rng.randint(0, 2)):
                        args = tuple(value_for(i, owner) for _ in range(rng.randint(0, 3)))
                        v.accumulated.append(Message(v, rng.choice(("go", "then", "book")), args, 0, None, owner))
                    if rng.random() < 0.3:
                        other = rng.choice(aids)
                        if other != owner:
                            v.dependents.append((s.new_promise(other), 0))
                else:
                    v.state = RESOLVED if rng.random() < 0.8 else ERRORED
                    v.value = value_for(i, owner) if v.state == RESOLVED else "boom"
                    v.resolved_phase = 0
                continue
            sl = slots[i]
            for k, x in enumerate(sl):
                v[k] = tree_edge(owner, x[1]) if x is not None else value_for(i, owner)

    for aid in aids:
        root = s.actors[aid].root
        with acting_as(aid):
            root[0] = Arr(aid, [nodes[i] for i in root_lists[aid]])
    # the root lists count as edges so every node has at least one referrer
    st.ref_edges += sum(len(v) for v in root_lists.values())
    return st
