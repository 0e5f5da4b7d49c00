"""Dynamic value model for actor heaps.

Values are plain Python objects:

========  ===========================================
Null      ``None``
Bool      ``bool``
Int       ``int`` (checked against the signed 64-bit range when serialized)
Float     ``float``
Text      ``str``
ObjectRef :class:`Obj`
ArrayRef  :class:`Arr`
FarRef    :class:`FarRef`
PromiseRef :class:`actorsnap.runtime.Promise`
========  ===========================================

Heap objects carry their owner's actor id. Reads and writes are checked
against the actor whose turn is executing on the current thread; code
running outside any turn (host setup, the loader) is unrestricted.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass

from .errors import ArityMismatch, DuplicateTypeName, ForeignAccess, UnknownTypeName

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1
MAIN_ACTOR = 0


class Kind(enum.IntEnum):
    OBJECT = 0
    ARRAY = 1
    MESSAGE = 2
    PROMISE = 3
    BUILTIN = 4


@dataclass(frozen=True)
class TypeTag:
    id: int
    name: str
    arity: int
    kind: Kind


# builtin tags, registered first in this order by every TypeRegistry
BUILTINS: tuple[tuple[str, int, Kind], ...] = (
    ("null", 0, Kind.BUILTIN),
    ("bool", 0, Kind.BUILTIN),
    ("int", 0, Kind.BUILTIN),
    ("float", 0, Kind.BUILTIN),
    ("text", 0, Kind.BUILTIN),
    ("farref", 0, Kind.BUILTIN),
    ("Array", 0, Kind.ARRAY),
    ("Message", 0, Kind.MESSAGE),
    ("Promise", 0, Kind.PROMISE),
)
T_NULL, T_BOOL, T_INT, T_FLOAT, T_TEXT, T_FARREF, T_ARRAY, T_MESSAGE, T_PROMISE = range(len(BUILTINS))


class TypeRegistry:
    """Dense id <-> type table. Registration is serialized by a lock."""

    def __init__(self, builtins: bool = True) -> None:
        self._lock = threading.Lock()
        self._by_id: list[TypeTag] = []
        self._by_name: dict[str, TypeTag] = {}
        if builtins:
            for name, arity, kind in BUILTINS:
                self.register(name, arity, kind)

    def register(self, name: str, arity: int, kind: Kind = Kind.OBJECT) -> TypeTag:
        if arity < 0:
            raise ValueError("arity must be non-negative")
        with self._lock:
            if name in self._by_name:
                raise DuplicateTypeName(name)
            tag = TypeTag(len(self._by_id), name, arity, Kind(kind))
            self._by_id.append(tag)
            self._by_name[name] = tag
            return tag

    def __getitem__(self, key: int | str) -> TypeTag:
        try:
            if isinstance(key, str):
                return self._by_name[key]
            return self._by_id[key]
        except (KeyError, IndexError):
            raise UnknownTypeName(str(key)) from None

    def get(self, name: str) -> TypeTag | None:
        return self._by_name.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self):
        return iter(list(self._by_id))


# The actor whose turn (or capture step) is running on this thread.
_current = threading.local()
_current.actor = None


def current_actor_id() -> int | None:
    return getattr(_current, "actor", None)


def set_current_actor(actor_id: int | None) -> int | None:
    prev = getattr(_current, "actor", None)
    _current.actor = actor_id
    return prev


class acting_as:
    """Context manager running host code with ``actor_id``'s access rights."""

    def __init__(self, actor_id: int) -> None:
        self.actor_id = actor_id

    def __enter__(self):
        self._prev = set_current_actor(self.actor_id)
        return self

    def __exit__(self, *exc):
        set_current_actor(self._prev)


class HeapObject:
    __slots__ = ("tag", "owner", "fields")

    def _check(self) -> None:
        cur = getattr(_current, "actor", None)
        if cur is not None and cur != self.owner:
            raise ForeignAccess(f"actor {cur} touched an object owned by actor {self.owner}")

    def __getitem__(self, i: int):
        cur = getattr(_current, "actor", None)
        if cur is not None and cur != self.owner:
            self._check()
        return self.fields[i]

    def __setitem__(self, i: int, v) -> None:
        cur = getattr(_current, "actor", None)
        if cur is not None and cur != self.owner:
            self._check()
        self.fields[i] = v

    def __len__(self) -> int:
        return len(self.fields)


class Obj(HeapObject):
    """Fixed-arity object record owned by one actor."""

    __slots__ = ()

    def __init__(self, owner: int, tag: TypeTag, fields) -> None:
        fields = list(fields)
        if len(fields) != tag.arity:
            raise ArityMismatch(f"{tag.name} expects {tag.arity} fields, got {len(fields)}")
        self.tag = tag
        self.owner = owner
        self.fields = fields

    def __repr__(self) -> str:
        return f"<{self.tag.name}@{self.owner}:{id(self):x}>"


class Arr(HeapObject):
    """Mutable array record owned by one actor."""

    __slots__ = ()

    def __init__(self, owner: int, items=(), tag: TypeTag | None = None) -> None:
        self.tag = tag
        self.owner = owner
        self.fields = list(items)

    def append(self, v) -> None:
        self._check()
        self.fields.append(v)

    def pop(self, i: int = -1):
        self._check()
        return self.fields.pop(i)

    def __iter__(self):
        self._check()
        return iter(self.fields)

    def __repr__(self) -> str:
        return f"<Array[{len(self.fields)}]@{self.owner}:{id(self):x}>"


class FarRef:
    """Cross-actor reference; equal when it names the same object."""

    __slots__ = ("owner", "target")

    def __init__(self, owner: int, target) -> None:
        self.owner = owner
        self.target = target

    def __eq__(self, other) -> bool:
        return isinstance(other, FarRef) and other.owner == self.owner and other.target is self.target

    def __hash__(self) -> int:
        return hash((self.owner, id(self.target)))

    def __repr__(self) -> str:
        return f"FarRef({self.owner}, {self.target!r})"


def new_object(owner: int, tag: TypeTag, fields) -> Obj:
    if tag.kind is not Kind.OBJECT:
        raise TypeError(f"{tag.name} is not an object type")
    return Obj(owner, tag, fields)


def is_primitive(v) -> bool:
    return v is None or type(v) in (bool, int, float, str)
