"""Binary snapshot file format.

All integers are little-endian. Layout::

    Header       magic "ASNP" | u32 version | u64 snapshotId | u64 phase | u64 fileLength
    Messages     u64 count | {u64 actorId, u64 msgNo, u64 ref}
    Resolutions  u64 count | {u64 promiseRef, u64 valueRef, u64 actorId, u8 state}
    TypeTable    u64 count | {u32 id, u32 nameLen, name, u32 arity, u8 kind}
    Roots        u64 count | {u64 actorId, u64 ref}
    HeapMap      u64 count | {u16 bufferId, u64 fileOffset}
    Heaps        buffer images, in HeapMap order; each runs to the next or EOF

A ref packs a 16-bit buffer id above a 48-bit offset into that buffer.
Records start with a u32 type id; their payload is self-delimiting given the
type table (see :mod:`actorsnap.kernels`).
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field

from . import kernels
from .errors import (
    BadMagic,
    CorruptCounts,
    OutOfBounds,
    RangeExceeded,
    Truncated,
    UnknownBuffer,
    VersionMismatch,
)
from .values import Kind

MAGIC = b"ASNP"
VERSION = 1
PLACEHOLDER = kernels.PLACEHOLDER

_HEADER = struct.Struct("<4sIQQQ")
_COUNT = struct.Struct("<Q")
_MSG = struct.Struct("<QQQ")
_RES = struct.Struct("<QQQB")
_ROOT = struct.Struct("<QQ")
_HEAP = struct.Struct("<HQ")
_U32 = struct.Struct("<I")
_TYPE_TAIL = struct.Struct("<IB")

_BUILTIN_LAYOUTS = {
    "null": kernels.L_NULL,
    "bool": kernels.L_BOOL,
    "int": kernels.L_INT,
    "float": kernels.L_FLOAT,
    "text": kernels.L_TEXT,
    "farref": kernels.L_FARREF,
}
_KIND_LAYOUTS = {
    Kind.OBJECT: kernels.L_OBJECT,
    Kind.ARRAY: kernels.L_ARRAY,
    Kind.MESSAGE: kernels.L_MESSAGE,
    Kind.PROMISE: kernels.L_PROMISE,
}
LAYOUT_NAMES = {
    kernels.L_NULL: "null", kernels.L_BOOL: "bool", kernels.L_INT: "int",
    kernels.L_FLOAT: "float", kernels.L_TEXT: "text", kernels.L_FARREF: "farref",
    kernels.L_OBJECT: "object", kernels.L_ARRAY: "array", kernels.L_MESSAGE: "message",
    kernels.L_PROMISE: "promise",
}


def encode_ref(buffer_id: int, offset: int) -> int:
    try:
        return kernels.encode_ref(buffer_id, offset)
    except OverflowError as exc:
        raise RangeExceeded(str(exc)) from None


def decode_ref(word: int) -> tuple[int, int]:
    return kernels.decode_ref(word)


def resolve_ref(word: int, heap_map: dict[int, tuple[int, int]] | dict[int, int],
                file_length: int | None = None) -> int:
    """Absolute file offset of ``word``.

    ``heap_map`` maps buffer id to either a start offset or ``(start, end)``.
    """
    bid, off = kernels.decode_ref(word)
    entry = heap_map.get(bid)
    if entry is None:
        raise UnknownBuffer(f"buffer {bid} not in heap map")
    if isinstance(entry, tuple):
        start, end = entry
    else:
        start, end = entry, file_length
    pos = start + off
    if end is not None and pos >= end:
        raise OutOfBounds(f"ref {word:#018x} resolves to {pos}, past {end}")
    return pos


@dataclass(frozen=True)
class TypeEntry:
    id: int
    name: str
    arity: int
    kind: int


def layout_of(name: str, kind: int) -> int:
    if kind == Kind.BUILTIN:
        try:
            return _BUILTIN_LAYOUTS[name]
        except KeyError:
            raise CorruptCounts(f"unknown builtin type {name!r}") from None
    try:
        return _KIND_LAYOUTS[Kind(kind)]
    except (KeyError, ValueError):
        raise CorruptCounts(f"bad type kind {kind}") from None


def type_entries(types) -> list[TypeEntry]:
    return [TypeEntry(t.id, t.name, t.arity, int(t.kind)) for t in types]


def encode_snapshot(snapshot_id: int, phase: int, messages, resolutions, types, roots,
                    buffers) -> bytes:
    """Lay out a complete snapshot file in memory.

    ``buffers`` is a sequence of ``(buffer_id, bytes)``; empty ones are elided.
    """
    meta = bytearray()
    meta += _COUNT.pack(len(messages))
    for actor, msg_no, ref in messages:
        meta += _MSG.pack(actor, msg_no, ref)
    meta += _COUNT.pack(len(resolutions))
    for pref, vref, actor, state in resolutions:
        meta += _RES.pack(pref, vref, actor, state)
    meta += _COUNT.pack(len(types))
    for t in types:
        raw = t.name.encode("utf-8")
        meta += _U32.pack(t.id) + _U32.pack(len(raw)) + raw + _TYPE_TAIL.pack(t.arity, int(t.kind))
    meta += _COUNT.pack(len(roots))
    for actor, ref in roots:
        meta += _ROOT.pack(actor, ref)
    heaps = [(bid, data) for bid, data in buffers if len(data)]
    meta += _COUNT.pack(len(heaps))
    offset = _HEADER.size + len(meta) + _HEAP.size * len(heaps)
    for bid, data in heaps:
        meta += _HEAP.pack(bid, offset)
        offset += len(data)
    out = bytearray(_HEADER.pack(MAGIC, VERSION, snapshot_id, phase, offset))
    out += meta
    for _, data in heaps:
        out += data
    return bytes(out)


def write_atomic(path: str, data: bytes) -> None:
    """Write via a temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".snap-", suffix=".tmp", dir=d)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


@dataclass
class SnapshotFile:
    """Parsed, immutable view of a snapshot file."""

    data: bytes
    version: int
    snapshot_id: int
    phase: int
    messages: list[tuple[int, int, int]]
    resolutions: list[tuple[int, int, int, int]]
    types: list[TypeEntry]
    roots: list[tuple[int, int]]
    heap_map: list[tuple[int, int]]
    meta_end: int
    heaps: dict[int, tuple[int, int]] = field(default_factory=dict)
    layouts: bytes = b""
    arities: list[int] = field(default_factory=list)

    def resolve(self, word: int) -> int:
        return resolve_ref(word, self.heaps)

    def record(self, word: int) -> tuple:
        """``(tag, layout, payload, end)`` for the record ``word`` points at."""
        return self.record_at(self.resolve(word))

    def record_at(self, pos: int) -> tuple:
        try:
            return kernels.parse_record(self.data, pos, self.layouts, self.arities)
        except ValueError as exc:
            raise OutOfBounds(str(exc)) from None

    def heap_of(self, pos: int) -> tuple[int, int, int]:
        for bid, (start, end) in self.heaps.items():
            if start <= pos < end:
                return bid, start, end
        raise OutOfBounds(f"offset {pos} is not inside any heap")

    def type_name(self, tag: int) -> str:
        return self.types[tag].name if tag < len(self.types) else f"?{tag}"


class _Reader:
    def __init__(self, data: bytes, end: int) -> None:
        self.data = data
        self.pos = _HEADER.size
        self.end = end

    def take(self, s: struct.Struct) -> tuple:
        if self.pos + s.size > self.end:
            raise CorruptCounts(f"metadata overruns file at offset {self.pos}")
        v = s.unpack_from(self.data, self.pos)
        self.pos += s.size
        return v

    def count(self, entry_size: int) -> int:
        (n,) = self.take(_COUNT)
        if self.pos + n * entry_size > self.end:
            raise CorruptCounts(f"count {n} at offset {self.pos - 8} overruns the file")
        return n


def read_snapshot(src: str | bytes | bytearray | os.PathLike) -> SnapshotFile:
    if isinstance(src, (bytes, bytearray, memoryview)):
        data = bytes(src)
    else:
        with open(src, "rb") as f:
            data = f.read()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic("not a snapshot file")
    if len(data) < _HEADER.size:
        raise Truncated("header is incomplete")
    _, version, sid, phase, length = _HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise VersionMismatch(f"version {version}, expected {VERSION}")
    if len(data) < length:
        raise Truncated(f"file has {len(data)} bytes, header says {length}")
    if len(data) > length:
        raise CorruptCounts(f"file has {len(data)} bytes, header says {length}")
    r = _Reader(data, length)
    messages = [r.take(_MSG) for _ in range(r.count(_MSG.size))]
    resolutions = [r.take(_RES) for _ in range(r.count(_RES.size))]
    types = []
    for i in range(r.count(13)):
        tid, nlen = r.take(struct.Struct("<II"))
        if r.pos + nlen > length:
            raise CorruptCounts("type name overruns the file")
        try:
            name = data[r.pos:r.pos + nlen].decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptCounts("type name is not UTF-8") from None
        r.pos += nlen
        arity, kind = r.take(_TYPE_TAIL)
        if tid != i:
            raise CorruptCounts(f"type table entry {i} has id {tid}")
        types.append(TypeEntry(tid, name, arity, kind))
    roots = [r.take(_ROOT) for _ in range(r.count(_ROOT.size))]
    heap_map = [r.take(_HEAP) for _ in range(r.count(_HEAP.size))]
    meta_end = r.pos
    heaps: dict[int, tuple[int, int]] = {}
    expected = meta_end
    for i, (bid, off) in enumerate(heap_map):
        if off != expected or bid in heaps:
            raise CorruptCounts(f"heap map entry {i} ({bid}, {off}) is inconsistent")
        end = heap_map[i + 1][1] if i + 1 < len(heap_map) else length
        if end <= off:
            raise CorruptCounts(f"heap {bid} is empty or reversed")
        heaps[bid] = (off, end)
        expected = end
    if expected != length:
        raise CorruptCounts(f"heaps end at {expected}, file at {length}")
    layouts = bytes(layout_of(t.name, t.kind) for t in types)
    return SnapshotFile(
        data=data, version=version, snapshot_id=sid, phase=phase,
        messages=[tuple(m) for m in messages], resolutions=[tuple(x) for x in resolutions],
        types=types, roots=[tuple(x) for x in roots], heap_map=[tuple(h) for h in heap_map],
        meta_end=meta_end, heaps=heaps, layouts=layouts, arities=[t.arity for t in types],
    )


@dataclass
class Report:
    defects: list[str] = field(default_factory=list)
    records: int = 0
    reachable: int = 0

    @property
    def ok(self) -> bool:
        return not self.defects

    def add(self, msg: str) -> None:
        if len(self.defects) < 1000:
            self.defects.append(msg)


def validate_snapshot(sf: SnapshotFile) -> Report:
    """Structural check of a parsed file; returns a defect report."""
    rep = Report()
    data = sf.data
    starts: dict[int, tuple] = {}
    for bid, (start, end) in sf.heaps.items():
        view = memoryview(data)[:end]
        pos = start
        while pos < end:
            try:
                rec = kernels.parse_record(view, pos, sf.layouts, sf.arities)
            except ValueError as exc:
                rep.add(f"heap {bid}: unparseable record at {pos}: {exc}")
                break
            starts[pos] = rec
            pos = rec[3]
    rep.records = len(starts)

    def check(word: int, where: str) -> int | None:
        if word == PLACEHOLDER:
            rep.add(f"unpatched placeholder in {where}")
            return None
        try:
            pos = sf.resolve(word)
        except (UnknownBuffer, OutOfBounds):
            rep.add(f"dangling ref {word:#018x} in {where}")
            return None
        if pos not in starts:
            rep.add(f"misaligned ref {word:#018x} in {where}")
            return None
        return pos

    def expect(pos: int | None, layouts: tuple, where: str) -> None:
        if pos is not None and starts[pos][1] not in layouts:
            rep.add(f"{where} points at a {LAYOUT_NAMES[starts[pos][1]]} record")

    seen: set[int] = set()
    stack: list[int] = []

    def visit(pos: int | None) -> None:
        if pos is not None and pos not in seen:
            seen.add(pos)
            stack.append(pos)

    last: dict[int, int] = {}
    keys: set[tuple[int, int]] = set()
    for i, (actor, msg_no, ref) in enumerate(sf.messages):
        if (actor, msg_no) in keys:
            rep.add(f"duplicate registry entry for actor {actor} msgNo {msg_no}")
        keys.add((actor, msg_no))
        if actor in last and msg_no <= last[actor]:
            rep.add(f"registry ordering defect: actor {actor} msgNo {msg_no} after {last[actor]}")
        last[actor] = msg_no
        pos = check(ref, f"registry entry {i}")
        expect(pos, (kernels.L_MESSAGE,), f"registry entry {i}")
        visit(pos)
    promised: set[int] = set()
    for i, (pref, vref, actor, state) in enumerate(sf.resolutions):
        pos = check(pref, f"resolution {i}")
        expect(pos, (kernels.L_PROMISE,), f"resolution {i}")
        if pos is not None:
            if pos in promised:
                rep.add(f"duplicate resolution for promise at {pos}")
            promised.add(pos)
            if starts[pos][1] == kernels.L_PROMISE and starts[pos][2][1] != 0:
                rep.add(f"resolution {i} targets a promise not serialized as unresolved")
        if state not in (0, 1):
            rep.add(f"resolution {i} has bad state {state}")
        visit(pos)
        visit(check(vref, f"resolution {i} value"))
    for i, (actor, ref) in enumerate(sf.roots):
        visit(check(ref, f"root {i}"))

    while stack:
        pos = stack.pop()
        tag, layout, payload, _ = starts[pos]
        where = f"{sf.type_name(tag)} record at {pos}"
        if layout == kernels.L_MESSAGE:
            sel = check(payload[1], where)
            expect(sel, (kernels.L_TEXT,), f"selector of {where}")
            visit(sel)
            for w in (payload[0],) + payload[2]:
                visit(check(w, where))
            if payload[3] is not None:
                p = check(payload[3], where)
                expect(p, (kernels.L_PROMISE,), f"result of {where}")
                visit(p)
        elif layout == kernels.L_PROMISE:
            _, state, value, acc, deps = payload
            if state not in (0, 1, 2):
                rep.add(f"{where} has bad state {state}")
            if value is not None:
                visit(check(value, where))
            for w in acc:
                p = check(w, where)
                expect(p, (kernels.L_MESSAGE,), f"accumulated message of {where}")
                visit(p)
            for w in deps:
                p = check(w, where)
                expect(p, (kernels.L_PROMISE,), f"dependent of {where}")
                visit(p)
        elif layout == kernels.L_FARREF:
            p = check(payload[1], where)
            expect(p, (kernels.L_OBJECT, kernels.L_ARRAY, kernels.L_PROMISE), f"target of {where}")
            visit(p)
        else:
            for w in kernels.record_refs(layout, payload):
                visit(check(w, where))
    rep.reachable = len(seen)
    for pos in sorted(set(starts) - seen):
        rep.add(f"unreachable {sf.type_name(starts[pos][0])} record at {pos}")
    return rep


def dump(sf: SnapshotFile, records: bool = True) -> str:
    """Human-readable listing of a snapshot file."""
    lines = [
        f"snapshot id={sf.snapshot_id} phase={sf.phase} version={sf.version} bytes={len(sf.data)}",
        f"messages: {len(sf.messages)}",
    ]
    for actor, msg_no, ref in sf.messages:
        lines.append(f"  actor={actor} msgNo={msg_no} ref={_fmt_ref(ref)}")
    lines.append(f"resolutions: {len(sf.resolutions)}")
    for pref, vref, actor, state in sf.resolutions:
        lines.append(f"  promise={_fmt_ref(pref)} value={_fmt_ref(vref)} actor={actor} "
                     f"state={'error' if state else 'success'}")
    lines.append(f"types: {len(sf.types)}")
    for t in sf.types:
        lines.append(f"  {t.id}: {t.name} arity={t.arity} kind={Kind(t.kind).name.lower()}")
    lines.append(f"roots: {len(sf.roots)}")
    for actor, ref in sf.roots:
        lines.append(f"  actor={actor} ref={_fmt_ref(ref)}")
    lines.append(f"heaps: {len(sf.heap_map)}")
    for bid, off in sf.heap_map:
        start, end = sf.heaps[bid]
        lines.append(f"  buffer={bid} offset={off} bytes={end - start}")
    if records:
        for bid, (start, end) in sf.heaps.items():
            lines.append(f"heap {bid}:")
            view = memoryview(sf.data)[:end]
            pos = start
            while pos < end:
                try:
                    tag, layout, payload, nxt = kernels.parse_record(view, pos, sf.layouts, sf.arities)
                except ValueError as exc:
                    lines.append(f"  {pos - start:>8}: <unparseable: {exc}>")
                    break
                lines.append(f"  {pos - start:>8}: {sf.type_name(tag)} {_fmt_payload(layout, payload)}")
                pos = nxt
    return "\n".join(lines)


def _fmt_ref(word: int) -> str:
    if word == PLACEHOLDER:
        return "<unpatched>"
    b, o = kernels.decode_ref(word)
    return f"{b}:{o}"


def _fmt_payload(layout: int, payload) -> str:
    if layout in (kernels.L_OBJECT, kernels.L_ARRAY):
        return "[" + ", ".join(_fmt_ref(w) for w in payload) + "]"
    if layout == kernels.L_FARREF:
        return f"actor={payload[0]} target={_fmt_ref(payload[1])}"
    if layout == kernels.L_MESSAGE:
        recv, sel, args, res, phase, msg_no = payload
        r = _fmt_ref(res) if res is not None else "-"
        return (f"receiver={_fmt_ref(recv)} selector={_fmt_ref(sel)} "
                f"args=[{', '.join(_fmt_ref(w) for w in args)}] result={r} phase={phase} msgNo={msg_no}")
    if layout == kernels.L_PROMISE:
        owner, state, value, acc, deps = payload
        v = _fmt_ref(value) if value is not None else "-"
        return (f"owner={owner} state={('unresolved', 'resolved', 'errored')[min(state, 2)]} value={v} "
                f"accumulated={len(acc)} dependents={len(deps)}")
    return repr(payload)
