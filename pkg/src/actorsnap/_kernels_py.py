"""Pure-Python codec kernels.

Mirror of ``_kernels.pyx``; selected by :mod:`actorsnap.kernels` when the
compiled extension is unavailable or ``ACTORSNAP_PURE=1`` is set.
"""

from __future__ import annotations

import struct

IMPLEMENTATION = "python"

OFFSET_BITS = 48
OFFSET_MASK = (1 << OFFSET_BITS) - 1
MAX_BUFFER_ID = 0xFFFF
PLACEHOLDER = 0xFFFF_FFFF_FFFF_FFFF

# record layout codes, shared with the Cython kernel
L_NULL = 0
L_BOOL = 1
L_INT = 2
L_FLOAT = 3
L_TEXT = 4
L_FARREF = 5
L_OBJECT = 6
L_ARRAY = 7
L_MESSAGE = 8
L_PROMISE = 9

_U8 = struct.Struct("<B")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_I64 = struct.Struct("<q")
_F64 = struct.Struct("<d")
_TAG_I64 = struct.Struct("<Iq")
_TAG_F64 = struct.Struct("<Id")
_TAG_U8 = struct.Struct("<IB")
_TAG_U32 = struct.Struct("<II")
_TAG_U64 = struct.Struct("<IQ")
_TAG_U64_U64 = struct.Struct("<IQQ")
_PLACEHOLDER_BYTES = _U64.pack(PLACEHOLDER)


def encode_ref(buffer_id: int, offset: int) -> int:
    if not 0 <= buffer_id <= MAX_BUFFER_ID:
        raise OverflowError(f"buffer id {buffer_id} out of 16-bit range")
    if not 0 <= offset <= OFFSET_MASK:
        raise OverflowError(f"offset {offset} out of 48-bit range")
    return (buffer_id << OFFSET_BITS) | offset


def decode_ref(word: int) -> tuple[int, int]:
    return word >> OFFSET_BITS, word & OFFSET_MASK


class ByteBuffer:
    """Growable append-only byte region with in-place 64-bit patching."""

    __slots__ = ("_data",)

    def __init__(self) -> None:
        self._data = bytearray()

    def __len__(self) -> int:
        return len(self._data)

    def clear(self) -> None:
        self._data = bytearray()

    def getvalue(self) -> bytes:
        return bytes(self._data)

    def put_u8(self, v: int) -> None:
        self._data += _U8.pack(v)

    def put_u32(self, v: int) -> None:
        self._data += _U32.pack(v)

    def put_u64(self, v: int) -> None:
        self._data += _U64.pack(v)

    def put_i64(self, v: int) -> None:
        self._data += _I64.pack(v)

    def put_f64(self, v: float) -> None:
        self._data += _F64.pack(v)

    def put_bytes(self, b: bytes) -> None:
        self._data += b

    def put_words(self, words) -> None:
        d = self._data
        for w in words:
            d += _U64.pack(w)

    def reserve_words(self, n: int) -> int:
        pos = len(self._data)
        self._data += _PLACEHOLDER_BYTES * n
        return pos

    def set_u64(self, pos: int, v: int) -> None:
        _U64.pack_into(self._data, pos, v)

    def get_u64(self, pos: int) -> int:
        return _U64.unpack_from(self._data, pos)[0]

    # whole-record emitters; each returns the record start offset

    def rec_null(self, tag: int) -> int:
        pos = len(self._data)
        self._data += _U32.pack(tag)
        return pos

    def rec_bool(self, tag: int, v: bool) -> int:
        pos = len(self._data)
        self._data += _TAG_U8.pack(tag, 1 if v else 0)
        return pos

    def rec_int(self, tag: int, v: int) -> int:
        pos = len(self._data)
        self._data += _TAG_I64.pack(tag, v)
        return pos

    def rec_float(self, tag: int, v: float) -> int:
        pos = len(self._data)
        self._data += _TAG_F64.pack(tag, v)
        return pos

    def rec_text(self, tag: int, s: str) -> int:
        raw = s.encode("utf-8")
        pos = len(self._data)
        self._data += _TAG_U32.pack(tag, len(raw))
        self._data += raw
        return pos

    def rec_farref(self, tag: int, actor_id: int) -> int:
        """FarRef record with an unpatched target word at ``pos + 12``."""
        pos = len(self._data)
        self._data += _TAG_U64_U64.pack(tag, actor_id, PLACEHOLDER)
        return pos

    def rec_object(self, tag: int, arity: int) -> int:
        """Object record; field words start at ``pos + 4``."""
        pos = len(self._data)
        self._data += _U32.pack(tag) + _PLACEHOLDER_BYTES * arity
        return pos

    def rec_array(self, tag: int, length: int) -> int:
        """Array record; element words start at ``pos + 8``."""
        pos = len(self._data)
        self._data += _TAG_U32.pack(tag, length) + _PLACEHOLDER_BYTES * length
        return pos


def _u32(data, pos: int) -> int:
    return _U32.unpack_from(data, pos)[0]


def _u64(data, pos: int) -> int:
    return _U64.unpack_from(data, pos)[0]


def _words(data, pos: int, n: int) -> tuple:
    if n == 0:
        return ()
    return struct.unpack_from(f"<{n}Q", data, pos)


def parse_record(data, pos: int, layouts: bytes, arities) -> tuple:
    """Decode the record starting at ``pos``.

    Returns ``(tag, layout, payload, end)``. Payload shape by layout:
    scalars decode to the Python value, FarRef to ``(actor, ref)``, objects
    and arrays to a tuple of ref words, messages to ``(receiver, selector,
    args, result_or_None, sender_phase, msg_no)`` and promises to ``(owner,
    state, value_or_None, accumulated, dependents)``.
    """
    n = len(data)
    if pos + 4 > n:
        raise ValueError(f"record header at {pos} runs past end")
    tag = _u32(data, pos)
    if tag >= len(layouts):
        raise ValueError(f"unknown type tag {tag} at {pos}")
    layout = layouts[tag]
    p = pos + 4
    try:
        if layout == L_OBJECT:
            k = arities[tag]
            payload = _words(data, p, k)
            p += 8 * k
        elif layout == L_INT:
            payload = _I64.unpack_from(data, p)[0]
            p += 8
        elif layout == L_TEXT:
            k = _u32(data, p)
            if p + 4 + k > n:
                raise ValueError("text runs past end")
            payload = bytes(data[p + 4:p + 4 + k]).decode("utf-8")
            p += 4 + k
        elif layout == L_FARREF:
            payload = (_u64(data, p), _u64(data, p + 8))
            p += 16
        elif layout == L_MESSAGE:
            receiver = _u64(data, p)
            selector = _u64(data, p + 8)
            argc = _u32(data, p + 16)
            p += 20
            args = _words(data, p, argc)
            p += 8 * argc
            has_result = data[p]
            p += 1
            result = None
            if has_result:
                result = _u64(data, p)
                p += 8
            phase = _u64(data, p)
            msg_no = _u64(data, p + 8)
            p += 16
            payload = (receiver, selector, args, result, phase, msg_no)
        elif layout == L_PROMISE:
            owner = _u64(data, p)
            state = data[p + 8]
            p += 9
            value = None
            if state:
                value = _u64(data, p)
                p += 8
            k = _u32(data, p)
            acc = _words(data, p + 4, k)
            p += 4 + 8 * k
            k = _u32(data, p)
            deps = _words(data, p + 4, k)
            p += 4 + 8 * k
            payload = (owner, state, value, acc, deps)
        elif layout == L_ARRAY:
            k = _u32(data, p)
            payload = _words(data, p + 4, k)
            p += 4 + 8 * k
        elif layout == L_FLOAT:
            payload = _F64.unpack_from(data, p)[0]
            p += 8
        elif layout == L_BOOL:
            payload = bool(data[p])
            p += 1
        elif layout == L_NULL:
            payload = None
        else:
            raise ValueError(f"bad layout {layout} for tag {tag}")
    except (struct.error, IndexError) as exc:
        raise ValueError(f"record at {pos} runs past end") from exc
    if p > n:
        raise ValueError(f"record at {pos} runs past end")
    return tag, layout, payload, p


def record_refs(layout: int, payload) -> tuple:
    """All reference words held by a decoded record."""
    if layout == L_OBJECT or layout == L_ARRAY:
        return payload
    if layout == L_FARREF:
        return (payload[1],)
    if layout == L_MESSAGE:
        refs = (payload[0], payload[1]) + payload[2]
        if payload[3] is not None:
            refs += (payload[3],)
        return refs
    if layout == L_PROMISE:
        refs = payload[3] + payload[4]
        if payload[2] is not None:
            refs = (payload[2],) + refs
        return refs
    return ()


def scan_records(data, start: int, end: int, layouts: bytes, arities) -> list:
    """Offsets (relative to ``data``) of consecutive records in ``[start, end)``."""
    starts = []
    pos = start
    view = memoryview(data)[:end]
    while pos < end:
        starts.append(pos)
        pos = parse_record(view, pos, layouts, arities)[3]
    return starts
