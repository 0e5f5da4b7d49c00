"""Codec kernels, run against both the compiled and the pure-Python build."""

from __future__ import annotations

import importlib
import random
import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from actorsnap import kernels

IMPLS = ["actorsnap._kernels_py"]
try:
    importlib.import_module("actorsnap._kernels")
    IMPLS.append("actorsnap._kernels")
except ImportError:  # pragma: no cover - extension not built
    pass

# tag -> layout for a small table: builtins 0..8 then an arity-2 object type
LAYOUTS = bytes([0, 1, 2, 3, 4, 5, 7, 8, 9, 6])
ARITIES = (0, 0, 0, 0, 0, 0, 0, 0, 0, 2)


@pytest.fixture(params=IMPLS)
def k(request):
    return importlib.import_module(request.param)


def ref_oracle(b: int, o: int) -> int:
    # 48-bit little-endian offset followed by a 16-bit little-endian buffer id
    return int.from_bytes(o.to_bytes(6, "little") + b.to_bytes(2, "little"), "little")


def test_compiled_build_is_selected():
    assert kernels.IMPLEMENTATION in ("cython", "python")
    if "actorsnap._kernels" in IMPLS:
        assert kernels.IMPLEMENTATION == "cython"


def test_encode_ref_examples(k):
    assert k.encode_ref(3, 16) == 0x0003_0000_0000_0010
    assert k.encode_ref(0, 0) == 0
    assert k.decode_ref(0x0003_0000_0000_0010) == (3, 16)


def test_encode_ref_range(k):
    with pytest.raises(OverflowError):
        k.encode_ref(1 << 16, 0)
    with pytest.raises(OverflowError):
        k.encode_ref(0, 1 << 48)
    with pytest.raises(OverflowError):
        k.encode_ref(-1, 0)


def test_ref_roundtrip_random_pairs(k):
    rng = random.Random(11)
    for _ in range(10_000):
        b, o = rng.randrange(1 << 16), rng.randrange(1 << 48)
        w = k.encode_ref(b, o)
        assert w == ref_oracle(b, o)
        assert k.decode_ref(w) == (b, o)


@given(st.integers(0, (1 << 16) - 1), st.integers(0, (1 << 48) - 1))
def test_ref_roundtrip_property(b, o):
    for name in IMPLS:
        m = importlib.import_module(name)
        assert m.decode_ref(m.encode_ref(b, o)) == (b, o)


def test_scalar_records_match_struct_layout(k):
    buf = k.ByteBuffer()
    assert buf.rec_null(0) == 0
    p_bool = buf.rec_bool(1, True)
    p_int = buf.rec_int(2, -5)
    p_float = buf.rec_float(3, 1.5)
    p_text = buf.rec_text(4, "hé")
    data = buf.getvalue()
    want = (struct.pack("<I", 0) + struct.pack("<IB", 1, 1) + struct.pack("<Iq", 2, -5)
            + struct.pack("<Id", 3, 1.5) + struct.pack("<II", 4, 3) + "hé".encode())
    assert data == want
    assert (p_bool, p_int, p_float, p_text) == (4, 9, 21, 33)


def test_container_records_reserve_placeholders(k):
    buf = k.ByteBuffer()
    po = buf.rec_object(9, 2)
    pa = buf.rec_array(6, 3)
    pf = buf.rec_farref(5, 7)
    data = buf.getvalue()
    ph = k.PLACEHOLDER
    assert struct.unpack_from("<IQQ", data, po) == (9, ph, ph)
    assert struct.unpack_from("<IIQQQ", data, pa) == (6, 3, ph, ph, ph)
    assert struct.unpack_from("<IQQ", data, pf) == (5, 7, ph)
    buf.set_u64(po + 4, 42)
    assert buf.get_u64(po + 4) == 42
    assert len(buf) == len(data)


def test_buffer_primitives(k):
    buf = k.ByteBuffer()
    buf.put_u8(1)
    buf.put_u32(2)
    buf.put_u64(3)
    buf.put_i64(-4)
    buf.put_f64(0.5)
    buf.put_bytes(b"xy")
    buf.put_words([7, 8])
    pos = buf.reserve_words(2)
    assert buf.getvalue() == (struct.pack("<BIQqd", 1, 2, 3, -4, 0.5) + b"xy" + struct.pack("<QQ", 7, 8)
                              + struct.pack("<QQ", k.PLACEHOLDER, k.PLACEHOLDER))
    assert pos == 1 + 4 + 8 + 8 + 8 + 2 + 16
    buf.clear()
    assert len(buf) == 0


def _message_bytes(recv, sel, args, result, phase, msg_no):
    out = struct.pack("<IQQI", 7, recv, sel, len(args)) + b"".join(struct.pack("<Q", a) for a in args)
    out += struct.pack("<B", result is not None)
    if result is not None:
        out += struct.pack("<Q", result)
    return out + struct.pack("<QQ", phase, msg_no)


def _promise_bytes(owner, state, value, acc, deps):
    out = struct.pack("<IQB", 8, owner, state)
    if state:
        out += struct.pack("<Q", value)
    out += struct.pack("<I", len(acc)) + b"".join(struct.pack("<Q", a) for a in acc)
    return out + struct.pack("<I", len(deps)) + b"".join(struct.pack("<Q", d) for d in deps)


def test_parse_message_and_promise(k):
    m = _message_bytes(1, 2, (3, 4), 5, 6, 7)
    p = _promise_bytes(9, 1, 10, (11,), (12, 13))
    data = m + p
    tag, layout, payload, end = k.parse_record(data, 0, LAYOUTS, ARITIES)
    assert (tag, layout, payload, end) == (7, k.L_MESSAGE, (1, 2, (3, 4), 5, 6, 7), len(m))
    assert k.record_refs(layout, payload) == (1, 2, 3, 4, 5)
    tag, layout, payload, end = k.parse_record(data, len(m), LAYOUTS, ARITIES)
    assert (layout, payload, end) == (k.L_PROMISE, (9, 1, 10, (11,), (12, 13)), len(data))
    assert k.record_refs(layout, payload) == (10, 11, 12, 13)
    unresolved = _promise_bytes(9, 0, None, (), ())
    assert k.parse_record(unresolved, 0, LAYOUTS, ARITIES)[2] == (9, 0, None, (), ())


def test_parse_rejects_garbage(k):
    with pytest.raises(ValueError):
        k.parse_record(b"\x01\x00", 0, LAYOUTS, ARITIES)
    with pytest.raises(ValueError):
        k.parse_record(struct.pack("<I", 99), 0, LAYOUTS, ARITIES)
    with pytest.raises(ValueError):
        k.parse_record(struct.pack("<II", 4, 100) + b"abc", 0, LAYOUTS, ARITIES)
    with pytest.raises(ValueError):
        k.parse_record(struct.pack("<IQ", 9, 1), 0, LAYOUTS, ARITIES)


scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(-(1 << 63), (1 << 63) - 1),
    st.floats(allow_nan=False),
    st.text(max_size=20),
)


@given(st.lists(scalars, max_size=30))
def test_records_are_self_delimiting(values):
    for name in IMPLS:
        m = importlib.import_module(name)
        buf = m.ByteBuffer()
        starts = []
        for v in values:
            if v is None:
                starts.append(buf.rec_null(0))
            elif isinstance(v, bool):
                starts.append(buf.rec_bool(1, v))
            elif isinstance(v, int):
                starts.append(buf.rec_int(2, v))
            elif isinstance(v, float):
                starts.append(buf.rec_float(3, v))
            else:
                starts.append(buf.rec_text(4, v))
        data = buf.getvalue()
        assert m.scan_records(data, 0, len(data), LAYOUTS, ARITIES) == starts
        decoded = [m.parse_record(data, p, LAYOUTS, ARITIES)[2] for p in starts]
        assert decoded == values


def test_implementations_agree_byte_for_byte():
    if len(IMPLS) < 2:
        pytest.skip("compiled kernels not built")
    a, b = (importlib.import_module(n) for n in IMPLS)
    rng = random.Random(5)
    bufs = [a.ByteBuffer(), b.ByteBuffer()]
    for _ in range(2000):
        op = rng.randrange(6)
        arg = rng.randrange(1 << 40)
        for buf in bufs:
            if op == 0:
                buf.rec_int(2, arg - (1 << 39))
            elif op == 1:
                buf.rec_text(4, str(arg))
            elif op == 2:
                buf.rec_object(9, 2)
            elif op == 3:
                buf.rec_array(6, arg % 5)
            elif op == 4:
                buf.rec_farref(5, arg)
            else:
                buf.rec_float(3, arg / 7)
    assert bufs[0].getvalue() == bufs[1].getvalue()
