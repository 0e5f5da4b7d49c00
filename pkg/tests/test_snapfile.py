from __future__ import annotations

import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from actorsnap import kernels, snapfile
from actorsnap.errors import (
    BadMagic,
    CorruptCounts,
    OutOfBounds,
    RangeExceeded,
    Truncated,
    UnknownBuffer,
    VersionMismatch,
)
from actorsnap.snapfile import PLACEHOLDER, TypeEntry, encode_snapshot, read_snapshot, validate_snapshot
from actorsnap.values import Kind, TypeRegistry

from helpers import GOLDEN, golden_snapshot

TYPES = snapfile.type_entries(TypeRegistry()) + [TypeEntry(9, "Pair", 2, int(Kind.OBJECT))]
T_INT, T_TEXT, T_MESSAGE, T_PAIR = 2, 4, 7, 9


def ref(bid, off):
    return snapfile.encode_ref(bid, off)


def pair_heap(a, b) -> bytes:
    return struct.pack("<IQQ", T_PAIR, a, b)


def int_rec(v) -> bytes:
    return struct.pack("<Iq", T_INT, v)


def message_rec(recv, sel, phase, msg_no) -> bytes:
    return struct.pack("<IQQIBQQ", T_MESSAGE, recv, sel, 0, 0, phase, msg_no)


def text_rec(s) -> bytes:
    raw = s.encode()
    return struct.pack("<II", T_TEXT, len(raw)) + raw


def small_file(**kw) -> bytes:
    # heap 0: Pair(int 7 @20, int 7 @20) ; int 7
    heap = pair_heap(ref(0, 20), ref(0, 20)) + int_rec(7)
    args = dict(snapshot_id=3, phase=2, messages=[], resolutions=[], types=TYPES,
                roots=[(1, ref(0, 0))], buffers=[(0, heap)])
    args.update(kw)
    return encode_snapshot(**args)


# -- layout -----------------------------------------------------------------

def test_header_and_sections_match_struct_oracle():
    data = small_file()
    magic, version, sid, phase, length = struct.unpack_from("<4sIQQQ", data, 0)
    assert (magic, version, sid, phase, length) == (b"ASNP", 1, 3, 2, len(data))
    pos = 32
    assert struct.unpack_from("<QQ", data, pos) == (0, 0)   # no messages, no resolutions
    pos += 16
    (ntypes,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    names = []
    for _ in range(ntypes):
        tid, nlen = struct.unpack_from("<II", data, pos)
        pos += 8
        names.append(data[pos:pos + nlen].decode())
        pos += nlen + 5
    assert names[-1] == "Pair" and len(names) == 10
    assert struct.unpack_from("<QQQ", data, pos) == (1, 1, ref(0, 0))
    pos += 24
    (nheaps,) = struct.unpack_from("<Q", data, pos)
    bid, off = struct.unpack_from("<HQ", data, pos + 8)
    assert (nheaps, bid, off) == (1, 0, pos + 18)
    assert data[off:] == pair_heap(ref(0, 20), ref(0, 20)) + int_rec(7)


def test_read_and_resolve():
    sf = read_snapshot(small_file())
    assert (sf.snapshot_id, sf.phase) == (3, 2)
    tag, layout, payload, _ = sf.record(sf.roots[0][1])
    assert (tag, layout) == (T_PAIR, kernels.L_OBJECT)
    assert sf.record(payload[0])[2] == 7
    rep = validate_snapshot(sf)
    assert rep.ok, rep.defects
    assert (rep.records, rep.reachable) == (2, 2)


def test_resolve_ref_example():
    # bufferId 3 at file offset 1000, 16 bytes in
    assert snapfile.resolve_ref(ref(3, 16), {3: 1000}) == 1016
    with pytest.raises(UnknownBuffer):
        snapfile.resolve_ref(ref(4, 0), {3: 1000})
    with pytest.raises(OutOfBounds):
        snapfile.resolve_ref(ref(3, 64), {3: (1000, 1050)})


def test_encode_ref_range_error():
    with pytest.raises(RangeExceeded):
        snapfile.encode_ref(1 << 16, 0)
    with pytest.raises(OverflowError):
        snapfile.encode_ref(0, 1 << 48)


# -- malformed files ---------------------------------------------------------

def test_bad_magic():
    with pytest.raises(BadMagic):
        read_snapshot(b"XSNP" + small_file()[4:])
    with pytest.raises(BadMagic):
        read_snapshot(b"")


def test_version_mismatch():
    data = bytearray(small_file())
    struct.pack_into("<I", data, 4, 2)
    with pytest.raises(VersionMismatch):
        read_snapshot(bytes(data))


def test_truncated():
    data = small_file()
    with pytest.raises(Truncated):
        read_snapshot(data[:-1])
    with pytest.raises(Truncated):
        read_snapshot(data[:20])


def test_corrupt_counts():
    data = bytearray(small_file())
    struct.pack_into("<Q", data, 32, 1 << 40)
    with pytest.raises(CorruptCounts):
        read_snapshot(bytes(data))
    with pytest.raises(CorruptCounts):
        read_snapshot(small_file() + b"\0")


def test_dangling_refs_are_reported():
    sf = read_snapshot(small_file(roots=[(1, ref(5, 0)), (2, ref(0, 4000))]))
    rep = validate_snapshot(sf)
    assert any("dangling" in d for d in rep.defects)
    with pytest.raises(UnknownBuffer):
        sf.resolve(ref(5, 0))
    with pytest.raises(OutOfBounds):
        sf.resolve(ref(0, 4000))


# -- validator ----------------------------------------------------------------

def test_unpatched_placeholder_is_a_defect():
    heap = pair_heap(PLACEHOLDER, ref(0, 20)) + int_rec(7)
    rep = validate_snapshot(read_snapshot(small_file(buffers=[(0, heap)])))
    assert any("placeholder" in d for d in rep.defects)


def test_registry_order_is_checked():
    # text "go" @0 (10 bytes), message @10 (41 bytes), int receiver @51
    heap = text_rec("go") + message_rec(ref(0, 51), ref(0, 0), 0, 5) + int_rec(1)
    m = ref(0, 10)
    ok = small_file(messages=[(1, 4, m), (1, 5, m)], buffers=[(0, heap)], roots=[])
    assert validate_snapshot(read_snapshot(ok)).ok
    bad = small_file(messages=[(1, 5, m), (1, 4, m)], buffers=[(0, heap)], roots=[])
    assert any("ordering" in d for d in validate_snapshot(read_snapshot(bad)).defects)
    dup = small_file(messages=[(1, 5, m), (1, 5, m)], buffers=[(0, heap)], roots=[])
    assert any("duplicate" in d for d in validate_snapshot(read_snapshot(dup)).defects)


def test_unreachable_and_misaligned_records():
    heap = pair_heap(ref(0, 20), ref(0, 20)) + int_rec(7) + int_rec(8)
    rep = validate_snapshot(read_snapshot(small_file(buffers=[(0, heap)])))
    assert any("unreachable" in d for d in rep.defects)
    heap = pair_heap(ref(0, 21), ref(0, 20)) + int_rec(7)
    rep = validate_snapshot(read_snapshot(small_file(buffers=[(0, heap)])))
    assert any("misaligned" in d for d in rep.defects)


def test_type_confusion_in_registry_is_reported():
    rep = validate_snapshot(read_snapshot(small_file(messages=[(1, 1, ref(0, 0))])))
    assert any("registry entry 0 points at a object" in d for d in rep.defects)


def test_multiple_heaps_and_cross_buffer_refs():
    h0 = pair_heap(ref(1, 0), ref(0, 20)) + int_rec(1)
    h1 = int_rec(2)
    sf = read_snapshot(small_file(buffers=[(0, h0), (1, b""), (1, h1)]))
    assert [b for b, _ in sf.heap_map] == [0, 1]
    assert sf.record(sf.record(sf.roots[0][1])[2][0])[2] == 2
    assert validate_snapshot(sf).ok


def test_dump_lists_everything():
    text = snapfile.dump(read_snapshot(small_file()))
    assert "snapshot id=3 phase=2" in text
    assert "9: Pair arity=2 kind=object" in text
    assert "actor=1 ref=0:0" in text
    assert "Pair [0:20, 0:20]" in text


# -- golden file ---------------------------------------------------------------

def test_golden_file_is_reproduced():
    assert golden_snapshot() == GOLDEN.read_bytes()


def test_golden_file_validates():
    sf = read_snapshot(GOLDEN)
    rep = validate_snapshot(sf)
    assert rep.ok, rep.defects
    assert len(sf.messages) > 0
    assert sorted({a for a, _ in sf.roots}) == [1, 2]


def test_write_atomic_replaces(tmp_path):
    p = tmp_path / "x" / "s.asnp"
    snapfile.write_atomic(str(p), b"one")
    snapfile.write_atomic(str(p), b"two")
    assert p.read_bytes() == b"two"
    assert [f.name for f in p.parent.iterdir()] == ["s.asnp"]


@given(st.lists(st.integers(-(1 << 63), (1 << 63) - 1), min_size=1, max_size=40),
       st.integers(0, 2**32), st.integers(0, 2**32))
def test_int_heaps_roundtrip(values, sid, phase):
    heap = b"".join(int_rec(v) for v in values)
    roots = [(i, ref(0, 12 * i)) for i in range(len(values))]
    data = encode_snapshot(sid, phase, [], [], TYPES, roots, [(0, heap)])
    sf = read_snapshot(data)
    assert [sf.record(r)[2] for _, r in sf.roots] == values
    assert validate_snapshot(sf).ok
    assert encode_snapshot(sf.snapshot_id, sf.phase, sf.messages, sf.resolutions, sf.types, sf.roots,
                           [(0, heap)]) == data
