# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled codec kernels: ref packing, record emission and record parsing.

Interface-identical to ``_kernels_py``; all multi-byte fields are written
little-endian regardless of host byte order.
"""

from cpython.mem cimport PyMem_Realloc, PyMem_Free
from cpython.bytes cimport PyBytes_FromStringAndSize
from libc.string cimport memcpy, memset
from cpython.tuple cimport PyTuple_New, PyTuple_SET_ITEM
from cpython.ref cimport Py_INCREF
from libc.stdint cimport uint8_t, uint32_t, uint64_t, int64_t

IMPLEMENTATION = "cython"

OFFSET_BITS = 48
OFFSET_MASK = (1 << 48) - 1
MAX_BUFFER_ID = 0xFFFF
PLACEHOLDER = 0xFFFFFFFFFFFFFFFF

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

cdef enum:
    C_NULL = 0
    C_BOOL = 1
    C_INT = 2
    C_FLOAT = 3
    C_TEXT = 4
    C_FARREF = 5
    C_OBJECT = 6
    C_ARRAY = 7
    C_MESSAGE = 8
    C_PROMISE = 9

cdef uint64_t C_OFFSET_MASK = (<uint64_t>1 << 48) - 1


def encode_ref(buffer_id, offset):
    if not 0 <= buffer_id <= 0xFFFF:
        raise OverflowError(f"buffer id {buffer_id} out of 16-bit range")
    if not 0 <= offset <= OFFSET_MASK:
        raise OverflowError(f"offset {offset} out of 48-bit range")
    return (<uint64_t>buffer_id << 48) | <uint64_t>offset


def decode_ref(uint64_t word):
    return word >> 48, word & C_OFFSET_MASK


cdef inline void st32(uint8_t* p, uint32_t v) noexcept nogil:
    p[0] = v & 0xFF
    p[1] = (v >> 8) & 0xFF
    p[2] = (v >> 16) & 0xFF
    p[3] = (v >> 24) & 0xFF


cdef inline void st64(uint8_t* p, uint64_t v) noexcept nogil:
    cdef int i
    for i in range(8):
        p[i] = (v >> (8 * i)) & 0xFF


cdef inline uint32_t ld32(const uint8_t* p) noexcept nogil:
    return (<uint32_t>p[0]) | (<uint32_t>p[1] << 8) | (<uint32_t>p[2] << 16) | (<uint32_t>p[3] << 24)


cdef inline uint64_t ld64(const uint8_t* p) noexcept nogil:
    cdef uint64_t v = 0
    cdef int i
    for i in range(8):
        v |= (<uint64_t>p[i]) << (8 * i)
    return v


cdef class ByteBuffer:
    """Growable append-only byte region with in-place 64-bit patching."""

    cdef uint8_t* buf
    cdef Py_ssize_t size
    cdef Py_ssize_t cap

    def __cinit__(self):
        self.buf = NULL
        self.size = 0
        self.cap = 0

    def __dealloc__(self):
        if self.buf != NULL:
            PyMem_Free(self.buf)

    cdef uint8_t* grow(self, Py_ssize_t n) except NULL:
        cdef Py_ssize_t need = self.size + n
        cdef Py_ssize_t newcap
        cdef uint8_t* nb
        if need > self.cap:
            newcap = self.cap * 2 if self.cap else 4096
            while newcap < need:
                newcap *= 2
            nb = <uint8_t*>PyMem_Realloc(self.buf, newcap)
            if nb == NULL:
                raise MemoryError()
            self.buf = nb
            self.cap = newcap
        cdef uint8_t* p = self.buf + self.size
        self.size = need
        return p

    def __len__(self):
        return self.size

    def clear(self):
        self.size = 0

    def getvalue(self):
        if self.size == 0:
            return b""
        return PyBytes_FromStringAndSize(<char*>self.buf, self.size)

    def put_u8(self, uint8_t v):
        self.grow(1)[0] = v

    def put_u32(self, uint32_t v):
        st32(self.grow(4), v)

    def put_u64(self, uint64_t v):
        st64(self.grow(8), v)

    def put_i64(self, int64_t v):
        st64(self.grow(8), <uint64_t>v)

    def put_f64(self, double v):
        cdef uint64_t bits
        memcpy(&bits, &v, 8)
        st64(self.grow(8), bits)

    def put_bytes(self, const uint8_t[:] b):
        cdef Py_ssize_t n = b.shape[0]
        if n:
            memcpy(self.grow(n), &b[0], n)

    def put_words(self, words):
        cdef uint64_t w
        for w in words:
            st64(self.grow(8), w)

    def reserve_words(self, Py_ssize_t n):
        cdef Py_ssize_t pos = self.size
        memset(self.grow(8 * n), 0xFF, 8 * n)
        return pos

    def set_u64(self, Py_ssize_t pos, uint64_t v):
        if pos < 0 or pos + 8 > self.size:
            raise IndexError(f"patch position {pos} out of range")
        st64(self.buf + pos, v)

    def get_u64(self, Py_ssize_t pos):
        if pos < 0 or pos + 8 > self.size:
            raise IndexError(f"read position {pos} out of range")
        return ld64(self.buf + pos)

    def rec_null(self, uint32_t tag):
        cdef Py_ssize_t pos = self.size
        st32(self.grow(4), tag)
        return pos

    def rec_bool(self, uint32_t tag, v):
        cdef Py_ssize_t pos = self.size
        cdef uint8_t* p = self.grow(5)
        st32(p, tag)
        p[4] = 1 if v else 0
        return pos

    def rec_int(self, uint32_t tag, int64_t v):
        cdef Py_ssize_t pos = self.size
        cdef uint8_t* p = self.grow(12)
        st32(p, tag)
        st64(p + 4, <uint64_t>v)
        return pos

    def rec_float(self, uint32_t tag, double v):
        cdef Py_ssize_t pos = self.size
        cdef uint64_t bits
        memcpy(&bits, &v, 8)
        cdef uint8_t* p = self.grow(12)
        st32(p, tag)
        st64(p + 4, bits)
        return pos

    def rec_text(self, uint32_t tag, str s):
        cdef bytes raw = s.encode("utf-8")
        cdef Py_ssize_t n = len(raw)
        cdef Py_ssize_t pos = self.size
        cdef uint8_t* p = self.grow(8 + n)
        st32(p, tag)
        st32(p + 4, <uint32_t>n)
        if n:
            memcpy(p + 8, <char*>raw, n)
        return pos

    def rec_farref(self, uint32_t tag, uint64_t actor_id):
        cdef Py_ssize_t pos = self.size
        cdef uint8_t* p = self.grow(20)
        st32(p, tag)
        st64(p + 4, actor_id)
        memset(p + 12, 0xFF, 8)
        return pos

    def rec_object(self, uint32_t tag, Py_ssize_t arity):
        cdef Py_ssize_t pos = self.size
        cdef uint8_t* p = self.grow(4 + 8 * arity)
        st32(p, tag)
        memset(p + 4, 0xFF, 8 * arity)
        return pos

    def rec_array(self, uint32_t tag, Py_ssize_t length):
        cdef Py_ssize_t pos = self.size
        cdef uint8_t* p = self.grow(8 + 8 * length)
        st32(p, tag)
        st32(p + 4, <uint32_t>length)
        memset(p + 8, 0xFF, 8 * length)
        return pos


cdef tuple words(const uint8_t* p, Py_ssize_t n):
    cdef tuple t = PyTuple_New(n)
    cdef Py_ssize_t i
    cdef object v
    for i in range(n):
        v = ld64(p + 8 * i)
        Py_INCREF(v)
        PyTuple_SET_ITEM(t, i, v)
    return t


cdef inline void need(Py_ssize_t p, Py_ssize_t k, Py_ssize_t n, Py_ssize_t pos) except *:
    if p + k > n:
        raise ValueError(f"record at {pos} runs past end")


def parse_record(const uint8_t[:] data, Py_ssize_t pos, const uint8_t[:] layouts, arities):
    """Decode the record at ``pos``; see ``_kernels_py.parse_record``."""
    cdef Py_ssize_t n = data.shape[0]
    if pos < 0 or pos + 4 > n:
        raise ValueError(f"record header at {pos} runs past end")
    cdef const uint8_t* base = &data[0]
    cdef uint32_t tag = ld32(base + pos)
    if tag >= <uint32_t>layouts.shape[0]:
        raise ValueError(f"unknown type tag {tag} at {pos}")
    cdef int layout = layouts[tag]
    cdef Py_ssize_t p = pos + 4
    cdef Py_ssize_t k
    cdef uint64_t bits
    cdef double d
    cdef object payload
    cdef object result
    cdef object value
    cdef tuple args, acc, deps
    cdef uint64_t receiver, selector, phase, msg_no, owner
    cdef int state
    if layout == C_OBJECT:
        k = arities[tag]
        need(p, 8 * k, n, pos)
        payload = words(base + p, k)
        p += 8 * k
    elif layout == C_INT:
        need(p, 8, n, pos)
        payload = <int64_t>ld64(base + p)
        p += 8
    elif layout == C_TEXT:
        need(p, 4, n, pos)
        k = ld32(base + p)
        need(p + 4, k, n, pos)
        payload = PyBytes_FromStringAndSize(<const char*>(base + p + 4), k).decode("utf-8")
        p += 4 + k
    elif layout == C_FARREF:
        need(p, 16, n, pos)
        payload = (ld64(base + p), ld64(base + p + 8))
        p += 16
    elif layout == C_MESSAGE:
        need(p, 20, n, pos)
        receiver = ld64(base + p)
        selector = ld64(base + p + 8)
        k = ld32(base + p + 16)
        p += 20
        need(p, 8 * k + 1, n, pos)
        args = words(base + p, k)
        p += 8 * k
        result = None
        if base[p]:
            p += 1
            need(p, 8, n, pos)
            result = ld64(base + p)
            p += 8
        else:
            p += 1
        need(p, 16, n, pos)
        phase = ld64(base + p)
        msg_no = ld64(base + p + 8)
        p += 16
        payload = (receiver, selector, args, result, phase, msg_no)
    elif layout == C_PROMISE:
        need(p, 9, n, pos)
        owner = ld64(base + p)
        state = base[p + 8]
        p += 9
        value = None
        if state:
            need(p, 8, n, pos)
            value = ld64(base + p)
            p += 8
        need(p, 4, n, pos)
        k = ld32(base + p)
        need(p + 4, 8 * k, n, pos)
        acc = words(base + p + 4, k)
        p += 4 + 8 * k
        need(p, 4, n, pos)
        k = ld32(base + p)
        need(p + 4, 8 * k, n, pos)
        deps = words(base + p + 4, k)
        p += 4 + 8 * k
        payload = (owner, state, value, acc, deps)
    elif layout == C_ARRAY:
        need(p, 4, n, pos)
        k = ld32(base + p)
        need(p + 4, 8 * k, n, pos)
        payload = words(base + p + 4, k)
        p += 4 + 8 * k
    elif layout == C_FLOAT:
        need(p, 8, n, pos)
        bits = ld64(base + p)
        memcpy(&d, &bits, 8)
        payload = d
        p += 8
    elif layout == C_BOOL:
        need(p, 1, n, pos)
        payload = bool(base[p])
        p += 1
    elif layout == C_NULL:
        payload = None
    else:
        raise ValueError(f"bad layout {layout} for tag {tag}")
    return tag, layout, payload, p


def record_refs(int layout, payload):
    """All reference words held by a decoded record."""
    if layout == C_OBJECT or layout == C_ARRAY:
        return payload
    if layout == C_FARREF:
        return (payload[1],)
    if layout == C_MESSAGE:
        refs = (payload[0], payload[1]) + payload[2]
        if payload[3] is not None:
            refs += (payload[3],)
        return refs
    if layout == C_PROMISE:
        refs = payload[3] + payload[4]
        if payload[2] is not None:
            refs = (payload[2],) + refs
        return refs
    return ()


def scan_records(const uint8_t[:] data, Py_ssize_t start, Py_ssize_t end, const uint8_t[:] layouts, arities):
    """Offsets of consecutive records in ``[start, end)``."""
    cdef list starts = []
    cdef Py_ssize_t pos = start
    if end > data.shape[0]:
        raise ValueError("scan end beyond data")
    view = data[:end]
    while pos < end:
        starts.append(pos)
        pos = parse_record(view, pos, layouts, arities)[3]
    return starts
