"""Select the codec kernel implementation at import time.

The compiled ``_kernels`` extension is preferred; setting the environment
variable ``ACTORSNAP_PURE=1`` (or a failed import) selects the pure-Python
fallback. Both expose the same names.
"""

from __future__ import annotations

import os

if os.environ.get("ACTORSNAP_PURE", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

IMPLEMENTATION: str = _impl.IMPLEMENTATION
OFFSET_BITS = _impl.OFFSET_BITS
OFFSET_MASK = _impl.OFFSET_MASK
MAX_BUFFER_ID = _impl.MAX_BUFFER_ID
PLACEHOLDER = _impl.PLACEHOLDER

L_NULL = _impl.L_NULL
L_BOOL = _impl.L_BOOL
L_INT = _impl.L_INT
L_FLOAT = _impl.L_FLOAT
L_TEXT = _impl.L_TEXT
L_FARREF = _impl.L_FARREF
L_OBJECT = _impl.L_OBJECT
L_ARRAY = _impl.L_ARRAY
L_MESSAGE = _impl.L_MESSAGE
L_PROMISE = _impl.L_PROMISE

encode_ref = _impl.encode_ref
decode_ref = _impl.decode_ref
ByteBuffer = _impl.ByteBuffer
parse_record = _impl.parse_record
record_refs = _impl.record_refs
scan_records = _impl.scan_records

__all__ = [
    "IMPLEMENTATION", "ByteBuffer", "encode_ref", "decode_ref",
    "parse_record", "record_refs", "scan_records", "PLACEHOLDER",
]
