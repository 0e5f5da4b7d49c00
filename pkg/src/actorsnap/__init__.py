"""Actor runtime with asynchronous, non-blocking heap snapshots."""

from __future__ import annotations

from .errors import ActorSnapError
from .messages import Message, Promise
from .restore import RestoredSystem, load_snapshot, restore
from .runtime import ActorSystem, TurnContext
from .snapfile import read_snapshot, validate_snapshot
from .values import Arr, FarRef, Kind, Obj, TypeTag, acting_as

__version__ = "0.1.0"

__all__ = [
    "ActorSnapError", "ActorSystem", "Arr", "FarRef", "Kind", "Message", "Obj", "Promise",
    "RestoredSystem", "TurnContext", "TypeTag", "acting_as", "load_snapshot", "read_snapshot",
    "restore", "validate_snapshot",
]
