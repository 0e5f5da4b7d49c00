"""Messages and promises."""

from __future__ import annotations

import threading
from typing import Callable

from .values import MAIN_ACTOR

UNRESOLVED = 0
RESOLVED = 1
ERRORED = 2


class Message:
    __slots__ = ("receiver", "selector", "args", "sender_phase", "msg_no", "result", "sender")

    def __init__(self, receiver, selector: str, args: tuple, sender_phase: int, result=None, sender: int = MAIN_ACTOR):
        self.receiver = receiver
        self.selector = selector
        self.args = args
        self.sender_phase = sender_phase
        self.msg_no = 0
        self.result = result
        self.sender = sender

    def __repr__(self) -> str:
        return f"<Message {self.selector} #{self.msg_no} phase={self.sender_phase}>"


class Promise:
    """Owner-local placeholder for an asynchronous result."""

    __slots__ = (
        "id", "owner", "state", "value", "accumulated", "dependents", "lock",
        "resolved_phase", "forwarded", "serialized_in", "_event", "_callbacks",
    )

    def __init__(self, pid: int, owner: int) -> None:
        self.id = pid
        self.owner = owner
        self.state = UNRESOLVED
        self.value = None
        self.accumulated: list[Message] = []
        # (dependent promise, phase of the actor that chained it)
        self.dependents: list[tuple[Promise, int]] = []
        self.lock = threading.Lock()
        self.resolved_phase = -1
        # accumulated messages as they were when the promise was resolved
        self.forwarded: list[Message] = []
        self.serialized_in = -1
        self._event: threading.Event | None = None
        self._callbacks: list[Callable] | None = None

    @property
    def resolved(self) -> bool:
        return self.state != UNRESOLVED

    def add_callback(self, fn: Callable[[Promise], None]) -> None:
        """Host-level notification; callbacks are not part of any snapshot."""
        with self.lock:
            if self.state == UNRESOLVED:
                if self._callbacks is None:
                    self._callbacks = []
                self._callbacks.append(fn)
                return
        fn(self)

    def wait(self, timeout: float | None = None) -> bool:
        with self.lock:
            if self.state != UNRESOLVED:
                return True
            if self._event is None:
                self._event = threading.Event()
            ev = self._event
        return ev.wait(timeout)

    def __repr__(self) -> str:
        state = ("unresolved", "resolved", "errored")[self.state]
        return f"<Promise #{self.id} owner={self.owner} {state}>"
