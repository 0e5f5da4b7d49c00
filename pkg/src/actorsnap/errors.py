"""Exception hierarchy."""


class ActorSnapError(Exception):
    pass


class DuplicateTypeName(ActorSnapError):
    pass


class UnknownTypeName(ActorSnapError):
    pass


class ArityMismatch(ActorSnapError):
    pass


class ForeignAccess(ActorSnapError):
    """A heap object was touched by an actor that does not own it."""


class AlreadyResolved(ActorSnapError):
    pass


class DoesNotUnderstand(ActorSnapError):
    pass


class SnapshotInProgress(ActorSnapError):
    pass


class SnapshotNotComplete(ActorSnapError):
    """finalize was requested before completion was detected."""


class BufferOverflow(ActorSnapError):
    pass


class ValueOutOfRange(ActorSnapError):
    pass


class RangeExceeded(ActorSnapError, OverflowError):
    pass


class FormatError(ActorSnapError):
    pass


class BadMagic(FormatError):
    pass


class VersionMismatch(FormatError):
    pass


class Truncated(FormatError):
    pass


class CorruptCounts(FormatError):
    pass


class UnknownBuffer(FormatError):
    pass


class OutOfBounds(FormatError):
    pass


class RestoreError(ActorSnapError):
    pass


class TurnBudgetExceeded(ActorSnapError):
    pass
