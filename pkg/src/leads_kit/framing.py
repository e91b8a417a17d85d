"""Delimiter framing for byte streams.

A long stream carries no message boundaries of its own, so messages are
terminated by a single separator byte (';' unless customized). Bytes after
the last separator in a chunk do not yet form a message and are kept in the
remainder buffer until more data arrives.
"""

from __future__ import annotations

from .errors import FramingError

DEFAULT_SEPARATOR = b";"


class Framer:
    """Stateful splitter for one direction of one connection.

    Invariants: the remainder never contains the separator, and
    re-joining emitted messages (plus separators and the remainder)
    reproduces the consumed byte stream exactly, except that empty
    messages are dropped.
    """

    __slots__ = ("separator", "_remainder")

    def __init__(self, separator: bytes = DEFAULT_SEPARATOR) -> None:
        if len(separator) != 1:
            raise FramingError(f"separator must be a single byte, got {separator!r}")
        self.separator = bytes(separator)
        self._remainder = b""

    @property
    def remainder(self) -> bytes:
        return self._remainder

    def feed(self, chunk: bytes) -> list[bytes]:
        """Consume a chunk and return every completed message, in order.

        Empty messages (consecutive separators) are dropped.
        """
        if not chunk:
            return []
        parts = (self._remainder + chunk).split(self.separator)
        self._remainder = parts[-1]
        return [p for p in parts[:-1] if p]

    def encode(self, message: bytes) -> bytes:
        """Message bytes plus the terminating separator.

        The message must be non-empty and separator-free; callers with
        payloads that legitimately contain the separator byte should
        configure a different one.
        """
        if not message:
            raise FramingError("cannot encode an empty message")
        if self.separator in message:
            raise FramingError(
                f"message contains the separator byte {self.separator!r}; choose another separator"
            )
        return message + self.separator
