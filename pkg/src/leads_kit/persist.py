"""Bounded sample cache with integral-preserving compression.

A :class:`CompressedSeries` behaves like a list of (value, width) samples
capped at ``capacity`` entries. With the default ``mean`` compressor,
reaching the cap triggers one merge round: adjacent entries collapse into
their width-weighted mean over the combined width, which keeps the left
Riemann integral (sum of value*width) bit-comparable to the uncompressed
sum while halving memory.

The weighting matters: once widths become unequal after the first round, a
plain average of values would change the integral.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Iterator, Sequence

from . import _kernels
from .errors import CapacityError, DomainError

COMPRESSORS = ("mean", "none")


class CompressedSeries:
    """Ordered (value, width) entries bounded by ``capacity``.

    ``compressor="mean"`` merges on overflow; ``compressor="none"`` refuses
    appends once full (rejecting is the only behavior that keeps both the
    capacity bound and width conservation without losing data).
    """

    __slots__ = ("capacity", "compressor", "_values", "_widths")

    def __init__(self, capacity: int, compressor: str = "mean") -> None:
        if capacity < 2:
            raise DomainError(f"capacity must be >= 2, got {capacity}")
        if compressor not in COMPRESSORS:
            raise DomainError(f"unknown compressor {compressor!r}")
        self.capacity = int(capacity)
        self.compressor = compressor
        self._values: list[float] = []
        self._widths: list[float] = []

    def __len__(self) -> int:
        return len(self._values)

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(zip(self._values, self._widths))

    @property
    def values(self) -> list[float]:
        return list(self._values)

    @property
    def widths(self) -> list[float]:
        return list(self._widths)

    def _check_sample(self, value: float, width: float) -> None:
        if not math.isfinite(value):
            raise DomainError(f"value must be finite, got {value!r}")
        if not math.isfinite(width) or width <= 0.0:
            raise DomainError(f"width must be positive and finite, got {width!r}")

    def append(self, value: float, width: float) -> None:
        """Add one sample, compressing first if the series is full."""
        self._check_sample(value, width)
        if len(self._values) >= self.capacity:
            if self.compressor == "none":
                raise CapacityError(
                    f"series is full ({self.capacity} entries) and compression is disabled"
                )
            self._values, self._widths = _kernels.compress_round(self._values, self._widths)
        self._values.append(float(value))
        self._widths.append(float(width))

    def extend(self, values: Sequence[float], widths: Sequence[float]) -> None:
        """Bulk :meth:`append`; the hot path runs in the kernel backend."""
        if len(values) != len(widths):
            raise DomainError("values and widths must have equal length")
        for value, width in zip(values, widths):
            self._check_sample(value, width)
        if self.compressor == "none":
            if len(self._values) + len(values) > self.capacity:
                raise CapacityError(
                    f"extend would exceed capacity {self.capacity} with compression disabled"
                )
            self._values.extend(float(v) for v in values)
            self._widths.extend(float(w) for w in widths)
            return
        self._values, self._widths = _kernels.compress_extend(
            self._values, self._widths, values, widths, self.capacity
        )

    def integral(self) -> float:
        """Sum of value*width: the left Riemann integral of the raw stream."""
        return sum(v * w for v, w in zip(self._values, self._widths))

    def total_width(self) -> float:
        return sum(self._widths)

    def to_json(self) -> str:
        """JSON array of [value, width] pairs."""
        return json.dumps([[v, w] for v, w in zip(self._values, self._widths)])

    @classmethod
    def from_json(
        cls, text: str, capacity: int, compressor: str = "mean"
    ) -> "CompressedSeries":
        entries = json.loads(text)
        series = cls(capacity, compressor)
        series.extend([e[0] for e in entries], [e[1] for e in entries])
        return series


def raw_left_riemann(values: Iterable[float], widths: Iterable[float]) -> float:
    """Uncompressed integral of a raw sample stream (oracle for tests)."""
    return sum(v * w for v, w in zip(values, widths))
