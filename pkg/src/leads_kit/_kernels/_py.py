"""Pure-Python kernel implementations.

These are the reference semantics for the compiled extension in
``_native.pyx``: every function here performs the same floating-point
operations in the same order, so both backends produce identical results
and the test suite can assert exact equality between them.
"""

from __future__ import annotations

import math
from typing import Sequence

EARTH_RADIUS_KM = 6371.0088


def compress_round(
    values: Sequence[float], widths: Sequence[float]
) -> tuple[list[float], list[float]]:
    """One pairwise merge round of the mean compressor.

    Adjacent entries (0,1), (2,3), ... merge into a single entry whose width
    is the sum and whose value is the width-weighted mean, preserving
    value*width; an odd trailing entry is carried unmerged.
    """
    n = len(values)
    out_v: list[float] = []
    out_w: list[float] = []
    i = 0
    while i + 1 < n:
        w0 = widths[i]
        w1 = widths[i + 1]
        w = w0 + w1
        out_v.append((values[i] * w0 + values[i + 1] * w1) / w)
        out_w.append(w)
        i += 2
    if i < n:
        out_v.append(values[i])
        out_w.append(widths[i])
    return out_v, out_w


def compress_extend(
    values: Sequence[float],
    widths: Sequence[float],
    new_values: Sequence[float],
    new_widths: Sequence[float],
    capacity: int,
) -> tuple[list[float], list[float]]:
    """Append a stream of samples with compress-on-full semantics.

    Starting from the current entries, each new sample is appended; whenever
    the entry count reaches ``capacity`` a :func:`compress_round` is applied
    in place first. Returns the final (values, widths) lists.
    """
    buf_v = list(values)
    buf_w = list(widths)
    n = len(buf_v)
    for k in range(len(new_values)):
        if n >= capacity:
            m = 0
            i = 0
            while i + 1 < n:
                w0 = buf_w[i]
                w1 = buf_w[i + 1]
                w = w0 + w1
                buf_v[m] = (buf_v[i] * w0 + buf_v[i + 1] * w1) / w
                buf_w[m] = w
                m += 1
                i += 2
            if i < n:
                buf_v[m] = buf_v[i]
                buf_w[m] = buf_w[i]
                m += 1
            del buf_v[m:]
            del buf_w[m:]
            n = m
        buf_v.append(new_values[k])
        buf_w.append(new_widths[k])
        n += 1
    return buf_v, buf_w


def dropout_keep(
    ts: Sequence[float],
    vs: Sequence[float],
    accs: Sequence[float],
    threshold: float,
) -> list[int]:
    """Indices of samples kept by the acceleration-based outlier filter.

    The predicted speed at t1 from the last kept sample at t0 is
    ``v0 + 1.8*(a0 + a1)*(t1 - t0)`` and a sample is dropped when
    ``|v1 - vp| / |vp - v0|`` exceeds ``threshold``. A zero denominator
    keeps the sample; the first sample is always kept.
    """
    n = len(ts)
    if n == 0:
        return []
    kept = [0]
    anchor = 0
    for j in range(1, n):
        vp = vs[anchor] + 1.8 * (accs[anchor] + accs[j]) * (ts[j] - ts[anchor])
        denom = vp - vs[anchor]
        if denom != 0.0 and abs((vs[j] - vp) / denom) > threshold:
            continue
        kept.append(j)
        anchor = j
    return kept


def haversine_steps(lats: Sequence[float], lons: Sequence[float]) -> list[float]:
    """Great-circle distance in km between consecutive fixes (degrees in)."""
    n = len(lats)
    out: list[float] = []
    for i in range(1, n):
        lat1 = math.radians(lats[i - 1])
        lat2 = math.radians(lats[i])
        dlat = math.radians(lats[i] - lats[i - 1])
        dlon = math.radians(lons[i] - lons[i - 1])
        s1 = math.sin(dlat * 0.5)
        s2 = math.sin(dlon * 0.5)
        a = s1 * s1 + math.cos(lat1) * math.cos(lat2) * (s2 * s2)
        if a > 1.0:
            a = 1.0
        out.append(EARTH_RADIUS_KM * (2.0 * math.asin(math.sqrt(a))))
    return out
