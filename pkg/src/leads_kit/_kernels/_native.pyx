# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel implementations.

Mirrors ``_py.py`` operation for operation; keep the floating-point
expressions in the same order so both backends agree exactly.
"""

from cpython cimport array
from libc.math cimport asin, cos, fabs, sin, sqrt
from libc.stdlib cimport free, malloc

import array

cdef double DEG = 0.017453292519943295  # pi / 180
cdef double EARTH_RADIUS_KM = 6371.0088


cdef array.array _as_doubles(object seq):
    if type(seq) is array.array and seq.typecode == "d":
        return <array.array>seq
    return array.array("d", seq)


def compress_round(object values, object widths):
    """One pairwise merge round of the mean compressor."""
    cdef array.array av = _as_doubles(values)
    cdef array.array aw = _as_doubles(widths)
    cdef double[:] v = av
    cdef double[:] w = aw
    cdef Py_ssize_t n = v.shape[0]
    cdef list out_v = []
    cdef list out_w = []
    cdef Py_ssize_t i = 0
    cdef double w0, w1, ws
    while i + 1 < n:
        w0 = w[i]
        w1 = w[i + 1]
        ws = w0 + w1
        out_v.append((v[i] * w0 + v[i + 1] * w1) / ws)
        out_w.append(ws)
        i += 2
    if i < n:
        out_v.append(v[i])
        out_w.append(w[i])
    return out_v, out_w


def compress_extend(object values, object widths, object new_values,
                    object new_widths, Py_ssize_t capacity):
    """Append a stream of samples with compress-on-full semantics."""
    cdef array.array anv = _as_doubles(new_values)
    cdef array.array anw = _as_doubles(new_widths)
    cdef double[:] nv = anv
    cdef double[:] nw = anw
    cdef Py_ssize_t n_new = nv.shape[0]
    cdef Py_ssize_t n = len(values)
    # Scratch buffer: never holds more than capacity + 1 entries.
    cdef Py_ssize_t cap = capacity + 1 if capacity + 1 > n else n + 1
    cdef double *bv = <double *> malloc(2 * cap * sizeof(double))
    if bv == NULL:
        raise MemoryError()
    cdef double *bw = bv + cap
    cdef Py_ssize_t i, k, m
    cdef double w0, w1, ws
    try:
        for i in range(n):
            bv[i] = values[i]
            bw[i] = widths[i]
        for k in range(n_new):
            if n >= capacity:
                m = 0
                i = 0
                while i + 1 < n:
                    w0 = bw[i]
                    w1 = bw[i + 1]
                    ws = w0 + w1
                    bv[m] = (bv[i] * w0 + bv[i + 1] * w1) / ws
                    bw[m] = ws
                    m += 1
                    i += 2
                if i < n:
                    bv[m] = bv[i]
                    bw[m] = bw[i]
                    m += 1
                n = m
            bv[n] = nv[k]
            bw[n] = nw[k]
            n += 1
        return [bv[i] for i in range(n)], [bw[i] for i in range(n)]
    finally:
        free(bv)


def dropout_keep(object ts, object vs, object accs, double threshold):
    """Indices kept by the acceleration-based outlier filter."""
    cdef array.array at = _as_doubles(ts)
    cdef array.array av = _as_doubles(vs)
    cdef array.array aa = _as_doubles(accs)
    cdef double[:] t = at
    cdef double[:] v = av
    cdef double[:] a = aa
    cdef Py_ssize_t n = t.shape[0]
    if n == 0:
        return []
    cdef list kept = [0]
    cdef Py_ssize_t anchor = 0
    cdef Py_ssize_t j
    cdef double vp, denom
    for j in range(1, n):
        vp = v[anchor] + 1.8 * (a[anchor] + a[j]) * (t[j] - t[anchor])
        denom = vp - v[anchor]
        if denom != 0.0 and fabs((v[j] - vp) / denom) > threshold:
            continue
        kept.append(j)
        anchor = j
    return kept


def haversine_steps(object lats, object lons):
    """Great-circle distance in km between consecutive fixes (degrees in)."""
    cdef array.array alat = _as_doubles(lats)
    cdef array.array alon = _as_doubles(lons)
    cdef double[:] la = alat
    cdef double[:] lo = alon
    cdef Py_ssize_t n = la.shape[0]
    cdef list out = []
    cdef Py_ssize_t i
    cdef double lat1, lat2, dlat, dlon, s1, s2, h
    for i in range(1, n):
        lat1 = la[i - 1] * DEG
        lat2 = la[i] * DEG
        dlat = (la[i] - la[i - 1]) * DEG
        dlon = (lo[i] - lo[i - 1]) * DEG
        s1 = sin(dlat * 0.5)
        s2 = sin(dlon * 0.5)
        h = s1 * s1 + cos(lat1) * cos(lat2) * (s2 * s2)
        if h > 1.0:
            h = 1.0
        out.append(EARTH_RADIUS_KM * (2.0 * asin(sqrt(h))))
    return out
