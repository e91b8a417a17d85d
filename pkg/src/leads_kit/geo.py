"""Great-circle helpers shared by inference and analysis.

Haversine on the mean Earth radius: a flat-earth approximation would skew
lap geometry away from the equator, and the error of ignoring ellipticity
is far below GPS noise at track scale.
"""

from __future__ import annotations

from typing import Sequence

from ._kernels import haversine_steps


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance between two fixes, km (inputs in degrees)."""
    return haversine_steps([lat1, lat2], [lon1, lon2])[0]


def path_distances_km(lats: Sequence[float], lons: Sequence[float]) -> list[float]:
    """Distance of each consecutive fix pair along a path, km."""
    return haversine_steps(lats, lons)


def path_length_km(lats: Sequence[float], lons: Sequence[float]) -> float:
    """Total path length, km."""
    return sum(haversine_steps(lats, lons))
