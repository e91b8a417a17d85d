"""Desk-scale toolkit for lightweight vehicle telemetry.

Subsystems: shared domain types (``model``), a device registry
(``devtree``), delimiter-framed transport (``framing``, ``comm``),
integral-preserving caching (``persist``), adaptive frame pacing
(``pacer``), sensor decoding (``sensors``), stability interventions
(``esc``), channel inference (``inference``), trip/lap analysis
(``analysis``), and the CLI harness (``cli``). Hot loops run on a compiled
kernel when available (see ``leads_kit._kernels.BACKEND``).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .model import TelemetryFrame, Trip, differentiate_forward, integrate_left

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "TelemetryFrame",
    "Trip",
    "differentiate_forward",
    "integrate_left",
    "__version__",
]
