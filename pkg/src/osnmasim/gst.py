"""Galileo System Time, local reference time sources and the
time-synchronization (TS) gate checked at receiver startup.

All simulation timestamps are integer milliseconds; GST week/time-of-week
are integer seconds.  Sub-second thresholds such as 29.5 s therefore compare
exactly, with no float rounding at the decision boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from enum import Enum

SECONDS_PER_WEEK = 604_800
SUBFRAME_SECONDS = 30
MS_PER_S = 1000

# GST ran ahead of UTC by a fixed number of leap seconds at the time the
# reference captures were made.  Display-only; no decision depends on it.
GST_UTC_OFFSET_S = 18


def to_millis(seconds) -> int:
    """Convert a seconds value (int, float, str or Decimal) to integer ms.

    Configs carry short decimals ("29.5", "0.771"); routing them through
    Decimal keeps boundary comparisons exact.
    """
    return int((Decimal(str(seconds)) * MS_PER_S).to_integral_value())


def millis_to_seconds_str(ms: int) -> str:
    """Render integer milliseconds as a decimal-seconds string."""
    return str(Decimal(ms) / MS_PER_S)


@dataclass(frozen=True)
class Gst:
    """Galileo System Time: week number plus time of week in whole seconds."""

    wn: int
    tow: int

    def __post_init__(self):
        if self.wn < 0:
            raise ValueError(f"negative week number: {self.wn}")
        if not 0 <= self.tow < SECONDS_PER_WEEK:
            raise ValueError(f"tow out of range: {self.tow}")

    def total_seconds(self) -> int:
        return self.wn * SECONDS_PER_WEEK + self.tow

    def total_millis(self) -> int:
        return self.total_seconds() * MS_PER_S

    def add_seconds(self, seconds: int) -> "Gst":
        total = self.total_seconds() + seconds
        if total < 0:
            raise ValueError("GST before epoch")
        return Gst(total // SECONDS_PER_WEEK, total % SECONDS_PER_WEEK)

    def as_dict(self) -> dict:
        return {"wn": self.wn, "tow": self.tow}


def gst_total_seconds(g: Gst) -> int:
    """Total seconds since GST epoch (wn * 604800 + tow)."""
    return g.total_seconds()


@dataclass(frozen=True)
class SymmetricBound:
    """TS rule |GST - LRT| < B, with B the LRT error bound in ms."""

    b_ms: int


@dataclass(frozen=True)
class AlternateThreshold:
    """Lightweight TS rule LRT - GST < T_L, the one-sided variant deployed
    by receivers that skip error-bound bookkeeping."""

    t_l_ms: int


TsPolicy = SymmetricBound | AlternateThreshold


@dataclass(frozen=True)
class LrtSource:
    """A local-reference-time source (crystal clock or NTP-derived).

    Reading the source at true time t yields t + offset_ms.  error_bound_ms
    is the trust interval the receiver attaches to each reading; base_ms is
    the anchor used when read() is called without an explicit time.
    """

    offset_ms: int = 0
    error_bound_ms: int = 0
    base_ms: int = 0

    def __post_init__(self):
        if self.error_bound_ms < 0:
            raise ValueError("error bound must be >= 0")

    def read(self, true_ms: int | None = None) -> int:
        t = self.base_ms if true_ms is None else true_ms
        return t + self.offset_ms


class TsStartup(Enum):
    OSNMA_START = "osnma_start"
    CALIBRATE_LRT = "calibrate_lrt"
    ILLEGAL_SIGNAL = "illegal_signal"


def check_time_sync(gst: Gst, lrt_ms: int, policy: TsPolicy) -> bool:
    """Apply the configured TS rule to a GST reading and an LRT value."""
    delta_ms = lrt_ms - gst.total_millis()
    if isinstance(policy, SymmetricBound):
        return abs(delta_ms) < policy.b_ms
    return delta_ms < policy.t_l_ms


def ts_startup(gst: Gst, source: LrtSource, policy: TsPolicy,
               true_ms: int | None = None) -> TsStartup:
    """Run the startup TS flow.

    Under SymmetricBound the source's error bound is checked first: a bound
    larger than half the tolerated window (T_L/2 == B) means the LRT cannot
    be trusted and the receiver should calibrate it instead.  NTP-backed
    AlternateThreshold policies skip the bound check.
    """
    if isinstance(policy, SymmetricBound) and source.error_bound_ms > policy.b_ms:
        return TsStartup.CALIBRATE_LRT
    if check_time_sync(gst, source.read(true_ms), policy):
        return TsStartup.OSNMA_START
    return TsStartup.ILLEGAL_SIGNAL
