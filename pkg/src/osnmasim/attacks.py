"""Generators for the four spoofing attacks.

* real-time replay: shift a live stream by a delay, bit-identical content;
* recorded replay: re-transmit an old capture, paired with an NTP
  man-in-the-middle delay that drags the victim's reference time back to
  the capture epoch;
* forgery: rewrite navigation data inside recorded subframes, recompute
  tags with the key disclosed two subframes later, reseal page CRCs, keys
  untouched;
* concatenating replay: overpower a tracking receiver mid-round and splice
  a real-time copy onto its page stream, aligned or shifted depending on
  where the takeover lands inside the 2-second first-page window.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gst import LrtSource
from .mack import TAG_BITS_DEFAULT, generate_subframe_tags, pack_mack, unpack_mack
from .navdata import (
    build_nav_data,
    parse_nav_data,
    replace_mack,
    replace_nav,
    subframe_nav_data,
)
from .pages import PAGE_MS, PageEvent, SUBFRAME_MS, Source, extract_osnma
from .tesla import TeslaKey


class InsufficientAuxError(ValueError):
    """Forgery needs at least three consecutive recorded subframes."""


@dataclass(frozen=True)
class RecordedStream:
    """Whole-subframe capture of an authentic stream."""

    events: tuple
    t_record_ms: int


@dataclass(frozen=True)
class CrTiming:
    replay_delay_ms: int
    t_acq_ms: int
    page_ms: int = PAGE_MS

    def __post_init__(self):
        if self.replay_delay_ms < 0 or self.t_acq_ms < 0:
            raise ValueError("timing parameters must be >= 0")


@dataclass(frozen=True)
class TsfConfig:
    target_ecef_m: tuple
    clock_offset_s: float = 0.0
    seg_count: int = 6
    tag_bits: int = TAG_BITS_DEFAULT
    mf: int = 0                      # MAC function id (HMAC-SHA-256)
    forge_tags: bool = True
    iono_a0: int = 0
    clock_bias_m: float = 0.0


def replay_realtime(live, delay_ms: int) -> list:
    """Record-and-replay with a fixed forwarding delay, bits untouched."""
    if delay_ms < 0:
        raise ValueError("delay must be >= 0")
    return [
        PageEvent(t_ms=e.t_ms + delay_ms, prn=e.prn,
                  source=Source.ADVERSARY, raw=e.raw)
        for e in live
    ]


def replay_recorded(rec: RecordedStream, replay_start_ms: int) -> list:
    """Re-timestamp a capture to begin at replay_start; content (and the
    GSTs inside) stays stale by replay_start - t_record."""
    if replay_start_ms < rec.t_record_ms:
        raise ValueError("cannot replay before the capture was taken")
    shift = replay_start_ms - rec.t_record_ms
    return [
        PageEvent(t_ms=e.t_ms + shift, prn=e.prn,
                  source=Source.ADVERSARY, raw=e.raw)
        for e in rec.events
    ]


def ntp_mitm_delay(source: LrtSource, delay_ms: int) -> LrtSource:
    """Delay NTP request packets: the victim's LRT reads behind true time."""
    if delay_ms < 0:
        raise ValueError("delay must be >= 0")
    return LrtSource(offset_ms=source.offset_ms - delay_ms,
                     error_bound_ms=source.error_bound_ms,
                     base_ms=source.base_ms)


def forge_nav_blob(aux_blob: bytes, cfg: TsfConfig) -> bytes:
    """Forge the navigation data of one subframe.

    Identity, timing and ephemeris words are kept from the recorded
    subframe (touching the timing words would break key verification);
    the correction fields are rewritten to the attacker's values.
    """
    nav = parse_nav_data(aux_blob)
    return build_nav_data(wn=nav.wn, tow=nav.tow, prn=nav.prn,
                          sat_ecef_m=nav.sat_ecef_m,
                          clock_bias_m=cfg.clock_bias_m,
                          iono_a0=cfg.iono_a0)


def tsf_forge_subframes(aux: list, cfg: TsfConfig) -> list:
    """Run the continuous forgery loop over one satellite's subframes.

    For each window (n, n+1, n+2): replace the nav data of subframe n,
    recompute its tags under the key disclosed in subframe n+2, overwrite
    the tag region of subframe n+1 (key bits preserved) and reseal every
    modified page.  The last two subframes pass through untouched, so the
    whole output stream verifies.
    """
    n = len(aux)
    if n < 3:
        raise InsufficientAuxError("need at least 3 consecutive subframes")
    out = list(aux)
    for i in range(n - 2):
        forged_blob = forge_nav_blob(subframe_nav_data(out[i]), cfg)
        out[i] = replace_nav(out[i], forged_blob)
        if not cfg.forge_tags:
            continue
        _, key_mack = extract_osnma(out[i + 2])
        _, key_bits = unpack_mack(key_mack, cfg.seg_count, cfg.tag_bits)
        key = TeslaKey(key_bits, out[i + 2].gst)
        tags = generate_subframe_tags(forged_blob, key,
                                      prn_d=out[i].prn, prn_a=out[i].prn,
                                      gst_sf=out[i + 1].gst,
                                      seg_count=cfg.seg_count,
                                      tag_bits=cfg.tag_bits)
        _, own_key = unpack_mack(extract_osnma(out[i + 1])[1],
                                 cfg.seg_count, cfg.tag_bits)
        out[i + 1] = replace_mack(out[i + 1],
                                  pack_mack(tags, own_key, cfg.tag_bits))
    return out


@dataclass
class _Grid:
    """Slot bookkeeping for the concatenating replay splice."""

    start_ms: int
    page_ms: int

    def slot_start(self, index: int) -> int:
        return self.start_ms + index * self.page_ms

    def first_slot_at_or_after(self, t_ms: int) -> int:
        return -((self.start_ms - t_ms) // self.page_ms)


def cr_compose(live, replayed, timing: CrTiming, onset_round: int = 0) -> list:
    """Merge a live stream with its real-time replayed copy.

    The replay begins replay_delay after the start of onset_round and the
    receiver needs t_acq to lock on.  Live pages overlapping the onset or
    anything after it are lost.  When the takeover lands inside (or exactly
    at the end of) the first page window, the replayed pages line up with
    the receiver's slot grid; a later takeover leaves every subsequent
    round carrying pages shifted by a whole number of slots.
    """
    page_ms = timing.page_ms
    live_sorted = sorted(live, key=lambda e: (e.t_ms, e.prn))
    if not live_sorted:
        return []
    grid = _Grid(start_ms=live_sorted[0].t_ms, page_ms=page_ms)
    onset = grid.slot_start(0) + onset_round * SUBFRAME_MS + timing.replay_delay_ms
    takeover = onset + timing.t_acq_ms
    offset_in_round = timing.replay_delay_ms + timing.t_acq_ms
    shift = 0 if offset_in_round <= page_ms else offset_in_round // page_ms

    out = [e for e in live_sorted if e.t_ms + page_ms <= onset]

    # replayed pages re-slotted onto the grid, ordered per satellite
    per_prn: dict = {}
    for e in sorted(replayed, key=lambda e: (e.t_ms, e.prn)):
        per_prn.setdefault(e.prn, []).append(e)
    first_slot = grid.first_slot_at_or_after(takeover)
    for prn, stream in per_prn.items():
        for slot in range(first_slot, len(stream) + shift):
            content = slot - shift
            if 0 <= content < len(stream):
                out.append(PageEvent(t_ms=grid.slot_start(slot), prn=prn,
                                     source=Source.ADVERSARY,
                                     raw=stream[content].raw))
    return sorted(out, key=lambda e: (e.t_ms, e.prn))
