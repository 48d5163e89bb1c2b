"""The simulated victim receiver.

Drives the authentication pipeline round by round: time-synchronization
gate at power-on, root-key acquisition over HKROOT blocks, then the
rolling three-subframe window in which the navigation data of subframe i
is checked against the tags of subframe i+1 using the key disclosed in
subframe i+2.  A destroyed round discards the pipeline and suspends
authentication; three fresh complete subframes restore it without
re-verifying the root key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .gst import (
    Gst,
    LrtSource,
    SUBFRAME_SECONDS,
    TsPolicy,
    TsStartup,
    ts_startup,
)
from .mack import TAG_BITS_DEFAULT, unpack_mack, verify_tags
from .navdata import subframe_nav_data
from .pages import SUBFRAME_MS, Subframe, assemble_round, extract_osnma
from .tesla import (
    AlignmentError,
    DsmAccumulator,
    GstOrderError,
    TeslaKey,
    load_public_key_pem,
    verify_key,
    verify_root,
)


class Status(Enum):
    COLD_START = "cold_start"
    TS_FAILED = "ts_failed"
    AWAITING_ROOT_KEY = "awaiting_root_key"
    AUTHENTICATING = "authenticating"
    SUSPENDED = "suspended"
    SPOOF_DETECTED = "spoof_detected"


class Outcome(Enum):
    AUTHENTIC = "authentic"
    KEY_REJECTED = "key_rejected"
    TAG_MISMATCH = "tag_mismatch"
    DISCARDED_INCOMPLETE = "discarded_incomplete"


@dataclass(frozen=True)
class AuthResult:
    gst: Gst
    prn: int
    outcome: Outcome

    def as_dict(self) -> dict:
        return {"gst": self.gst.as_dict(), "prn": self.prn,
                "outcome": self.outcome.value}


@dataclass
class ReceiverConfig:
    policy: TsPolicy
    pubkey_pem: str
    seg_count: int = 6
    tag_bits: int = TAG_BITS_DEFAULT
    key_reject_threshold: int = 1


@dataclass
class RoundResult:
    gst: Gst
    subframes: dict = field(default_factory=dict)   # prn -> Subframe
    verdicts: list = field(default_factory=list)


class Receiver:
    """Single-owner mutable receiver state; one instance per scenario."""

    def __init__(self, config: ReceiverConfig, lrt: LrtSource):
        self.config = config
        self.lrt = lrt
        self.status = Status.COLD_START
        self.trusted_key: TeslaKey | None = None
        self.root = None
        self.pending: dict = {}          # prn -> list of buffered subframes
        self.verdicts: list = []
        self.timeline: list = []
        self.deltas_ms: list = []
        self.rounds_ingested = 0
        self.key_rejections = 0
        self._dsm = DsmAccumulator()
        self._pubkey = load_public_key_pem(config.pubkey_pem)
        self._first_gst: Gst | None = None
        self._note_status(None)

    # -- startup -----------------------------------------------------------

    def power_on(self, first_gst: Gst, true_ms: int) -> Status:
        """Run the TS gate against the first observed subframe boundary."""
        self._first_gst = first_gst
        decision = ts_startup(first_gst, self.lrt, self.config.policy, true_ms)
        if decision is TsStartup.OSNMA_START:
            self.status = Status.AWAITING_ROOT_KEY
        elif decision is TsStartup.ILLEGAL_SIGNAL:
            self.status = Status.TS_FAILED
        # CALIBRATE_LRT keeps the cold-start state: OSNMA never begins
        self._note_status(first_gst)
        return self.status

    # -- per-round processing ----------------------------------------------

    def ingest_round(self, events, window_start_ms: int) -> RoundResult:
        """Assemble one 30-s round per satellite and run the pipeline.

        Navigation data is parsed whatever the authentication status; only
        the OSNMA pipeline is gated on a successful TS startup.
        """
        gst = self._round_gst()
        result = RoundResult(gst=gst)
        osnma_active = self.status not in (Status.COLD_START, Status.TS_FAILED)
        self.rounds_ingested += 1
        self._record_delta(gst, window_start_ms)

        prns = sorted({e.prn for e in events} | set(self.pending))
        trusted_before = self.trusted_key
        advanced: TeslaKey | None = None
        for prn in prns:
            sf = assemble_round(events, gst, prn, window_start_ms)
            result.subframes[prn] = sf
            if not osnma_active:
                continue
            verdict = self._process_subframe(sf, trusted_before)
            if verdict is not None:
                result.verdicts.append(verdict)
                if verdict.outcome is Outcome.AUTHENTIC:
                    advanced = self._key_of(self.pending[prn][-1])
        if advanced is not None:
            self.trusted_key = advanced
        self.verdicts.extend(result.verdicts)
        return result

    def report(self) -> dict:
        return {
            "status": self.status.value,
            "timeline": [
                {"gst": g.as_dict() if g else None, "status": s.value}
                for g, s in self.timeline
            ],
            "verdicts": [v.as_dict() for v in self.verdicts],
            "gst_lrt_delta_ms": list(self.deltas_ms),
            "rounds": self.rounds_ingested,
        }

    # -- internals -----------------------------------------------------------

    def _note_status(self, gst):
        if not self.timeline or self.timeline[-1][1] is not self.status:
            self.timeline.append((gst, self.status))

    def _round_gst(self) -> Gst:
        if self._first_gst is None:
            raise RuntimeError("receiver was never powered on")
        return self._first_gst.add_seconds(SUBFRAME_SECONDS * self.rounds_ingested)

    def _record_delta(self, gst: Gst, window_start_ms: int) -> None:
        # compare at subframe completion: content GST end vs LRT reading
        lrt_ms = self.lrt.read(window_start_ms + SUBFRAME_MS)
        gst_end_ms = gst.total_millis() + SUBFRAME_MS
        self.deltas_ms.append(lrt_ms - gst_end_ms)

    def _process_subframe(self, sf: Subframe, trusted_before) -> AuthResult | None:
        prn = sf.prn
        if not sf.complete:
            self.pending.pop(prn, None)
            if self.status is Status.AUTHENTICATING:
                self.status = Status.SUSPENDED
                self._note_status(sf.gst)
            return AuthResult(sf.gst, prn, Outcome.DISCARDED_INCOMPLETE)

        hkroot, _ = extract_osnma(sf)
        if self.root is None:
            self._feed_dsm(hkroot, sf.gst)

        window = self.pending.setdefault(prn, [])
        window.append(sf)
        if len(window) > 3:
            window.pop(0)
        if self.status is Status.SPOOF_DETECTED or self.trusted_key is None:
            return None
        if len(window) < 3:
            return None
        return self._verify_triple(window, trusted_before or self.trusted_key)

    def _feed_dsm(self, hkroot: bytes, gst: Gst) -> None:
        msg = self._dsm.feed(hkroot)
        if msg is None:
            return
        body = msg.signature and self._root_body(msg)
        if body and verify_root(body, msg.signature, self._pubkey):
            self.root = msg
            self.trusted_key = msg.root_key
            if self.status is Status.AWAITING_ROOT_KEY:
                self.status = Status.AUTHENTICATING
                self._note_status(gst)
        else:
            self._dsm.reset()

    @staticmethod
    def _root_body(msg) -> bytes:
        from .tesla import build_root_message
        return build_root_message(msg.nma_header, msg.mf, msg.wnk, msg.towk,
                                  msg.kroot)

    def _key_of(self, sf: Subframe) -> TeslaKey:
        _, mack = extract_osnma(sf)
        _, key_bits = unpack_mack(mack, self.config.seg_count,
                                  self.config.tag_bits)
        return TeslaKey(key_bits, sf.gst)

    def _verify_triple(self, window, trusted: TeslaKey) -> AuthResult:
        data_sf, tag_sf, key_sf = window
        candidate = self._key_of(key_sf)
        try:
            steps = verify_key(candidate, trusted)
        except (GstOrderError, AlignmentError):
            steps = None
        if steps is None:
            return self._reject_key(data_sf)

        _, tag_mack = extract_osnma(tag_sf)
        tags, _ = unpack_mack(tag_mack, self.config.seg_count,
                              self.config.tag_bits)
        matches = verify_tags(subframe_nav_data(data_sf), tags, candidate,
                              prn_d=data_sf.prn, prn_a=data_sf.prn,
                              gst_sf=tag_sf.gst,
                              seg_count=self.config.seg_count,
                              tag_bits=self.config.tag_bits)
        if not all(matches):
            return AuthResult(data_sf.gst, data_sf.prn, Outcome.TAG_MISMATCH)
        if self.status is Status.SUSPENDED:
            self.status = Status.AUTHENTICATING
            self._note_status(data_sf.gst)
        return AuthResult(data_sf.gst, data_sf.prn, Outcome.AUTHENTIC)

    def _reject_key(self, data_sf: Subframe) -> AuthResult:
        self.key_rejections += 1
        if self.key_rejections >= self.config.key_reject_threshold:
            self.status = Status.SPOOF_DETECTED
            self._note_status(data_sf.gst)
        return AuthResult(data_sf.gst, data_sf.prn, Outcome.KEY_REJECTED)
