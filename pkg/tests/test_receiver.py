import pytest

from osnmasim.gst import (
    AlternateThreshold,
    Gst,
    LrtSource,
    SymmetricBound,
)
from osnmasim.mack import pack_mack, unpack_mack
from osnmasim.navdata import replace_mack
from osnmasim.pages import PAGE_MS, SUBFRAME_MS
from osnmasim.receiver import Outcome, Receiver, ReceiverConfig, Status
from osnmasim.scenario import live_events
from osnmasim.tesla import DSM_BLOCKS

GST0 = Gst(1251, 277200)


def _receiver(bundle, policy=None, lrt=None, **cfg_kw):
    config = ReceiverConfig(policy=policy or AlternateThreshold(30000),
                            pubkey_pem=bundle.pubkey_pem, **cfg_kw)
    return Receiver(config, lrt or LrtSource())


def _drive(receiver, events, rounds, t0=None):
    t0 = min(e.t_ms for e in events) if t0 is None else t0
    receiver.power_on(GST0, true_ms=t0)
    results = []
    for r in range(rounds):
        w0 = t0 + r * SUBFRAME_MS
        window = [e for e in events if w0 <= e.t_ms < w0 + SUBFRAME_MS]
        results.append(receiver.ingest_round(window, w0))
    return results


def _drop(events, prn, round_idx, slot):
    kill = GST0.total_millis() + round_idx * SUBFRAME_MS + slot * PAGE_MS
    return [e for e in events if not (e.prn == prn and e.t_ms == kill)]


def test_power_on_sub_second_delta_starts_osnma(small_bundle):
    rx = _receiver(small_bundle, lrt=LrtSource(offset_ms=771))
    assert rx.power_on(GST0, GST0.total_millis()) is Status.AWAITING_ROOT_KEY


def test_power_on_30_5_fails(small_bundle):
    rx = _receiver(small_bundle, lrt=LrtSource(offset_ms=30500))
    assert rx.power_on(GST0, GST0.total_millis()) is Status.TS_FAILED


def test_power_on_untrusted_bound_stays_cold(small_bundle):
    rx = _receiver(small_bundle, policy=SymmetricBound(15000),
                   lrt=LrtSource(error_bound_ms=20000))
    assert rx.power_on(GST0, GST0.total_millis()) is Status.COLD_START


def test_cold_start_trace(small_bundle):
    """Root key completes after one HKROOT block cycle, then the rolling
    window authenticates data two subframes behind the disclosed key."""
    rx = _receiver(small_bundle)
    events = live_events(small_bundle.vectors.subframes())
    results = _drive(rx, events, 12)

    acquisition_rounds = results[:DSM_BLOCKS - 1]
    assert all(not r.verdicts for r in acquisition_rounds)
    first = results[DSM_BLOCKS - 1]
    assert rx.status is Status.AUTHENTICATING
    assert {v.outcome for v in first.verdicts} == {Outcome.AUTHENTIC}
    # at the round of the first verdict, the data subframe sits two rounds
    # behind the key subframe
    expect_gst = GST0.add_seconds(30 * (DSM_BLOCKS - 3))
    assert {v.gst for v in first.verdicts} == {expect_gst}
    assert {v.prn for v in first.verdicts} == set(small_bundle.sat_states)
    # every later round emits one authentic verdict per satellite
    for r in results[DSM_BLOCKS:]:
        assert {v.outcome for v in r.verdicts} == {Outcome.AUTHENTIC}


def test_no_verdicts_before_osnma_start(small_bundle):
    rx = _receiver(small_bundle, lrt=LrtSource(offset_ms=31000))
    events = live_events(small_bundle.vectors.subframes())
    results = _drive(rx, events, 10)
    assert rx.status is Status.TS_FAILED
    assert all(not r.verdicts for r in results)
    # nav data still parsed for the position pipeline
    assert any(sf.complete for r in results for sf in r.subframes.values())


def test_fresh_report_is_empty(small_bundle):
    rx = _receiver(small_bundle)
    rep = rx.report()
    assert rep["verdicts"] == []
    assert rep["status"] == "cold_start"


def test_ts_failed_recorded_in_timeline(small_bundle):
    rx = _receiver(small_bundle, lrt=LrtSource(offset_ms=32000))
    rx.power_on(GST0, GST0.total_millis())
    rep = rx.report()
    assert rep["status"] == "ts_failed"
    assert rep["timeline"][-1]["status"] == "ts_failed"


def test_destroyed_round_suspends_then_recovers(small_bundle):
    """One destroyed page discards the round; three fresh complete
    subframes bring authentication back without a new root key."""
    events = _drop(live_events(small_bundle.vectors.subframes()),
                   prn=2, round_idx=8, slot=4)
    rx = _receiver(small_bundle)
    results = _drive(rx, events, 12)

    round8 = results[8]
    assert any(v.outcome is Outcome.DISCARDED_INCOMPLETE and v.prn == 2
               for v in round8.verdicts)
    assert rx.status is Status.AUTHENTICATING          # recovered by round 11
    statuses = [s.value for _, s in rx.timeline]
    assert "suspended" in statuses
    # resume verdict: three complete subframes after the gap authenticate
    # the first of them
    resume = [v for v in results[11].verdicts if v.prn == 2]
    assert [v.outcome for v in resume] == [Outcome.AUTHENTIC]
    assert resume[0].gst == GST0.add_seconds(30 * 9)


def test_tampered_tag_region_localizes_to_tag_mismatch(small_bundle):
    """Tags for subframe i live in subframe i+1: corrupting that region
    flags subframe i only."""
    sfs = {prn: list(lst) for prn, lst in small_bundle.vectors.subframes().items()}
    target_prn = 1
    sf5 = sfs[target_prn][5]
    tags, key = unpack_mack(b"".join(p.mack.to_bytes(4, "big") for p in sf5.pages),
                            n_tags=6)
    tags[0] = bytes(5)
    sfs[target_prn][5] = replace_mack(sf5, pack_mack(tags, key))
    rx = _receiver(small_bundle)
    results = _drive(rx, live_events(sfs), 9)

    flagged = [v for r in results for v in r.verdicts
               if v.outcome is Outcome.TAG_MISMATCH]
    assert [(v.prn, v.gst) for v in flagged] == \
        [(target_prn, GST0.add_seconds(30 * 4))]
    # other satellites and other subframes of the same satellite are clean
    authentic = [v for r in results for v in r.verdicts
                 if v.outcome is Outcome.AUTHENTIC]
    assert {v.prn for v in authentic} == set(small_bundle.sat_states)


def test_tampered_key_bits_reject_key(small_bundle):
    """The key for subframe i is disclosed in subframe i+2: corrupting it
    yields a key rejection, never an authentic verdict."""
    sfs = {prn: list(lst) for prn, lst in small_bundle.vectors.subframes().items()}
    target_prn = 3
    sf6 = sfs[target_prn][6]
    tags, _ = unpack_mack(b"".join(p.mack.to_bytes(4, "big") for p in sf6.pages),
                          n_tags=6)
    sfs[target_prn][6] = replace_mack(sf6, pack_mack(tags, bytes(16)))
    rx = _receiver(small_bundle, key_reject_threshold=10)
    results = _drive(rx, live_events(sfs), 9)

    rejected = [v for r in results for v in r.verdicts
                if v.outcome is Outcome.KEY_REJECTED]
    assert [(v.prn, v.gst) for v in rejected] == \
        [(target_prn, GST0.add_seconds(30 * 4))]
    assert not any(v.outcome is Outcome.AUTHENTIC and v.prn == target_prn
                   and v.gst == GST0.add_seconds(30 * 4)
                   for r in results for v in r.verdicts)


def test_key_reject_threshold_latches_spoof_detected(small_bundle):
    sfs = {prn: list(lst) for prn, lst in small_bundle.vectors.subframes().items()}
    sf6 = sfs[1][6]
    tags, _ = unpack_mack(b"".join(p.mack.to_bytes(4, "big") for p in sf6.pages),
                          n_tags=6)
    sfs[1][6] = replace_mack(sf6, pack_mack(tags, bytes(16)))
    rx = _receiver(small_bundle)            # threshold 1
    _drive(rx, live_events(sfs), 9)
    assert rx.status is Status.SPOOF_DETECTED
    # once flagged, no further verdicts of any kind
    tail = [v for v in rx.verdicts
            if v.gst.total_seconds() > GST0.total_seconds() + 30 * 4]
    assert tail == []


def test_report_shape(small_bundle):
    rx = _receiver(small_bundle)
    _drive(rx, live_events(small_bundle.vectors.subframes()), 10)
    rep = rx.report()
    assert rep["rounds"] == 10
    assert len(rep["gst_lrt_delta_ms"]) == 10
    assert all(d == 0 for d in rep["gst_lrt_delta_ms"])
    assert all(set(v) == {"gst", "prn", "outcome"} for v in rep["verdicts"])
