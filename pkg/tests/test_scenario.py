import json
from pathlib import Path

import pytest

from osnmasim.scenario import (
    Scenario,
    diff_reports,
    report_to_json,
    run_scenario,
)
from osnmasim.vectors import CrcError, TestVectorSet

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def _scenario(attack, sats=8, subframes=14, **extra):
    cfg = {
        "name": "test",
        "seed": 7,
        "constellation": {"sats": sats, "subframes": subframes},
        "attack": attack,
    }
    cfg.update(extra)
    return Scenario.from_dict(cfg)


def _outcomes(report):
    return [v["outcome"] for v in report["receiver"]["verdicts"]]


def test_reports_are_deterministic():
    sc = _scenario({"type": "tsr_realtime", "delay_s": "29.5"})
    a = report_to_json(run_scenario(sc))
    b = report_to_json(run_scenario(sc))
    assert a == b


def test_baseline_soundness():
    report = run_scenario(_scenario({"type": "none"}))
    outcomes = set(_outcomes(report))
    assert outcomes == {"authentic"}
    assert report["exit_code"] == 0
    assert report["receiver"]["status"] == "authenticating"


def test_minimal_constellation_baseline():
    report = run_scenario(_scenario({"type": "none"}, sats=4, subframes=10))
    assert set(_outcomes(report)) == {"authentic"}


def test_baseline_fix_matches_site():
    report = run_scenario(_scenario({"type": "none"}))
    assert report["auth_fixes"]
    for fix in report["auth_fixes"].values():
        geo = fix["geodetic"]
        assert geo["lat_deg"] == pytest.approx(45.0, abs=1e-7)
        assert geo["lon_deg"] == pytest.approx(7.6, abs=1e-7)
        assert geo["height_m"] == pytest.approx(240.0, abs=1e-3)


def test_tampered_vector_bit_caught(small_bundle):
    """Any post-generation bit flip surfaces in validation."""
    rows = list(small_bundle.vectors.rows)
    wn, tow, prn, idx, page_hex = rows[37]
    flipped = f"{int(page_hex[20], 16) ^ 1:x}"
    rows[37] = (wn, tow, prn, idx, page_hex[:20] + flipped + page_hex[21:])
    with pytest.raises(CrcError):
        TestVectorSet(rows=rows).validate()


def test_exit_code_two_on_failure_verdicts():
    report = run_scenario(_scenario(
        {"type": "tsf", "target": {"lat_deg": 4, "lon_deg": 50,
                                   "height_m": 100},
         "forge_tags": False}))
    assert report["exit_code"] == 2
    assert "tag_mismatch" in _outcomes(report)


def test_scenario_duration_clamped():
    sc = _scenario({"type": "none"}, subframes=8, duration_rounds=99)
    assert sc.duration_rounds == 8


def test_diff_reports_flags_paths():
    a = run_scenario(_scenario({"type": "none"}))
    b = run_scenario(_scenario({"type": "tsr_realtime", "delay_s": "29.5"}))
    assert diff_reports(a, a) == []
    diffs = diff_reports(a, b)
    assert any("delta" in d or "scenario" in d for d in diffs)


SHIPPED = {
    "baseline.json": ("authenticating", 0, {"authentic"}),
    "tsr_realtime_29_5.json": ("authenticating", 0, {"authentic"}),
    "tsr_realtime_30_5.json": ("ts_failed", 0, set()),
    "tsr_recorded_32_no_mitm.json": ("ts_failed", 0, set()),
    "tsr_recorded_32_mitm.json": ("authenticating", 0, {"authentic"}),
    "tsf_full.json": ("authenticating", 0, {"authentic"}),
    "tsf_nav_only.json": ("authenticating", 2,
                          {"tag_mismatch"}),
    "cr_delay_1_4.json": ("authenticating", 0,
                          {"authentic", "discarded_incomplete"}),
    "cr_delay_1_5.json": ("spoof_detected", 2,
                          {"authentic", "discarded_incomplete",
                           "key_rejected"}),
}


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_scenarios(name):
    """Each in-scope experiment ships as one runnable scenario file."""
    status, exit_code, outcomes = SHIPPED[name]
    report = run_scenario(Scenario.load(SCENARIO_DIR / name))
    assert report["receiver"]["status"] == status
    assert report["exit_code"] == exit_code
    assert set(_outcomes(report)) == outcomes
