import json
import math

import pytest

import oranlab


def test_cell_steps_and_reports():
    cell = oranlab.Cell()
    cell.run_ttis(250)
    assert cell.now_ms == 250
    recs = cell.snapshot_kpms()
    assert len(recs) > 0
    assert {r.slice for r in recs} <= {"eMBB", "MTC", "URLLC"}
    assert sum(cell.slicing) == 50


def test_control_accept_and_reject():
    cell = oranlab.Cell()
    ok, reason = cell.apply_control((36, 3, 11), "PF-RR-WF")
    assert ok and reason == ""
    cell.step_tti()
    assert tuple(cell.slicing) == (36, 3, 11)
    assert cell.scheduling == "PF-RR-WF"
    ok, reason = cell.apply_control((40, 40, 40), "RR-RR-RR")
    assert not ok and reason
    with pytest.raises(ValueError):
        cell.apply_control((36, 3, 11), "XX-RR-RR")


def test_indication_round_trip():
    cell = oranlab.Cell()
    cell.run_ttis(250)
    recs = cell.snapshot_kpms()
    frame = oranlab.encode_indication(7, 0, 3, recs)
    out = oranlab.decode(frame)
    assert out["status"] == "Ok"
    assert out["consumed"] == len(frame)
    msg = out["message"]
    assert msg["tag"] == "INDICATION"
    assert msg["seq_no"] == 3
    assert msg["payload"] == recs


def test_fragment_needs_more_bytes():
    frame = oranlab.encode_control(1, 9, (20, 20, 10), "RR-RR-RR")
    assert oranlab.decode(frame[:3])["status"] == "NeedMoreBytes"
    full = oranlab.decode(frame)
    assert full["message"]["slicing"] == [20, 20, 10]


def test_encode_rejects_non_finite():
    r = oranlab.KpmRecord()
    r.dl_mcs = math.nan
    with pytest.raises(oranlab.EncodeError):
        oranlab.encode_indication(1, 0, 0, [r])


def test_statistics():
    x = [1.0, 2.0, 3.0, 4.0]
    assert oranlab.pearson(x, [2.0 * v + 1 for v in x]) == pytest.approx(1.0)
    assert oranlab.pearson(x, [5.0] * 4) is None
    slope, intercept = oranlab.linear_fit(x, [3.0 * v - 2 for v in x])
    assert slope == pytest.approx(3.0)
    assert intercept == pytest.approx(-2.0)


def test_collect_and_analyze(tmp_path):
    spec = oranlab.default_spec()
    assert spec["mode"]
    col = oranlab.run("collect", duration_s=300, seed=5, out=tmp_path / "col")
    assert col["complete"] and col["rows"] > 0
    ana = oranlab.run("analyze", dataset=col["dataset"], out=tmp_path / "ana")
    assert "eMBB" in ana["selected"]
    manifest = json.loads((tmp_path / "ana" / "manifest.json").read_text())
    assert manifest["complete"]
    corr = oranlab.correlations(col["dataset"], ["dl_phy_tbs", "dl_tx_symbols"], "eMBB")
    assert corr["dl_phy_tbs"]["dl_tx_symbols"] > 0.9


def test_bad_spec_raises_config_error(tmp_path):
    with pytest.raises(oranlab.ConfigError):
        oranlab.run("collect", duration_s=-1, out=tmp_path / "x")
