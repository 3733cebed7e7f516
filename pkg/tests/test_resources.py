import math

import pytest

import photoncube as pc


REF = pc.ReadoutSpec(pixels=288)


def test_event_record_width():
    # 288 pixels need 9 address bits; plus 8 timestamp bits and polarity
    assert REF.event_bits == 18
    assert pc.ReadoutSpec(pixels=1024).event_bits == 10 + 8 + 1


def test_bandwidth_formulas():
    assert pc.bandwidth("image", REF) == pytest.approx(288 * 12 * 40 / 1024)
    assert pc.bandwidth("cube", REF) == pytest.approx(288 * 100_000 / 1024)
    assert pc.bandwidth("event", REF, event_rate=5760.0) == pytest.approx(5760 * 18 / 1024)
    with pytest.raises(ValueError):
        pc.bandwidth("event", REF)
    with pytest.raises(ValueError):
        pc.bandwidth("frame", REF)


def test_power_is_linear_in_bandwidth():
    ro, tot = pc.power(100.0, 2.0)
    assert ro == pytest.approx(100 * 54 / 1000)
    assert tot == pytest.approx(2.0 + ro)
    assert pc.power(0.0, 0.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        pc.power(-1.0, 0.0)


def test_benchmark_table_structure_and_combination_row():
    report = pc.benchmark_table(REF)
    names = [r.name for r in report.rows]
    assert names == ["sum", "compressive", "motion", "event",
                     "three-projection", "photon-cube"]
    combo = report.row("three-projection")
    parts = [report.row(n) for n in ("compressive", "event", "motion")]
    assert combo.processing_ms == pytest.approx(sum(p.processing_ms for p in parts))
    assert combo.processing_uw == pytest.approx(sum(p.processing_uw for p in parts))
    # the combined event output reads out as a frame, so 3 image streams
    assert combo.bandwidth_kbps == pytest.approx(3 * report.row("sum").bandwidth_kbps)
    with pytest.raises(KeyError):
        report.row("none")


def test_event_row_uses_both_calibrated_rates():
    report = pc.benchmark_table(REF)
    ev = report.row("event")
    assert ev.bandwidth_kbps == pytest.approx(5760 * 18 / 1024)
    # readout power was characterized at its own stimulus rate
    assert ev.readout_uw == pytest.approx(6144 * 18 / 1024 * 54 / 1000)
    assert ev.total_uw == pytest.approx(ev.processing_uw + ev.readout_uw)


def test_overrides_change_only_their_targets():
    report = pc.benchmark_table(REF, overrides={
        "readout.rate_hz": "20",
        "cost.sum.processing_ms": "2.0",
        "event.stream_rate_hz": "1000",
    })
    assert report.row("sum").bandwidth_kbps == pytest.approx(288 * 12 * 20 / 1024)
    assert report.row("sum").processing_ms == 2.0
    assert report.row("compressive").processing_ms == 1.678
    assert report.row("event").bandwidth_kbps == pytest.approx(1000 * 18 / 1024)
    with pytest.raises(ValueError, match="unknown config key"):
        pc.benchmark_table(REF, overrides={"bogus": "1"})
    with pytest.raises(ValueError, match="unknown config key"):
        pc.benchmark_table(REF, overrides={"cost.sum.side": "1"})


def test_scale_to_array_scales_readout_only():
    base = pc.benchmark_table(REF)
    mega = pc.scale_to_array(base, pixels=288 * 4, detection_uw=10.0)
    for r0, r1 in zip(base.rows, mega.rows):
        assert r1.processing_ms == r0.processing_ms
        assert r1.processing_uw == r0.processing_uw
        assert r1.bandwidth_kbps == pytest.approx(4 * r0.bandwidth_kbps)
        assert r1.readout_uw == pytest.approx(4 * r0.readout_uw)
        assert r1.total_uw == pytest.approx(r0.processing_uw + 4 * r0.readout_uw + 10.0)
    with pytest.raises(ValueError):
        pc.scale_to_array(base, pixels=0)


def test_report_serializations():
    report = pc.benchmark_table(REF)
    text = report.to_text()
    assert "three-projection" in text and "kb/s" in text
    csv = report.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0].startswith("projection,processing_ms")
    assert len(lines) == 7
    cells = lines[1].split(",")
    assert cells[0] == "sum" and float(cells[2]) == 135.0


def test_readout_spec_validation():
    with pytest.raises(ValueError):
        pc.ReadoutSpec(pixels=0)
    with pytest.raises(ValueError):
        pc.ReadoutSpec(pixels=10, readout_rate=0)
    with pytest.raises(ValueError):
        pc.ReadoutSpec(pixels=10, bit_depth=0)
