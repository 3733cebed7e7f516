import numpy as np
import pytest

import photoncube as pc
from photoncube import io as pio
from reference import random_bits


def test_pcube_round_trip_preserves_bits_and_rate(tmp_path):
    bits = random_bits((37, 5, 11), seed=4)
    sensor = pc.SensorParams(frame_rate=80_000.0)
    cube = pc.PhotonCube.from_bits(bits, sensor=sensor)
    path = tmp_path / "c.pcube"
    pio.write_pcube(path, cube)
    assert path.stat().st_size == 32 + 37 * 5 * 2
    back = pio.read_pcube(path)
    assert back.dims == (37, 5, 11)
    assert np.array_equal(back.bits(), bits)
    assert back.sensor.frame_rate == 80_000.0
    # explicit sensor wins over the header default
    s2 = pc.SensorParams(eta=0.5, frame_rate=80_000.0)
    assert pio.read_pcube(path, sensor=s2).sensor == s2


def test_pcube_rejects_foreign_and_truncated_files(tmp_path):
    p = tmp_path / "bad"
    p.write_bytes(b"JUNK" + bytes(28))
    with pytest.raises(ValueError, match="not a photon cube"):
        pio.read_pcube(p)
    bits = random_bits((4, 4, 16), seed=0)
    good = tmp_path / "good.pcube"
    pio.write_pcube(good, pc.PhotonCube.from_bits(bits))
    (tmp_path / "trunc.pcube").write_bytes(good.read_bytes()[:-3])
    with pytest.raises(ValueError, match="truncated"):
        pio.read_pcube(tmp_path / "trunc.pcube")


def test_pevt_round_trip(tmp_path):
    stream = pc.EventStream(t=[3, 7, 7], y=[0, 2, 1], x=[5, 1, 4], p=[1, -1, 1],
                            dims=(16, 4, 8), frame_rate=100_000.0)
    path = tmp_path / "e.pevt"
    pio.write_pevt(path, stream)
    assert path.stat().st_size == 32 + 3 * 10
    back = pio.read_pevt(path)
    assert back.dims == (16, 4, 8)
    assert back.frame_rate == 100_000.0
    for f in ("t", "y", "x", "p"):
        assert np.array_equal(getattr(back, f), getattr(stream, f))
    (tmp_path / "junk").write_bytes(b"XXXX" + bytes(28))
    with pytest.raises(ValueError, match="not an event stream"):
        pio.read_pevt(tmp_path / "junk")


def test_pgm16_quantization_and_round_trip(tmp_path):
    vals = np.array([[0.0, 0.5, 1.0], [0.25, 2.0, -1.0]])
    path = tmp_path / "i.pgm"
    pio.write_pgm16(path, vals, scale=1.0)       # clips outside [0, 1]
    q = pio.read_pgm16(path)
    assert q.dtype == np.uint16
    assert q.tolist() == [[0, 32768, 65535], [16384, 65535, 0]]
    # default scale normalizes by the max
    pio.write_pgm16(path, np.array([[0.0, 4.0]]))
    assert pio.read_pgm16(path).tolist() == [[0, 65535]]


def test_pgm16_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    payload = np.array([[1, 2]], dtype=">u2").tobytes()
    path.write_bytes(b"P5\n# a comment\n2 1\n65535\n" + payload)
    assert pio.read_pgm16(path).tolist() == [[1, 2]]


def test_pfm_round_trip_bottom_up(tmp_path):
    vals = np.arange(12, dtype=np.float64).reshape(3, 4) * 0.5
    path = tmp_path / "f.pfm"
    pio.write_pfm(path, vals)
    back = pio.read_pfm(path)
    assert np.array_equal(back, vals.astype(np.float32))
    # rows are stored bottom-to-top: first stored row is the last image row
    raw = path.read_bytes()
    first_row = np.frombuffer(raw[len(b"Pf\n4 3\n-1.0\n"):][:16], dtype="<f4")
    assert np.array_equal(first_row, vals[-1].astype(np.float32))


def test_pbm_round_trip_msb_first(tmp_path):
    mask = random_bits((5, 11), seed=8).astype(bool)
    path = tmp_path / "m.pbm"
    pio.write_pbm(path, mask)
    assert np.array_equal(pio.read_pbm(path), mask)
    # a single leading one packs into the high bit of the first byte
    one = np.zeros((1, 8), dtype=bool)
    one[0, 0] = True
    pio.write_pbm(path, one)
    assert path.read_bytes().endswith(b"\x80")


def test_flow_round_trip(tmp_path):
    flow = np.random.default_rng(0).normal(size=(4, 6, 2))
    path = tmp_path / "f.flow"
    pio.write_flow(path, flow)
    assert np.allclose(pio.read_flow(path), flow, atol=1e-6)
    with pytest.raises(ValueError):
        pio.write_flow(path, np.zeros((4, 6, 3)))


def test_trajectory_text_round_trip(tmp_path):
    traj = pc.make_linear_trajectory(0.7, (2, 1), 9)
    path = tmp_path / "t.txt"
    pio.write_trajectory_text(path, traj)
    back = pio.read_trajectory_text(path)
    assert np.array_equal(back.shifts, traj.shifts)
    path.write_text("# t dx dy\n0 1 0\n2 3 0\n")
    with pytest.raises(ValueError, match="consecutive"):
        pio.read_trajectory_text(path)
    path.write_text("# nothing\n")
    with pytest.raises(ValueError, match="empty"):
        pio.read_trajectory_text(path)


def test_accumulation_bundle_reconstructs_signed_values(tmp_path):
    vals = np.array([[3.0, -1.5], [0.0, 6.0]])
    paths = pio.write_accumulation(tmp_path / "acc", vals)
    assert [p.name for p in paths] == ["acc.pfm", "acc_pos.pgm", "acc_neg.pgm"]
    assert np.array_equal(pio.read_pfm(paths[0]), vals.astype(np.float32))
    pos = pio.read_pgm16(paths[1]).astype(np.float64) * 6.0 / 65535
    neg = pio.read_pgm16(paths[2]).astype(np.float64) * 6.0 / 65535
    assert np.allclose(pos - neg, vals, atol=6.0 / 65535)


def test_read_config_parses_and_reports_line_numbers(tmp_path):
    path = tmp_path / "cfg"
    path.write_text("# comment\nreadout.rate_hz = 30\n\ncost.sum.processing_ms=1.5\n")
    assert pio.read_config(path) == {"readout.rate_hz": "30",
                                     "cost.sum.processing_ms": "1.5"}
    path.write_text("ok=1\nbroken line\n")
    with pytest.raises(ValueError, match=":2:"):
        pio.read_config(path)
