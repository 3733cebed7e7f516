import math

import numpy as np
import pytest

import photoncube as pc
from reference import (first_event_plane, oracle_events, oracle_voxel,
                       random_bits)


def _cube(seed, dims=(300, 4, 4), density=0.5):
    bits = random_bits(dims, seed=seed, density=density)
    return pc.PhotonCube.from_bits(bits), bits


def test_event_params_validation():
    with pytest.raises(ValueError):
        pc.EventParams(tau=0.0)
    with pytest.raises(ValueError):
        pc.EventParams(beta=1.0)
    with pytest.raises(ValueError):
        pc.EventParams(t0=0)
    with pytest.raises(ValueError):
        pc.EventParams(encoding="linear")
    with pytest.raises(ValueError):
        pc.EventParams(ref_update="decay")
    # adaptive map may replace the fixed threshold entirely
    pc.EventParams(tau=0.0, adaptive=pc.AdaptiveThreshold.variance_range(0.1, 0.5))


def test_brightness_encode_identity_and_log_mle():
    s = pc.SensorParams(eta=0.4, w_exp=1e-5)
    mu = np.array([0.0, 0.25, 1.0])
    assert np.array_equal(pc.brightness_encode(mu), mu)
    enc = pc.brightness_encode(mu, "log-mle", s)
    assert np.isneginf(enc[0]) and np.isposinf(enc[2])
    assert enc[1] == pytest.approx(math.log(-math.log(0.75) / (0.4 * 1e-5)))
    with pytest.raises(ValueError):
        pc.brightness_encode(mu, "log-mle")


@pytest.mark.parametrize("ref_update", ["additive", "resync"])
@pytest.mark.parametrize("tau,beta", [(0.10, 0.90), (0.15, 0.95), (0.25, 0.85)])
def test_emulator_matches_scalar_oracle_identity(tau, beta, ref_update):
    cube, bits = _cube(seed=20)
    prm = pc.EventParams(tau=tau, beta=beta, t0=20, ref_update=ref_update)
    _, ecube = pc.emulate_events(cube, prm)
    want = oracle_events(bits, tau, beta, 20, ref_update=ref_update)
    assert np.array_equal(ecube.dense(), want)
    assert want.any()                     # the comparison is not vacuous


def test_emulator_matches_scalar_oracle_log_mle():
    cube, bits = _cube(seed=21, density=0.3)
    s = pc.SensorParams(eta=0.5, w_exp=1e-5)
    prm = pc.EventParams(tau=0.5, beta=0.9, t0=20, encoding="log-mle")
    _, ecube = pc.emulate_events(cube, prm, sensor=s)
    want = oracle_events(bits, 0.5, 0.9, 20, encoding="log-mle",
                         eta=0.5, w_exp=1e-5)
    assert np.array_equal(ecube.dense(), want)
    assert want.any()


def test_emulator_matches_scalar_oracle_adaptive():
    cube, bits = _cube(seed=22)
    adaptive = pc.AdaptiveThreshold.variance_range(0.08, 0.3)
    prm = pc.EventParams(beta=0.9, t0=20, adaptive=adaptive)
    _, ecube = pc.emulate_events(cube, prm)
    want = oracle_events(bits, None, 0.9, 20,
                         adaptive=(adaptive.slope, adaptive.intercept,
                                   adaptive.tau_min, adaptive.tau_max))
    assert np.array_equal(ecube.dense(), want)
    assert want.any()


def test_adaptive_threshold_map_is_clipped_linear():
    a = pc.AdaptiveThreshold.variance_range(0.1, 0.5)
    mu = np.array([0.0, 0.5, 1.0])
    # variance 0 -> tau_min, variance 0.25 -> tau_max
    assert np.allclose(a.tau_map(mu), [0.1, 0.5, 0.1])
    tight = pc.AdaptiveThreshold(slope=10.0, intercept=0.0, tau_min=0.2, tau_max=0.4)
    assert np.allclose(tight.tau_map(np.array([0.0, 0.5])), [0.2, 0.4])
    with pytest.raises(ValueError):
        pc.AdaptiveThreshold(1.0, 0.0, tau_min=0.0, tau_max=0.5)


def test_stream_ordering_and_uniqueness():
    cube, _ = _cube(seed=23)
    stream, ecube = pc.emulate_events(cube, pc.EventParams(tau=0.12, beta=0.9, t0=20))
    assert len(stream) > 0
    assert (np.diff(stream.t.astype(np.int64)) >= 0).all()
    # raster order within each plane, at most one event per pixel per plane
    key = stream.t.astype(np.int64) * 10_000 + stream.y.astype(np.int64) * 100 + stream.x
    assert (np.diff(key) > 0).all()
    assert len(stream) == np.count_nonzero(ecube.dense())
    assert (stream.t >= 20).all()         # nothing during warmup


def test_no_events_without_change():
    # all-zero scene: the average never leaves the reference
    zeros = pc.PhotonCube.from_bits(np.zeros((200, 3, 3), dtype=np.uint8))
    stream, _ = pc.emulate_events(zeros, pc.EventParams(tau=0.2, beta=0.95, t0=40))
    assert len(stream) == 0
    # all-one scene with warmup long enough for the average to settle
    ones = pc.PhotonCube.from_bits(np.ones((400, 3, 3), dtype=np.uint8))
    stream, _ = pc.emulate_events(ones, pc.EventParams(tau=0.2, beta=0.9, t0=200))
    assert len(stream) == 0


def test_step_response_first_event_and_polarity():
    T, t0, t_step = 256, 32, 100
    bits = np.zeros((T, 2, 2), dtype=np.uint8)
    bits[t_step:] = 1
    cube = pc.PhotonCube.from_bits(bits)
    for beta, tau in ((0.9, 0.3), (0.95, 0.4)):
        stream, _ = pc.emulate_events(cube, pc.EventParams(tau=tau, beta=beta, t0=t0))
        assert int(stream.t.min()) == first_event_plane(beta, tau, t_step)
        assert (stream.p[stream.t == stream.t.min()] == 1).all()
    # downward step gives negative polarity
    down = np.ones((T, 2, 2), dtype=np.uint8)
    down[t_step:] = 0
    stream, _ = pc.emulate_events(pc.PhotonCube.from_bits(down),
                                  pc.EventParams(tau=0.3, beta=0.9, t0=64))
    first = stream.t.min()
    assert (stream.p[stream.t == first] == -1).all()


def test_ref_update_modes_differ_on_long_drift():
    # slow ramp: additive references climb in tau steps, resync tracks faster
    T = 600
    bits = np.zeros((T, 1, 1), dtype=np.uint8)
    rng = np.random.default_rng(0)
    ramp = np.linspace(0, 1, T)
    bits[:, 0, 0] = rng.random(T) < ramp
    cube = pc.PhotonCube.from_bits(bits)
    add, _ = pc.emulate_events(cube, pc.EventParams(tau=0.15, beta=0.97, t0=50))
    res, _ = pc.emulate_events(cube, pc.EventParams(tau=0.15, beta=0.97, t0=50,
                                                    ref_update="resync"))
    assert len(add) != len(res)


def test_accumulate_frame_sums_polarities_over_range():
    stream = pc.EventStream(t=[2, 5, 5, 9], y=[0, 0, 1, 0], x=[0, 0, 1, 0],
                            p=[1, 1, -1, 1], dims=(10, 2, 2))
    total = pc.accumulate_frame(stream)
    assert total.values.tolist() == [[3.0, 0.0], [0.0, -1.0]]
    windowed = pc.accumulate_frame(stream, 3, 9)
    assert windowed.values.tolist() == [[1.0, 0.0], [0.0, -1.0]]
    with pytest.raises(ValueError):
        pc.accumulate_frame(stream, 9, 3)


def test_voxel_grid_matches_oracle_and_conserves_mass():
    cube, _ = _cube(seed=24)
    stream, _ = pc.emulate_events(cube, pc.EventParams(tau=0.12, beta=0.9, t0=20))
    assert len(stream) > 4
    for bins in (1, 3, 8):
        grid = pc.voxel_grid(stream, bins)
        want = oracle_voxel(stream.t, stream.y, stream.x, stream.p,
                            stream.dims, bins)
        assert np.allclose(grid, want, rtol=0, atol=1e-12)
        assert grid.sum() == pytest.approx(stream.p.astype(np.float64).sum())


def test_voxel_grid_hand_case_and_edge_cases():
    stream = pc.EventStream(t=[0, 2, 10], y=[0, 0, 0], x=[0, 0, 0],
                            p=[1, 1, 1], dims=(11, 1, 1))
    # bin centers at t = 0, 5, 10; t=2 splits 0.6/0.4 between bins 0 and 1
    grid = pc.voxel_grid(stream, 3)
    assert grid[:, 0, 0].tolist() == [1.6, 0.4, 1.0]
    # degenerate range: everything lands in bin 0
    one = pc.EventStream(t=[4, 4], y=[0, 0], x=[0, 0], p=[1, -1], dims=(5, 1, 1))
    assert pc.voxel_grid(one, 4)[:, 0, 0].tolist() == [0.0, 0.0, 0.0, 0.0]
    empty = pc.EventStream(t=[], y=[], x=[], p=[], dims=(5, 1, 1))
    assert pc.voxel_grid(empty, 2).shape == (2, 1, 1)
    with pytest.raises(ValueError):
        pc.voxel_grid(one, 0)


def test_event_stack_matches_independent_runs():
    cube, _ = _cube(seed=25)
    taus = [0.08, 0.15, 0.3]
    prm = pc.EventParams(tau=1.0, beta=0.9, t0=20)
    stack = pc.event_stack(cube, taus, prm)
    for tau, ecube in zip(taus, stack):
        _, single = pc.emulate_events(cube, pc.EventParams(tau=tau, beta=0.9, t0=20))
        assert np.array_equal(ecube.dense(), single.dense())
    with pytest.raises(ValueError, match="increasing"):
        pc.event_stack(cube, [0.3, 0.2], prm)
    with pytest.raises(ValueError, match="adaptive"):
        pc.event_stack(cube, [0.1], pc.EventParams(
            beta=0.9, t0=20, adaptive=pc.AdaptiveThreshold.variance_range(0.1, 0.2)))


def test_event_containers_round_trip():
    cube, _ = _cube(seed=26)
    stream, ecube = pc.emulate_events(cube, pc.EventParams(tau=0.12, beta=0.9, t0=20))
    dense = ecube.dense()
    back = pc.EventCube.from_dense(dense).to_stream()
    assert np.array_equal(back.t, stream.t)
    assert np.array_equal(back.y, stream.y)
    assert np.array_equal(back.x, stream.x)
    assert np.array_equal(back.p, stream.p)
    assert np.array_equal(stream.to_cube().dense(), dense)
    with pytest.raises(ValueError):
        pc.EventStream(t=[0], y=[0], x=[0], p=[2], dims=(1, 1, 1))


def test_times_seconds_uses_frame_rate():
    stream = pc.EventStream(t=[100], y=[0], x=[0], p=[1], dims=(200, 1, 1),
                            frame_rate=100_000.0)
    assert stream.times_seconds()[0] == pytest.approx(1e-3)
    bare = pc.EventStream(t=[100], y=[0], x=[0], p=[1], dims=(200, 1, 1))
    with pytest.raises(ValueError):
        bare.times_seconds()


def test_warmup_must_fit_cube():
    cube, _ = _cube(seed=27, dims=(10, 2, 2))
    with pytest.raises(ValueError, match="warmup"):
        pc.emulate_events(cube, pc.EventParams(tau=0.2, beta=0.9, t0=10))
