import numpy as np
import pytest

import photoncube as pc
from reference import oracle_buckets, oracle_flutter, oracle_sum, random_bits


def _cube(seed, dims=(48, 6, 11), density=0.4):
    bits = random_bits(dims, seed=seed, density=density)
    return pc.PhotonCube.from_bits(bits), bits


def test_global_code_validation_and_determinism():
    with pytest.raises(ValueError):
        pc.GlobalCode(np.array([0, 2, 1]))
    with pytest.raises(ValueError):
        pc.GlobalCode(np.zeros((2, 2)))
    a = pc.GlobalCode.random(1000, density=0.3, seed=1)
    b = pc.GlobalCode.random(1000, density=0.3, seed=1)
    assert np.array_equal(a.code, b.code)
    assert abs(a.density - 0.3) < 0.05


def test_flutter_matches_oracle_and_degenerate_codes():
    cube, bits = _cube(seed=10)
    code = pc.GlobalCode.random(48, seed=2)
    img = pc.flutter_shutter(cube, code)
    assert np.array_equal(img.values, oracle_flutter(bits, code.code))
    ones = pc.GlobalCode(np.ones(48, dtype=np.uint8))
    assert np.array_equal(pc.flutter_shutter(cube, ones).values, oracle_sum(bits))
    zeros = pc.GlobalCode(np.zeros(48, dtype=np.uint8))
    assert pc.flutter_shutter(cube, zeros).values.sum() == 0
    with pytest.raises(ValueError, match="length"):
        pc.flutter_shutter(cube, pc.GlobalCode(np.ones(47, dtype=np.uint8)))


def test_mask_generation_schemes_have_promised_structure():
    dims = (20, 5, 11)
    single = pc.generate_masks("single-random", dims, seed=3)
    assert single.buckets == 1 and single.scheme == "single-random"

    comp = pc.generate_masks("two-bucket-complement", dims, seed=3)
    b = comp.bits()
    assert (b[0] + b[1] == 1).all()                   # exact partition
    assert np.array_equal(b[0], single.bits()[0])     # same seed, same first bucket
    assert (comp.masks[:, :, :, -1] & ~np.uint8((1 << (11 % 8)) - 1) == 0).all()

    for J in (2, 4, 8):
        hot = pc.generate_masks("multi-bucket-one-hot", dims, buckets=J, seed=4)
        assert (hot.bits().sum(axis=0) == 1).all()    # each bit in exactly one bucket

    with pytest.raises(ValueError):
        pc.generate_masks("single-random", dims, buckets=2)
    with pytest.raises(ValueError):
        pc.generate_masks("multi-bucket-one-hot", dims, buckets=1)
    with pytest.raises(ValueError):
        pc.generate_masks("nope", dims)


def test_quad_scheme_tiles_and_exposure_fractions():
    T = 40
    quad = pc.generate_masks("quad", (T, 4, 6))
    b = quad.bits()
    # pixel (y, x) belongs to bucket tile[y%2][x%2]
    from photoncube.coded import DEFAULT_QUAD_FRACTIONS, DEFAULT_QUAD_TILE
    tile = np.asarray(DEFAULT_QUAD_TILE)
    for y in range(4):
        for x in range(6):
            j = tile[y % 2, x % 2]
            active = b[:, :, y, x].sum(axis=1)
            want = np.zeros(4, dtype=int)
            want[j] = max(1, round(DEFAULT_QUAD_FRACTIONS[j] * T))
            assert active.tolist() == want.tolist()
    # bucket planes are the leading ones
    assert (b[1, : T // 2].sum() > 0) and (b[1, T // 2:].sum() == 0)
    with pytest.raises(ValueError):
        pc.generate_masks("quad", (T, 4, 6), quad_fractions=(1.0, 0.5, 0.25, 0.0))
    with pytest.raises(ValueError):
        pc.generate_masks("quad", (T, 4, 6), quad_tile=((0, 1), (2, 2)))


def test_multi_bucket_capture_matches_oracle():
    cube, bits = _cube(seed=11)
    masks = pc.generate_masks("multi-bucket-one-hot", cube.dims, buckets=4, seed=5)
    caps = pc.multi_bucket_capture(cube, masks)
    want = oracle_buckets(bits, masks.bits())
    for j in range(4):
        assert np.array_equal(caps.images[j].values, want[j])
    assert caps.scheme == "multi-bucket-one-hot"

    with pytest.raises(ValueError, match="dims"):
        pc.BucketAccumulator(masks, (48, 6, 12))


@pytest.mark.parametrize("scheme,J", [("two-bucket-complement", 2),
                                      ("multi-bucket-one-hot", 4)])
def test_partitioning_schemes_reconstruct_sum_image(scheme, J):
    cube, bits = _cube(seed=12)
    masks = pc.generate_masks(scheme, cube.dims, buckets=J, seed=6)
    caps = pc.multi_bucket_capture(cube, masks)
    assert np.array_equal(caps.stack().sum(axis=0), oracle_sum(bits))


def test_mask_save_load_round_trip(tmp_path):
    masks = pc.generate_masks("multi-bucket-one-hot", (12, 3, 9), buckets=3, seed=7)
    paths = masks.save(tmp_path / "m", frame_rate=100_000.0)
    assert [p.name for p in paths] == ["m.bucket0.pcube", "m.bucket1.pcube", "m.bucket2.pcube"]
    back = pc.MaskSequence.load(paths, scheme="multi-bucket-one-hot")
    assert np.array_equal(back.masks, masks.masks)
    assert back.dims == masks.dims


def test_roi_selection_is_topk_by_std_with_raster_ties():
    # large bucket disagreement at exactly one pixel of a 2x2 frame
    vals = np.zeros((2, 2, 2))
    vals[0, 0, 1] = 100.0      # bucket 0 sees 100, bucket 1 sees 0
    caps = pc.BucketCaptures([pc.IntensityImage(v) for v in vals], (2, 2))
    roi = pc.detect_dynamic_roi(caps, percentile=0.75)
    assert roi.mask.sum() == 1 and bool(roi.mask[0, 1])
    assert roi.fraction == pytest.approx(0.25)

    # all-tied statistics resolve in raster order
    flat = pc.BucketCaptures([pc.IntensityImage(np.ones((2, 3)))] * 2, (2, 3))
    roi = pc.detect_dynamic_roi(flat, percentile=0.5)
    assert np.array_equal(roi.mask, np.array([[1, 1, 1], [0, 0, 0]], dtype=bool))

    with pytest.raises(ValueError):
        pc.detect_dynamic_roi(caps, percentile=1.0)


def test_roi_coding_bandwidth_and_static_collapse():
    cube, bits = _cube(seed=13, dims=(32, 8, 8))
    masks = pc.generate_masks("multi-bucket-one-hot", cube.dims, buckets=4, seed=8)
    caps = pc.multi_bucket_capture(cube, masks)
    roi = pc.detect_dynamic_roi(caps, percentile=0.75)
    coded = pc.apply_roi_coding(caps, roi)
    n_roi = int(roi.mask.sum())
    assert n_roi == 16
    assert coded.bandwidth_bits == 12 * (4 * n_roi + 64 - n_roi)
    assert np.array_equal(coded.static_image.values, caps.stack().sum(axis=0))
    assert coded.bucket_values.shape == (n_roi, 4)
    # RoI pixels carry their own bucket values
    stack = caps.stack().reshape(4, -1)
    assert np.array_equal(coded.bucket_values, stack[:, coded.roi_indices].T)
