"""Coded-exposure projections of photon cubes.

Covers temporally coded single captures (flutter shutter), spatially and
temporally coded multi-bucket captures, and dynamic region-of-interest
selection with its readout accounting. Codes and masks are binary; all
capture accumulators are exact integer counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IntensityImage, PhotonCube, pack_plane, unpack_plane

__all__ = [
    "GlobalCode", "MaskSequence", "BucketCaptures", "DynamicRoi", "RoiCoded",
    "FlutterAccumulator", "BucketAccumulator",
    "flutter_shutter", "generate_masks", "multi_bucket_capture",
    "detect_dynamic_roi", "apply_roi_coding",
]

_SCHEMES = ("single-random", "two-bucket-complement", "multi-bucket-one-hot", "quad", "custom")


@dataclass
class GlobalCode:
    """Binary temporal code, one weight per plane, applied to every pixel."""

    code: np.ndarray

    def __post_init__(self):
        self.code = np.asarray(self.code, dtype=np.uint8)
        if self.code.ndim != 1 or self.code.size == 0:
            raise ValueError("code must be a nonempty 1-D array")
        if (self.code > 1).any():
            raise ValueError("code must be 0/1 valued")

    @classmethod
    def random(cls, length: int, density: float = 0.5, seed: int = 0) -> "GlobalCode":
        if not (0.0 <= density <= 1.0):
            raise ValueError(f"density must be in [0, 1], got {density}")
        g = np.random.Generator(np.random.Philox(key=seed))
        return cls((g.random(length) < density).astype(np.uint8))

    @property
    def density(self) -> float:
        return float(self.code.mean())


class FlutterAccumulator:
    """Streaming sum of planes selected by a global temporal code."""

    def __init__(self, code: GlobalCode, dims):
        T, H, W = dims
        if len(code.code) != T:
            raise ValueError(f"code length {len(code.code)} does not match cube planes {T}")
        self.code = code.code
        self.counts = np.zeros((H, W), dtype=np.uint32)

    def feed(self, t0, bits):
        sel = self.code[t0:t0 + bits.shape[0]].astype(bool)
        if sel.any():
            self.counts += bits[sel].sum(axis=0, dtype=np.uint32)

    def result(self, bit_depth: int = 12) -> IntensityImage:
        return IntensityImage(self.counts.astype(np.float64), bit_depth=bit_depth)


def flutter_shutter(cube: PhotonCube, code: GlobalCode) -> IntensityImage:
    """Single coded capture: per-pixel sum of the planes with code 1."""
    acc = FlutterAccumulator(code, cube.dims)
    for t0, bits in cube.stream():
        acc.feed(t0, bits)
    return acc.result()


@dataclass
class MaskSequence:
    """Per-bucket, per-plane, per-pixel binary exposure codes, bit-packed.

    ``masks`` has shape (J, T, H, ceil(W/8)) in the same packed layout as
    cube planes.
    """

    masks: np.ndarray
    dims: tuple[int, int, int]
    scheme: str = "custom"

    def __post_init__(self):
        self.masks = np.asarray(self.masks, dtype=np.uint8)
        T, H, W = self.dims
        if self.masks.ndim != 4 or self.masks.shape[1:] != (T, H, (W + 7) // 8):
            raise ValueError(f"packed masks shape {self.masks.shape} does not match dims {self.dims}")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def buckets(self) -> int:
        return self.masks.shape[0]

    @classmethod
    def from_bits(cls, bits: np.ndarray, scheme: str = "custom") -> "MaskSequence":
        bits = np.asarray(bits)
        if bits.ndim != 4:
            raise ValueError("mask bits must be (J, T, H, W)")
        return cls(pack_plane(bits), bits.shape[1:], scheme=scheme)

    def bits(self) -> np.ndarray:
        return unpack_plane(self.masks, self.dims[2])

    def bucket_plane(self, j: int, t: int) -> np.ndarray:
        return unpack_plane(self.masks[j, t], self.dims[2])

    def save(self, base_path, frame_rate: float = 0.0) -> list:
        """One .pcube container per bucket: <base>.bucket<j>.pcube."""
        from .core import PhotonCube, SensorParams
        from .io import write_pcube
        from pathlib import Path
        base = Path(base_path)
        sensor = SensorParams(frame_rate=frame_rate) if frame_rate > 0 else None
        paths = []
        for j in range(self.buckets):
            p = base.parent / f"{base.name}.bucket{j}.pcube"
            write_pcube(p, PhotonCube(self.masks[j], self.dims, sensor=sensor, validate=False))
            paths.append(p)
        return paths

    @classmethod
    def load(cls, paths, scheme: str = "custom") -> "MaskSequence":
        from .io import read_pcube
        cubes = [read_pcube(p) for p in paths]
        dims = cubes[0].dims
        if any(c.dims != dims for c in cubes):
            raise ValueError("bucket files disagree on dimensions")
        return cls(np.stack([c.planes for c in cubes]), dims, scheme=scheme)


def _mask_rng(seed: int, t: int) -> np.random.Generator:
    # same counter discipline as the cube sampler, separate key stream
    return np.random.Generator(np.random.Philox(key=(seed << 1) + 1, counter=[0, t, 0, 0]))


DEFAULT_QUAD_TILE = ((0, 1), (2, 3))
DEFAULT_QUAD_FRACTIONS = (1.0, 0.5, 0.25, 0.125)


def generate_masks(scheme: str, dims: tuple[int, int, int], buckets: int | None = None,
                   seed: int = 0, quad_tile=DEFAULT_QUAD_TILE,
                   quad_fractions=DEFAULT_QUAD_FRACTIONS) -> MaskSequence:
    """Build a mask sequence for one of the stock schemes.

    Schemes
    -------
    single-random
        One bucket, each (plane, pixel) bit Bernoulli(0.5).
    two-bucket-complement
        Two buckets; the second is the bitwise complement of the first,
        so every photon lands in exactly one bucket.
    multi-bucket-one-hot
        ``buckets`` >= 2 buckets; each (plane, pixel) routes to exactly
        one bucket drawn uniformly.
    quad
        Four buckets from a fixed 2x2 pixel tile; the bucket of a pixel
        integrates the leading fraction of planes given by
        ``quad_fractions`` (an exposure bracket). ``quad_tile`` assigns
        bucket ids to tile positions.
    """
    T, H, W = dims
    if T < 1 or H < 1 or W < 1:
        raise ValueError(f"mask dims must be positive, got {dims}")
    if scheme == "single-random":
        if buckets not in (None, 1):
            raise ValueError("single-random uses exactly 1 bucket")
        planes = np.empty((1, T, H, (W + 7) // 8), dtype=np.uint8)
        for t in range(T):
            planes[0, t] = pack_plane(_mask_rng(seed, t).random((H, W)) < 0.5)
        return MaskSequence(planes, dims, scheme=scheme)
    if scheme == "two-bucket-complement":
        if buckets not in (None, 2):
            raise ValueError("two-bucket-complement uses exactly 2 buckets")
        first = generate_masks("single-random", dims, seed=seed).masks[0]
        comp = np.invert(first)
        if W % 8 != 0:     # keep padding bits zero after complement
            comp[..., -1] &= np.uint8((1 << (W % 8)) - 1)
        return MaskSequence(np.stack([first, comp]), dims, scheme=scheme)
    if scheme == "multi-bucket-one-hot":
        J = 4 if buckets is None else buckets
        if J < 2:
            raise ValueError("multi-bucket-one-hot needs >= 2 buckets")
        planes = np.empty((J, T, H, (W + 7) // 8), dtype=np.uint8)
        for t in range(T):
            choice = _mask_rng(seed, t).integers(0, J, size=(H, W))
            for j in range(J):
                planes[j, t] = pack_plane(choice == j)
        return MaskSequence(planes, dims, scheme=scheme)
    if scheme == "quad":
        if buckets not in (None, 4):
            raise ValueError("quad uses exactly 4 buckets")
        tile = np.asarray(quad_tile, dtype=np.int64)
        if tile.shape != (2, 2) or sorted(tile.ravel().tolist()) != [0, 1, 2, 3]:
            raise ValueError("quad tile must be a 2x2 assignment of buckets 0..3")
        if len(quad_fractions) != 4 or not all(0 < f <= 1 for f in quad_fractions):
            raise ValueError("quad fractions must be four values in (0, 1]")
        phase = tile[np.arange(H)[:, None] % 2, np.arange(W)[None, :] % 2]
        planes = np.zeros((4, T, H, (W + 7) // 8), dtype=np.uint8)
        for j in range(4):
            n = max(1, int(round(quad_fractions[j] * T)))
            packed = pack_plane(phase == j)
            planes[j, :n] = packed
        return MaskSequence(planes, dims, scheme=scheme)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass
class BucketCaptures:
    """J simultaneous coded captures of one cube."""

    images: list
    dims: tuple[int, int]
    scheme: str = "custom"

    def __post_init__(self):
        if not self.images:
            raise ValueError("bucket captures need at least one image")
        for im in self.images:
            if im.values.shape != tuple(self.dims):
                raise ValueError("bucket image shape does not match dims")

    @property
    def buckets(self) -> int:
        return len(self.images)

    def stack(self) -> np.ndarray:
        return np.stack([im.values for im in self.images])


class BucketAccumulator:
    """Streaming multi-bucket capture: per bucket, sum of masked bits."""

    def __init__(self, masks: MaskSequence, dims):
        if tuple(masks.dims) != tuple(dims):
            raise ValueError(f"mask dims {masks.dims} do not match cube dims {dims}")
        self.masks = masks
        T, H, W = dims
        self.counts = np.zeros((masks.buckets, H, W), dtype=np.uint32)

    def feed(self, t0, bits):
        t1 = t0 + bits.shape[0]
        W = self.masks.dims[2]
        mbits = unpack_plane(self.masks.masks[:, t0:t1], W)
        self.counts += (mbits & bits[None]).sum(axis=1, dtype=np.uint32)

    def result(self, bit_depth: int = 12) -> BucketCaptures:
        images = [IntensityImage(c.astype(np.float64), bit_depth=bit_depth) for c in self.counts]
        return BucketCaptures(images, self.counts.shape[1:], scheme=self.masks.scheme)


def multi_bucket_capture(cube: PhotonCube, masks: MaskSequence) -> BucketCaptures:
    """Accumulate each bucket's masked photon counts in one pass."""
    acc = BucketAccumulator(masks, cube.dims)
    for t0, bits in cube.stream():
        acc.feed(t0, bits)
    return acc.result()


@dataclass
class DynamicRoi:
    """Dynamic region of interest derived from bucket disagreement."""

    mask: np.ndarray
    percentile: float
    stat: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.stat.shape:
            raise ValueError("RoI mask and stat image must agree in shape")

    @property
    def fraction(self) -> float:
        return float(self.mask.mean())


def detect_dynamic_roi(captures: BucketCaptures, percentile: float = 0.75) -> DynamicRoi:
    """Mark the pixels whose buckets disagree most as dynamic.

    The per-pixel statistic is the population standard deviation across
    bucket values. Selection is deterministic top-k with
    k = H*W - ceil(percentile * H*W); ties are broken by raster order so
    identical inputs always produce identical regions.
    """
    if not (0.0 < percentile < 1.0):
        raise ValueError(f"percentile must be in (0, 1), got {percentile}")
    stack = captures.stack()
    stds = stack.std(axis=0)
    H, W = stds.shape
    n = H * W
    k = n - int(np.ceil(percentile * n))
    mask = np.zeros(n, dtype=bool)
    if k > 0:
        order = np.lexsort((np.arange(n), -stds.ravel()))
        mask[order[:k]] = True
    return DynamicRoi(mask.reshape(H, W), percentile, stds)


@dataclass
class RoiCoded:
    """Bucket readout restricted to a dynamic region.

    Inside the region all bucket values are kept per pixel; outside, the
    buckets collapse to the summed long exposure. ``bandwidth_bits``
    counts the resulting readout payload.
    """

    roi_indices: np.ndarray
    bucket_values: np.ndarray
    static_image: IntensityImage
    bandwidth_bits: int
    roi: DynamicRoi


def apply_roi_coding(captures: BucketCaptures, roi: DynamicRoi,
                     bit_depth: int | None = None) -> RoiCoded:
    """Split a multi-bucket capture into coded (RoI) and static readouts."""
    stack = captures.stack()
    J, H, W = stack.shape
    if roi.mask.shape != (H, W):
        raise ValueError(f"RoI shape {roi.mask.shape} does not match captures {(H, W)}")
    depth = captures.images[0].bit_depth if bit_depth is None else bit_depth
    flat = roi.mask.ravel()
    idx = np.nonzero(flat)[0]
    values = stack.reshape(J, -1)[:, idx].T.copy()
    static = IntensityImage(stack.sum(axis=0), bit_depth=depth)
    n_roi = idx.size
    bandwidth_bits = depth * (J * n_roi + (H * W - n_roi))
    return RoiCoded(idx, values, static, int(bandwidth_bits), roi)
