"""Binary photon-cube data model and first-order estimators.

A photon cube is a temporal sequence of single-photon binary frames
("bit-planes"). Each pixel of each plane holds one Bernoulli photon
detection. Planes are stored bit-packed: row-major, least-significant bit
first within each byte, every row padded out to a whole byte with zero
bits. All operations stream over planes so cubes far larger than memory
budgets for unpacked arrays remain workable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SensorParams",
    "FluxVideo",
    "PhotonCube",
    "IntensityImage",
    "HotPixelMask",
    "SumAccumulator",
    "detection_probability",
    "sample_photon_cube",
    "sum_image",
    "flux_mle",
    "detect_hot_pixels",
    "inpaint_mask",
    "pack_plane",
    "unpack_plane",
]


@dataclass(frozen=True)
class SensorParams:
    """Operating point of a single-photon binary sensor.

    Parameters
    ----------
    eta : float
        Photon detection efficiency, in (0, 1].
    r_q : float
        Dark count rate in counts/second, >= 0.
    w_exp : float
        Per-plane exposure time in seconds. Must not exceed the plane
        period 1/frame_rate. Pass ``None`` to use the full plane period.
    frame_rate : float
        Bit-plane rate in Hz.
    """

    eta: float = 1.0
    r_q: float = 0.0
    w_exp: float | None = None
    frame_rate: float = 100_000.0

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.r_q < 0.0:
            raise ValueError(f"dark count rate must be >= 0, got {self.r_q}")
        if self.frame_rate <= 0.0:
            raise ValueError(f"frame_rate must be > 0, got {self.frame_rate}")
        if self.w_exp is None:
            object.__setattr__(self, "w_exp", 1.0 / self.frame_rate)
        if self.w_exp <= 0.0:
            raise ValueError(f"exposure must be > 0, got {self.w_exp}")
        # allow exact equality with the plane period up to float fuzz
        if self.w_exp > (1.0 / self.frame_rate) * (1.0 + 1e-12):
            raise ValueError(
                f"exposure {self.w_exp} exceeds plane period {1.0 / self.frame_rate}"
            )


@dataclass
class FluxVideo:
    """Scene flux in photons/second, one frame per bit-plane interval.

    ``frames`` has shape (T, H, W), finite and non-negative.
    """

    frames: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or 0 in self.frames.shape:
            raise ValueError(f"flux video must be (T, H, W) with no zero dim, got {self.frames.shape}")
        if not np.isfinite(self.frames).all():
            raise ValueError("flux video contains non-finite values")
        if (self.frames < 0).any():
            raise ValueError("flux video contains negative values")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.frames.shape


def pack_plane(bits: np.ndarray) -> np.ndarray:
    """Pack a (..., H, W) 0/1 array into (..., H, ceil(W/8)) bytes, LSB first."""
    return np.packbits(bits.astype(np.uint8, copy=False), axis=-1, bitorder="little")


def unpack_plane(packed: np.ndarray, width: int) -> np.ndarray:
    """Inverse of :func:`pack_plane` for row width ``width``."""
    return np.unpackbits(packed, axis=-1, count=width, bitorder="little")


def _row_pad_mask(width: int) -> int:
    """Bit mask of the valid bits in the last byte of a packed row."""
    rem = width % 8
    return 0xFF if rem == 0 else (1 << rem) - 1


class PhotonCube:
    """Bit-packed sequence of binary photon frames.

    Attributes
    ----------
    planes : np.ndarray
        (T, H, ceil(W/8)) uint8. Row-major, LSB-first in each byte, rows
        padded to byte boundaries with zero bits.
    dims : tuple
        (T, H, W) logical dimensions.
    sensor : SensorParams or None
        Operating point the cube was captured with, if known.
    """

    def __init__(self, planes: np.ndarray, dims: tuple[int, int, int],
                 sensor: SensorParams | None = None, validate: bool = True):
        planes = np.asarray(planes, dtype=np.uint8)
        T, H, W = dims
        if T < 1 or H < 1 or W < 1:
            raise ValueError(f"cube dims must be positive, got {dims}")
        row_bytes = (W + 7) // 8
        if planes.shape != (T, H, row_bytes):
            raise ValueError(f"packed planes shape {planes.shape} does not match dims {dims}")
        if validate and W % 8 != 0:
            if (planes[..., -1] & ~np.uint8(_row_pad_mask(W))).any():
                raise ValueError("padding bits beyond row width must be zero")
        self.planes = planes
        self.dims = (int(T), int(H), int(W))
        self.sensor = sensor

    @classmethod
    def from_bits(cls, bits: np.ndarray, sensor: SensorParams | None = None) -> "PhotonCube":
        bits = np.asarray(bits)
        if bits.ndim != 3:
            raise ValueError(f"bits must be (T, H, W), got shape {bits.shape}")
        if bits.size and bits.max(initial=0) > 1:
            raise ValueError("bits must be 0/1 valued")
        return cls(pack_plane(bits), bits.shape, sensor=sensor, validate=False)

    @property
    def n_planes(self) -> int:
        return self.dims[0]

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.dims[1], self.dims[2]

    @property
    def row_bytes(self) -> int:
        return (self.dims[2] + 7) // 8

    def plane(self, t: int) -> np.ndarray:
        """Unpacked (H, W) uint8 0/1 view of plane ``t``."""
        T = self.dims[0]
        if not (0 <= t < T):
            raise IndexError(f"plane index {t} out of range [0, {T})")
        return unpack_plane(self.planes[t], self.dims[2])

    def bits(self) -> np.ndarray:
        """Unpack the whole cube to a dense (T, H, W) uint8 array."""
        return unpack_plane(self.planes, self.dims[2])

    def stream(self, start: int = 0, stop: int | None = None, chunk: int = 256):
        """Yield (t0, bits) batches of unpacked planes, bits shaped (n, H, W)."""
        T, _, W = self.dims
        stop = T if stop is None else stop
        if not (0 <= start < stop <= T):
            raise ValueError(f"invalid plane range [{start}, {stop}) for T={T}")
        for t0 in range(start, stop, chunk):
            t1 = min(t0 + chunk, stop)
            yield t0, unpack_plane(self.planes[t0:t1], W)

    def nbytes(self) -> int:
        return self.planes.nbytes


@dataclass
class IntensityImage:
    """Real-valued accumulator image with a presentation bit depth.

    ``bit_depth`` only enters readout/bandwidth accounting and file
    quantization; ``values`` themselves are exact accumulators.
    """

    values: np.ndarray
    bit_depth: int = 12

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"intensity image must be 2-D, got shape {self.values.shape}")
        if self.bit_depth < 1:
            raise ValueError(f"bit_depth must be >= 1, got {self.bit_depth}")


@dataclass
class HotPixelMask:
    """Boolean mask of pixels with pathological dark response."""

    mask: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2:
            raise ValueError("hot pixel mask must be 2-D")

    @property
    def fraction(self) -> float:
        return float(self.mask.mean())


def detection_probability(flux: np.ndarray | float, sensor: SensorParams) -> np.ndarray:
    """Per-plane detection probability 1 - exp(-(eta*flux + r_q) * w_exp)."""
    rate = sensor.eta * np.asarray(flux, dtype=np.float64) + sensor.r_q
    return -np.expm1(-rate * sensor.w_exp)


def _plane_rng(seed: int, t: int) -> np.random.Generator:
    # Counter-based generator keyed per (seed, plane): plane streams are
    # disjoint (2^64 blocks apart), so sampling is order-independent and
    # bit-reproducible across platforms and chunkings.
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, t, 0, 0]))


def sample_photon_cube(flux: FluxVideo | np.ndarray, sensor: SensorParams,
                       seed: int = 0) -> PhotonCube:
    """Draw a photon cube from a flux video under the Bernoulli photon model.

    Each pixel of each plane is an independent Bernoulli draw with
    probability ``1 - exp(-(eta*flux + r_q)*w_exp)``.

    Parameters
    ----------
    flux : FluxVideo or (T, H, W) array
        Scene flux in photons/second.
    sensor : SensorParams
    seed : int
        Base key for the counter-based generator. Identical
        (flux, sensor, seed) triples give bit-identical cubes.
    """
    if not isinstance(flux, FluxVideo):
        flux = FluxVideo(flux)
    T, H, W = flux.dims
    p = detection_probability(flux.frames, sensor)
    planes = np.empty((T, H, (W + 7) // 8), dtype=np.uint8)
    for t in range(T):
        u = _plane_rng(seed, t).random((H, W))
        planes[t] = pack_plane(u < p[t])
    return PhotonCube(planes, (T, H, W), sensor=sensor, validate=False)


class SumAccumulator:
    """Streaming per-pixel count of ones over a half-open plane range."""

    def __init__(self, dims: tuple[int, int, int], t_start: int = 0, t_end: int | None = None):
        T, H, W = dims
        t_end = T if t_end is None else t_end
        if not (0 <= t_start < t_end <= T):
            raise ValueError(f"invalid plane range [{t_start}, {t_end}) for T={T}")
        self.t_start, self.t_end = t_start, t_end
        self.counts = np.zeros((H, W), dtype=np.uint32)

    def feed(self, t0: int, bits: np.ndarray) -> None:
        n = bits.shape[0]
        lo = max(self.t_start, t0)
        hi = min(self.t_end, t0 + n)
        if lo < hi:
            self.counts += bits[lo - t0:hi - t0].sum(axis=0, dtype=np.uint32)

    def result(self, bit_depth: int = 12) -> IntensityImage:
        return IntensityImage(self.counts.astype(np.float64), bit_depth=bit_depth)


def sum_image(cube: PhotonCube, t_start: int = 0, t_end: int | None = None) -> IntensityImage:
    """Per-pixel count of detections over planes [t_start, t_end).

    Equivalent to an on-sensor long exposure read out once per range.
    """
    acc = SumAccumulator(cube.dims, t_start, t_end)
    for t0, bits in cube.stream(start=acc.t_start, stop=acc.t_end):
        acc.feed(t0, bits)
    return acc.result()


def flux_mle(sum_img: IntensityImage, n_planes: int, sensor: SensorParams) -> IntensityImage:
    """Maximum-likelihood flux estimate from a sum image.

    Inverts the Bernoulli detection model per pixel. Saturated pixels
    (count == n_planes) map to +inf, which callers should treat as a
    sentinel rather than a flux value.
    """
    if n_planes < 1:
        raise ValueError("n_planes must be >= 1")
    counts = sum_img.values
    if (counts < 0).any() or (counts > n_planes).any():
        raise ValueError("sum image counts must lie in [0, n_planes]")
    p = counts / float(n_planes)
    with np.errstate(divide="ignore"):
        est = (-np.log1p(-p) / sensor.w_exp - sensor.r_q) / sensor.eta
    return IntensityImage(est, bit_depth=sum_img.bit_depth)


def detect_hot_pixels(dark_cube: PhotonCube, threshold: float = 0.5) -> HotPixelMask:
    """Flag pixels whose dark firing rate exceeds ``threshold``.

    ``dark_cube`` should be captured (or synthesized) with no incident
    flux so the per-pixel mean bit value estimates the dark count
    response alone.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    mean = sum_image(dark_cube).values / float(dark_cube.n_planes)
    return HotPixelMask(mean > threshold)


def inpaint_mask(image: IntensityImage | np.ndarray, hot: HotPixelMask | np.ndarray) -> IntensityImage:
    """Replace masked pixels with the mean of their unmasked 8-neighbors.

    Pixels with no unmasked neighbor are resolved by iterating: a pass
    fills every unknown pixel that has at least one already-known
    neighbor, using only values known strictly before that pass, until
    no unknown pixels remain.
    """
    img = image.values if isinstance(image, IntensityImage) else np.asarray(image, dtype=np.float64)
    bit_depth = image.bit_depth if isinstance(image, IntensityImage) else 12
    mask = hot.mask if isinstance(hot, HotPixelMask) else np.asarray(hot, dtype=bool)
    if img.shape != mask.shape:
        raise ValueError(f"image shape {img.shape} does not match mask shape {mask.shape}")
    if mask.all():
        raise ValueError("cannot inpaint a fully masked image")

    out = img.copy()
    known = ~mask
    out[mask] = 0.0
    while not known.all():
        wsum = _neighbor_sum(np.where(known, out, 0.0))
        wcnt = _neighbor_sum(known.astype(np.float64))
        fill = ~known & (wcnt > 0)
        # 8-connected grids always expose a new front while unknowns remain
        out[fill] = wsum[fill] / wcnt[fill]
        known |= fill
    return IntensityImage(out, bit_depth=bit_depth)


def _neighbor_sum(a: np.ndarray) -> np.ndarray:
    """Sum of the 8-neighborhood of each pixel (zero outside the frame)."""
    p = np.pad(a, 1)
    return (p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
            + p[1:-1, :-2] + p[1:-1, 2:]
            + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:])
