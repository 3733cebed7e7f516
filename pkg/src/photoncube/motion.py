"""Motion-compensated projections: shift-and-accumulate along trajectories.

A trajectory assigns each plane an integer pixel shift. Projecting a cube
along it sums, per output pixel, the bits found at the shifted source
location, skipping out-of-bounds (and optionally hot) accesses, then
normalizes by the number of valid accesses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import HotPixelMask, IntensityImage, PhotonCube

__all__ = [
    "Trajectory", "ShiftImage", "MotionStack", "MotionAccumulator",
    "make_linear_trajectory", "make_parabolic_trajectory",
    "motion_project", "extract_psf", "motion_stack", "blend_stack",
]


@dataclass
class Trajectory:
    """Per-plane integer shifts, columns (dx, dy)."""

    shifts: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.shifts = np.asarray(self.shifts, dtype=np.int64)
        if self.shifts.ndim != 2 or self.shifts.shape[1] != 2 or self.shifts.shape[0] < 1:
            raise ValueError(f"shifts must be (T, 2), got {self.shifts.shape}")

    @property
    def n_planes(self) -> int:
        return self.shifts.shape[0]

    def max_abs_shift(self) -> int:
        return int(np.abs(self.shifts).max())


def _unit(direction) -> np.ndarray:
    d = np.asarray(direction, dtype=np.float64)
    if d.shape != (2,) or not np.isfinite(d).all() or not d.any():
        raise ValueError(f"direction must be a nonzero 2-vector (dx, dy), got {direction!r}")
    return d / np.hypot(d[0], d[1])


def make_linear_trajectory(v: float, direction, n_planes: int) -> Trajectory:
    """Constant-velocity compensation, v in px/plane along ``direction``.

    r(t) = v * (t - T//2) * unit(direction), rounded half-to-even, so the
    shift is exactly zero at the middle plane. An object translating at
    +v px/plane along the direction is stationary in the projection.
    """
    if n_planes < 1:
        raise ValueError("trajectory needs at least one plane")
    u = _unit(direction)
    t = np.arange(n_planes, dtype=np.float64) - (n_planes // 2)
    shifts = np.rint(np.outer(v * t, u)).astype(np.int64)
    return Trajectory(shifts, kind="linear",
                      params={"v": float(v), "direction": tuple(u)})


def make_parabolic_trajectory(v_max: float, direction, n_planes: int) -> Trajectory:
    """Constant-acceleration sweep covering slopes in [-v_max, v_max].

    r(t) = (v_max / T) * (t - T//2)^2 * unit(direction), rounded
    half-to-even; zero at the vertex (middle plane), max slope ~v_max at
    the ends. Choose v_max comfortably above the fastest scene motion so
    every relevant slope is swept well inside the exposure.
    """
    if n_planes < 1:
        raise ValueError("trajectory needs at least one plane")
    if v_max < 0:
        raise ValueError(f"v_max must be >= 0, got {v_max}")
    u = _unit(direction)
    t = np.arange(n_planes, dtype=np.float64) - (n_planes // 2)
    mag = (v_max / n_planes) * t * t
    shifts = np.rint(np.outer(mag, u)).astype(np.int64)
    return Trajectory(shifts, kind="parabolic",
                      params={"v_max": float(v_max), "direction": tuple(u)})


@dataclass
class ShiftImage:
    """Projection result: normalized values plus per-pixel access counts.

    Pixels with no valid access have value 0 and are flagged by
    ``empty``.
    """

    values: np.ndarray
    counts: np.ndarray

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0


class MotionAccumulator:
    """Streaming shift-and-add along one trajectory."""

    def __init__(self, traj: Trajectory, dims, hot: HotPixelMask | None = None):
        T, H, W = dims
        if traj.n_planes != T:
            raise ValueError(f"trajectory planes {traj.n_planes} do not match cube planes {T}")
        self.traj = traj
        self.acc = np.zeros((H, W), dtype=np.uint32)
        self.n = np.zeros((H, W), dtype=np.uint32)
        self._ok = None
        if hot is not None:
            m = hot.mask if isinstance(hot, HotPixelMask) else np.asarray(hot, dtype=bool)
            if m.shape != (H, W):
                raise ValueError("hot mask shape does not match cube frame")
            self._ok = (~m).astype(np.uint32)

    def feed(self, t0, bits):
        for i in range(bits.shape[0]):
            dx, dy = self.traj.shifts[t0 + i]
            _shift_add(self.acc, self.n, bits[i], int(dx), int(dy), self._ok)

    def result(self) -> ShiftImage:
        with np.errstate(invalid="ignore"):
            values = np.where(self.n > 0, self.acc / np.maximum(self.n, 1), 0.0)
        return ShiftImage(values, self.n.copy())


def _shift_add(acc, n, bits, dx, dy, ok=None):
    """acc[y, x] += bits[y + dy, x + dx] for in-bounds (and not-hot) sources."""
    H, W = acc.shape
    oy0, oy1 = max(0, -dy), min(H, H - dy)
    ox0, ox1 = max(0, -dx), min(W, W - dx)
    if oy0 >= oy1 or ox0 >= ox1:
        return
    src = bits[oy0 + dy:oy1 + dy, ox0 + dx:ox1 + dx]
    if ok is None:
        acc[oy0:oy1, ox0:ox1] += src
        n[oy0:oy1, ox0:ox1] += 1
    else:
        w = ok[oy0 + dy:oy1 + dy, ox0 + dx:ox1 + dx]
        acc[oy0:oy1, ox0:ox1] += src * w
        n[oy0:oy1, ox0:ox1] += w


def motion_project(cube: PhotonCube, traj: Trajectory,
                   hot: HotPixelMask | None = None) -> ShiftImage:
    """Average each pixel's bits along the trajectory's moving frame."""
    acc = MotionAccumulator(traj, cube.dims, hot=hot)
    for t0, bits in cube.stream():
        acc.feed(t0, bits)
    return acc.result()


def extract_psf(traj: Trajectory, frame_shape: tuple[int, int]) -> IntensityImage:
    """Blur kernel of a static point under the trajectory, unit sum.

    Projects a noiseless cube holding a delta at the frame center in
    every plane, then normalizes. Raises if any plane's deposit would
    fall outside the frame (the kernel would be clipped); pick a frame
    with margin at least the maximum shift plus the blur extent.
    """
    H, W = frame_shape
    cy, cx = H // 2, W // 2
    dep_x = cx - traj.shifts[:, 0]
    dep_y = cy - traj.shifts[:, 1]
    if ((dep_x < 0) | (dep_x >= W) | (dep_y < 0) | (dep_y >= H)).any():
        raise ValueError("kernel clipped by frame; enlarge the frame or shorten shifts")
    T = traj.n_planes
    bits = np.zeros((T, H, W), dtype=np.uint8)
    bits[:, cy, cx] = 1
    proj = motion_project(PhotonCube.from_bits(bits), traj)
    total = proj.values.sum()
    return IntensityImage(proj.values / total)


@dataclass
class MotionStack:
    """Simultaneous projections of one cube along several trajectories."""

    layers: list   # (Trajectory, ShiftImage) pairs

    def __len__(self) -> int:
        return len(self.layers)


def motion_stack(cube: PhotonCube, trajectories,
                 hot: HotPixelMask | None = None) -> MotionStack:
    """Project along every trajectory in a single pass over the planes."""
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("need at least one trajectory")
    accs = [MotionAccumulator(tr, cube.dims, hot=hot) for tr in trajectories]
    for t0, bits in cube.stream():
        for acc in accs:
            acc.feed(t0, bits)
    return MotionStack([(tr, acc.result()) for tr, acc in zip(trajectories, accs)])


def blend_stack(stack: MotionStack, flow: np.ndarray) -> IntensityImage:
    """Per-pixel pick from a stack of linear layers using a flow field.

    All layers must be linear along one common direction. The flow
    (displacement in pixels across the whole cube, (dx, dy) per pixel)
    is projected on that direction and converted to px/plane; each pixel
    takes its value from the layer whose slope is nearest, ties going to
    the smaller slope.
    """
    if len(stack) == 0:
        raise ValueError("empty stack")
    units, slopes = [], []
    for traj, _ in stack.layers:
        if traj.kind != "linear":
            raise ValueError("blending is defined for linear layers only")
        units.append(np.asarray(traj.params["direction"]))
        slopes.append(traj.params["v"])
    u0 = units[0]
    if any(not np.allclose(u, u0) for u in units[1:]):
        raise ValueError("layers must share a common direction")
    n_planes = stack.layers[0][0].n_planes
    H, W = stack.layers[0][1].values.shape
    flow = np.asarray(flow, dtype=np.float64)
    if flow.shape != (H, W, 2):
        raise ValueError(f"flow must be (H, W, 2) matching the stack, got {flow.shape}")

    order = np.argsort(slopes, kind="stable")          # ties resolve to smaller slope
    slopes_sorted = np.asarray(slopes)[order]
    vals = np.stack([stack.layers[i][1].values for i in order])
    proj = (flow[..., 0] * u0[0] + flow[..., 1] * u0[1]) / n_planes
    dist = np.abs(slopes_sorted[:, None, None] - proj[None])
    pick = dist.argmin(axis=0)
    return IntensityImage(np.take_along_axis(vals, pick[None], axis=0)[0])
