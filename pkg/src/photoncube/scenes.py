"""Synthetic flux scenes for tests, demos, and the CLI."""

from __future__ import annotations

import numpy as np

from .core import FluxVideo, PhotonCube

__all__ = [
    "constant_scene", "ramp_scene", "moving_dot_scene", "moving_square_scene",
    "delta_track_cube",
]


def constant_scene(dims: tuple[int, int, int], flux: float) -> FluxVideo:
    """Uniform static flux (photons/s) everywhere."""
    T, H, W = dims
    return FluxVideo(np.full((T, H, W), float(flux)))


def ramp_scene(dims: tuple[int, int, int], max_flux: float, axis: str = "x") -> FluxVideo:
    """Static linear flux ramp from 0 to max_flux along x or y."""
    T, H, W = dims
    if axis == "x":
        row = np.linspace(0.0, max_flux, W)
        frame = np.broadcast_to(row, (H, W))
    elif axis == "y":
        col = np.linspace(0.0, max_flux, H)[:, None]
        frame = np.broadcast_to(col, (H, W))
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return FluxVideo(np.broadcast_to(frame, (T, H, W)).copy())


def _track(dims, velocity, start):
    """Integer positions (x, y) per plane, round-half-even, vertex at T//2."""
    T, H, W = dims
    vx, vy = velocity
    x0, y0 = (W / 2.0, H / 2.0) if start is None else start
    t = np.arange(T) - T // 2
    xs = np.rint(x0 + vx * t).astype(np.int64)
    ys = np.rint(y0 + vy * t).astype(np.int64)
    return xs, ys


def moving_dot_scene(dims, flux, velocity=(1.0, 0.0), start=None,
                     background: float = 0.0) -> FluxVideo:
    """Single bright pixel translating at constant velocity (px/plane).

    The dot is drawn only while inside the frame; the rest of the frame
    holds ``background`` flux.
    """
    T, H, W = dims
    frames = np.full((T, H, W), float(background))
    xs, ys = _track(dims, velocity, start)
    for t in range(T):
        if 0 <= ys[t] < H and 0 <= xs[t] < W:
            frames[t, ys[t], xs[t]] = flux
    return FluxVideo(frames)


def moving_square_scene(dims, flux, size: int = 3, velocity=(1.0, 0.0), start=None,
                        background: float = 0.0) -> FluxVideo:
    """Bright size x size square translating at constant velocity (px/plane)."""
    T, H, W = dims
    if size < 1:
        raise ValueError("square size must be >= 1")
    frames = np.full((T, H, W), float(background))
    xs, ys = _track(dims, velocity, start)
    h = size // 2
    for t in range(T):
        y0, y1 = max(0, ys[t] - h), min(H, ys[t] - h + size)
        x0, x1 = max(0, xs[t] - h), min(W, xs[t] - h + size)
        if y0 < y1 and x0 < x1:
            frames[t, y0:y1, x0:x1] = flux
    return FluxVideo(frames)


def delta_track_cube(dims, velocity=(1.0, 0.0), start=None) -> PhotonCube:
    """Noiseless binary cube with a single 1 per plane along a linear track.

    Positions are rounded half-to-even; planes whose position falls
    outside the frame stay empty.
    """
    T, H, W = dims
    bits = np.zeros((T, H, W), dtype=np.uint8)
    xs, ys = _track(dims, velocity, start)
    for t in range(T):
        if 0 <= ys[t] < H and 0 <= xs[t] < W:
            bits[t, ys[t], xs[t]] = 1
    return PhotonCube.from_bits(bits)
