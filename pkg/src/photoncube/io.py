"""File formats: .pcube containers, event streams, portable images, flow.

All binary formats are little-endian with fixed 32-byte headers unless a
published format dictates otherwise (16-bit PGM samples are big-endian,
PBM packs MSB-first, PFM rows run bottom-to-top as is conventional).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import PhotonCube, SensorParams

__all__ = [
    "write_pcube", "read_pcube",
    "write_pevt", "read_pevt",
    "write_pgm16", "read_pgm16",
    "write_pfm", "read_pfm",
    "write_pbm", "read_pbm",
    "write_flow", "read_flow",
    "write_trajectory_text", "read_trajectory_text",
    "write_accumulation", "read_config",
]

_CUBE_HDR = struct.Struct("<4sHIIId6x")   # magic, version, H, W, T, frame_rate, pad -> 32 bytes
_CUBE_MAGIC = b"PCUB"
_EVT_MAGIC = b"PEVT"
_EVT_REC = np.dtype([("t", "<u4"), ("x", "<u2"), ("y", "<u2"), ("p", "i1"), ("pad", "u1")])
_FLOW_HDR = struct.Struct("<4sHII")
_FLOW_MAGIC = b"PFLW"


def write_pcube(path, cube: PhotonCube) -> None:
    """Write a bit-packed cube with its 32-byte header."""
    T, H, W = cube.dims
    rate = cube.sensor.frame_rate if cube.sensor is not None else 0.0
    with open(path, "wb") as f:
        f.write(_CUBE_HDR.pack(_CUBE_MAGIC, 1, H, W, T, rate))
        f.write(np.ascontiguousarray(cube.planes).tobytes())


def read_pcube(path, sensor: SensorParams | None = None) -> PhotonCube:
    """Read a .pcube file. ``sensor`` overrides the header-derived default."""
    with open(path, "rb") as f:
        magic, version, H, W, T, rate = _CUBE_HDR.unpack(f.read(_CUBE_HDR.size))
        if magic != _CUBE_MAGIC:
            raise ValueError(f"{path}: not a photon cube file")
        if version != 1:
            raise ValueError(f"{path}: unsupported cube version {version}")
        row_bytes = (W + 7) // 8
        data = np.frombuffer(f.read(T * H * row_bytes), dtype=np.uint8)
    if data.size != T * H * row_bytes:
        raise ValueError(f"{path}: truncated cube payload")
    if sensor is None and rate > 0:
        sensor = SensorParams(frame_rate=rate)
    return PhotonCube(data.reshape(T, H, row_bytes).copy(), (T, H, W), sensor=sensor)


def write_pevt(path, stream) -> None:
    """Write an event stream (plane index, x, y, polarity records)."""
    T, H, W = stream.dims
    rec = np.zeros(len(stream), dtype=_EVT_REC)
    rec["t"] = stream.t
    rec["x"] = stream.x
    rec["y"] = stream.y
    rec["p"] = stream.p
    with open(path, "wb") as f:
        f.write(_CUBE_HDR.pack(_EVT_MAGIC, 1, H, W, T, stream.frame_rate))
        f.write(rec.tobytes())


def read_pevt(path):
    from .events import EventStream
    with open(path, "rb") as f:
        magic, version, H, W, T, rate = _CUBE_HDR.unpack(f.read(_CUBE_HDR.size))
        if magic != _EVT_MAGIC:
            raise ValueError(f"{path}: not an event stream file")
        if version != 1:
            raise ValueError(f"{path}: unsupported event stream version {version}")
        rec = np.frombuffer(f.read(), dtype=_EVT_REC)
    return EventStream(t=rec["t"].astype(np.uint32), y=rec["y"].astype(np.uint16),
                       x=rec["x"].astype(np.uint16), p=rec["p"].astype(np.int8),
                       dims=(T, H, W), frame_rate=rate)


def write_pgm16(path, values: np.ndarray, scale: float | None = None) -> None:
    """Quantize to 16-bit PGM. ``scale`` maps to full range; defaults to max."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("PGM output expects a 2-D array")
    if scale is None:
        scale = float(v.max()) if v.size and v.max() > 0 else 1.0
    q = np.rint(np.clip(v / scale, 0.0, 1.0) * 65535).astype(">u2")
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n65535\n" % (v.shape[1], v.shape[0]))
        f.write(q.tobytes())


def read_pgm16(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM")
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(int(data[pos:end]))
        pos = end
    w, h, maxval = fields
    pos += 1
    dt = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(data, dtype=dt, count=w * h, offset=pos).reshape(h, w).astype(np.uint16)


def write_pfm(path, values: np.ndarray) -> None:
    """Write a grayscale PFM (float32, little-endian, bottom-to-top rows)."""
    v = np.asarray(values, dtype=np.float32)
    if v.ndim != 2:
        raise ValueError("PFM output expects a 2-D array")
    with open(path, "wb") as f:
        f.write(b"Pf\n%d %d\n-1.0\n" % (v.shape[1], v.shape[0]))
        f.write(np.flipud(v).astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        if f.readline().strip() != b"Pf":
            raise ValueError(f"{path}: not a grayscale PFM")
        w, h = map(int, f.readline().split())
        scale = float(f.readline())
        dt = "<f4" if scale < 0 else ">f4"
        a = np.frombuffer(f.read(w * h * 4), dtype=dt).reshape(h, w)
    return np.flipud(a).astype(np.float64)


def write_pbm(path, mask: np.ndarray) -> None:
    """Write a bitmap (P4); ones mark dynamic/selected pixels."""
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError("PBM output expects a 2-D mask")
    packed = np.packbits(m.astype(np.uint8), axis=-1)   # MSB first per PBM
    with open(path, "wb") as f:
        f.write(b"P4\n%d %d\n" % (m.shape[1], m.shape[0]))
        f.write(packed.tobytes())


def read_pbm(path) -> np.ndarray:
    with open(path, "rb") as f:
        if f.readline().strip() != b"P4":
            raise ValueError(f"{path}: not a binary PBM")
        w, h = map(int, f.readline().split())
        raw = np.frombuffer(f.read(), dtype=np.uint8).reshape(h, (w + 7) // 8)
    return np.unpackbits(raw, axis=-1, count=w).astype(bool)


def write_flow(path, flow: np.ndarray) -> None:
    """Write an (H, W, 2) float32 flow field, components (dx, dy) in pixels."""
    fl = np.asarray(flow, dtype=np.float32)
    if fl.ndim != 3 or fl.shape[2] != 2:
        raise ValueError("flow must be (H, W, 2)")
    with open(path, "wb") as f:
        f.write(_FLOW_HDR.pack(_FLOW_MAGIC, 1, fl.shape[0], fl.shape[1]))
        f.write(fl.astype("<f4").tobytes())


def read_flow(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, version, H, W = _FLOW_HDR.unpack(f.read(_FLOW_HDR.size))
        if magic != _FLOW_MAGIC:
            raise ValueError(f"{path}: not a flow file")
        a = np.frombuffer(f.read(H * W * 2 * 4), dtype="<f4")
    if a.size != H * W * 2:
        raise ValueError(f"{path}: truncated flow payload")
    return a.reshape(H, W, 2).astype(np.float64)


def write_trajectory_text(path, traj) -> None:
    """Plain text per-plane shifts: one "t dx dy" line per plane."""
    with open(path, "w") as f:
        f.write("# t dx dy\n")
        for t, (dx, dy) in enumerate(traj.shifts):
            f.write(f"{t} {int(dx)} {int(dy)}\n")


def read_trajectory_text(path):
    from .motion import Trajectory
    shifts = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            t, dx, dy = line.split()
            if int(t) != len(shifts):
                raise ValueError(f"{path}: trajectory planes must be consecutive from 0")
            shifts.append((int(dx), int(dy)))
    if not shifts:
        raise ValueError(f"{path}: empty trajectory")
    return Trajectory(np.asarray(shifts, dtype=np.int64), kind="custom")


def write_accumulation(base_path, values: np.ndarray, scale: float | None = None) -> list[Path]:
    """Write a signed accumulation as base.pfm plus _pos/_neg 16-bit PGMs."""
    base = Path(base_path)
    v = np.asarray(values, dtype=np.float64)
    paths = [base.with_suffix(".pfm"),
             base.parent / (base.stem + "_pos.pgm"),
             base.parent / (base.stem + "_neg.pgm")]
    write_pfm(paths[0], v)
    mag = float(np.abs(v).max()) if v.size else 0.0
    s = scale if scale is not None else (mag if mag > 0 else 1.0)
    write_pgm16(paths[1], np.maximum(v, 0.0), scale=s)
    write_pgm16(paths[2], np.maximum(-v, 0.0), scale=s)
    return paths


def read_config(path) -> dict[str, str]:
    """Parse a plain key=value config file. '#' starts a comment line."""
    out: dict[str, str] = {}
    with open(path) as f:
        for i, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{i}: expected key=value, got {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out
