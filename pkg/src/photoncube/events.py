"""Event-camera emulation over binary photon planes.

Per pixel, an exponential moving average of the incoming bits tracks
brightness; once warmup ends, a contrast step of more than tau between
the encoded average and an encoded reference emits a signed event and
advances the reference. At most one event per pixel per plane, events
within a plane are ordered raster-wise, the reference is only touched by
events (it never resynchronizes silently).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IntensityImage, PhotonCube, SensorParams

__all__ = [
    "AdaptiveThreshold", "EventParams", "EventStream", "EventCube",
    "EventEmulatorState", "emulate_events", "brightness_encode",
    "accumulate_frame", "voxel_grid", "event_stack",
]

_ENCODINGS = ("identity", "log-mle")
_REF_UPDATES = ("additive", "resync")


@dataclass(frozen=True)
class AdaptiveThreshold:
    """Linear map from per-pixel sample variance to a contrast threshold.

    tau(x) = clip(intercept + slope * var(x), tau_min, tau_max) with
    var(x) = mu(x) * (1 - mu(x)), the Bernoulli variance estimate of the
    running average.
    """

    slope: float
    intercept: float
    tau_min: float
    tau_max: float

    def __post_init__(self):
        if not (0.0 < self.tau_min <= self.tau_max):
            raise ValueError("need 0 < tau_min <= tau_max")

    @classmethod
    def variance_range(cls, tau_min: float, tau_max: float) -> "AdaptiveThreshold":
        """Map the full variance range [0, 0.25] linearly onto [tau_min, tau_max]."""
        return cls(slope=4.0 * (tau_max - tau_min), intercept=tau_min,
                   tau_min=tau_min, tau_max=tau_max)

    def tau_map(self, mu: np.ndarray) -> np.ndarray:
        var = mu * (1.0 - mu)
        return np.clip(self.intercept + self.slope * var, self.tau_min, self.tau_max)


@dataclass(frozen=True)
class EventParams:
    """Emulator settings.

    tau : contrast threshold (ignored when ``adaptive`` is set).
    beta : moving-average decay in (0, 1).
    t0 : warmup planes; the reference tracks the average for planes
         [0, t0) and no events are emitted there.
    encoding : "identity" compares averages directly, "log-mle" compares
         log flux estimates (needs sensor parameters).
    ref_update : "additive" steps the reference by tau * polarity,
         "resync" snaps it to the current encoded value.
    """

    tau: float = 0.4
    beta: float = 0.95
    t0: int = 80
    encoding: str = "identity"
    ref_update: str = "additive"
    adaptive: AdaptiveThreshold | None = None

    def __post_init__(self):
        if self.adaptive is None and not (self.tau > 0.0):
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if self.t0 < 1:
            raise ValueError(f"warmup must be >= 1 plane, got {self.t0}")
        if self.encoding not in _ENCODINGS:
            raise ValueError(f"encoding must be one of {_ENCODINGS}")
        if self.ref_update not in _REF_UPDATES:
            raise ValueError(f"ref_update must be one of {_REF_UPDATES}")


def brightness_encode(mu: np.ndarray, encoding: str = "identity",
                      sensor: SensorParams | None = None) -> np.ndarray:
    """Encode a running average for contrast comparison.

    "identity" returns mu unchanged. "log-mle" returns
    log(-log(1 - mu) / (eta * w_exp)), the log of the flux estimate the
    average implies; mu == 0 maps to -inf and mu == 1 to +inf, both
    documented sentinels.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if encoding == "identity":
        return mu
    if encoding == "log-mle":
        if sensor is None:
            raise ValueError("log-mle encoding needs sensor parameters")
        with np.errstate(divide="ignore"):
            return np.log(-np.log1p(-mu) / (sensor.eta * sensor.w_exp))
    raise ValueError(f"encoding must be one of {_ENCODINGS}")


@dataclass
class EventStream:
    """Chronological event records over a cube's plane clock.

    Sorted by (plane, raster index); at most one event per pixel per
    plane. Physical timestamps are plane index / frame_rate.
    """

    t: np.ndarray
    y: np.ndarray
    x: np.ndarray
    p: np.ndarray
    dims: tuple[int, int, int]
    frame_rate: float = 0.0

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.uint32)
        self.y = np.asarray(self.y, dtype=np.uint16)
        self.x = np.asarray(self.x, dtype=np.uint16)
        self.p = np.asarray(self.p, dtype=np.int8)
        n = len(self.t)
        if not (len(self.y) == len(self.x) == len(self.p) == n):
            raise ValueError("event fields must have equal length")
        if n and not np.isin(self.p, (-1, 1)).all():
            raise ValueError("polarities must be -1 or +1")

    def __len__(self) -> int:
        return len(self.t)

    def times_seconds(self) -> np.ndarray:
        if self.frame_rate <= 0:
            raise ValueError("stream has no frame rate")
        return self.t.astype(np.float64) / self.frame_rate

    def to_cube(self) -> "EventCube":
        return EventCube(self.t.copy(), self.y.copy(), self.x.copy(), self.p.copy(),
                         self.dims, frame_rate=self.frame_rate)


@dataclass
class EventCube:
    """Sparse signed event grid over (T, H, W); nonzeros are -1/+1."""

    t: np.ndarray
    y: np.ndarray
    x: np.ndarray
    p: np.ndarray
    dims: tuple[int, int, int]
    frame_rate: float = 0.0

    def __len__(self) -> int:
        return len(self.t)

    def dense(self) -> np.ndarray:
        T, H, W = self.dims
        out = np.zeros((T, H, W), dtype=np.int8)
        out[self.t, self.y, self.x] = self.p
        return out

    @classmethod
    def from_dense(cls, grid: np.ndarray, frame_rate: float = 0.0) -> "EventCube":
        grid = np.asarray(grid)
        if grid.ndim != 3:
            raise ValueError("dense event grid must be (T, H, W)")
        t, y, x = np.nonzero(grid)
        return cls(t.astype(np.uint32), y.astype(np.uint16), x.astype(np.uint16),
                   grid[t, y, x].astype(np.int8), grid.shape, frame_rate=frame_rate)

    def to_stream(self) -> EventStream:
        return EventStream(self.t.copy(), self.y.copy(), self.x.copy(), self.p.copy(),
                           self.dims, frame_rate=self.frame_rate)


class EventEmulatorState:
    """Streaming per-pixel emulator state (average + encoded reference)."""

    def __init__(self, params: EventParams, dims, sensor: SensorParams | None = None):
        if params.encoding == "log-mle" and sensor is None:
            raise ValueError("log-mle encoding needs sensor parameters")
        T, H, W = dims
        if params.t0 >= T:
            raise ValueError(f"warmup t0={params.t0} must be < T={T}")
        self.params = params
        self.sensor = sensor
        self.dims = dims
        self.mu = np.zeros((H, W), dtype=np.float64)
        h = brightness_encode(self.mu, params.encoding, sensor)
        self.h_ref = h.copy() if h is self.mu else h
        self._records: list = []

    def step(self, t: int, bits: np.ndarray):
        """Advance one plane; returns (ys, xs, ps) fired this plane."""
        prm = self.params
        self.mu = prm.beta * self.mu + (1.0 - prm.beta) * bits
        return self.check(t)

    def check(self, t: int):
        """Warmup-copy or compare/fire against the current average."""
        prm = self.params
        if t < prm.t0:
            h = brightness_encode(self.mu, prm.encoding, self.sensor)
            # identity encoding returns mu itself; the reference must not alias it
            self.h_ref = h.copy() if h is self.mu else h
            return None
        h = brightness_encode(self.mu, prm.encoding, self.sensor)
        d = h - self.h_ref
        tau = prm.adaptive.tau_map(self.mu) if prm.adaptive is not None else prm.tau
        with np.errstate(invalid="ignore"):
            fire = np.abs(d) > tau
        if not fire.any():
            return None
        ys, xs = np.nonzero(fire)                      # raster order within the plane
        ps = np.where(d[ys, xs] > 0, 1, -1).astype(np.int8)
        if prm.ref_update == "additive":
            step = (tau[ys, xs] if prm.adaptive is not None else tau) * ps
            self.h_ref[ys, xs] += step
        else:
            self.h_ref[ys, xs] = h[ys, xs]
        self._records.append((np.full(len(ys), t, dtype=np.uint32),
                              ys.astype(np.uint16), xs.astype(np.uint16), ps))
        return ys, xs, ps

    def feed(self, t0, bits):
        for i in range(bits.shape[0]):
            self.step(t0 + i, bits[i])

    def result(self) -> tuple[EventStream, EventCube]:
        rate = self.sensor.frame_rate if self.sensor is not None else 0.0
        if self._records:
            ts = np.concatenate([r[0] for r in self._records])
            ys = np.concatenate([r[1] for r in self._records])
            xs = np.concatenate([r[2] for r in self._records])
            ps = np.concatenate([r[3] for r in self._records])
        else:
            ts = np.empty(0, np.uint32); ys = np.empty(0, np.uint16)
            xs = np.empty(0, np.uint16); ps = np.empty(0, np.int8)
        stream = EventStream(ts, ys, xs, ps, self.dims, frame_rate=rate)
        return stream, stream.to_cube()


def emulate_events(cube: PhotonCube, params: EventParams,
                   sensor: SensorParams | None = None) -> tuple[EventStream, EventCube]:
    """Run the event emulator over a cube.

    The per-pixel average updates on every plane. During warmup
    (planes < t0) the reference follows the average and nothing fires.
    Afterwards a strict threshold crossing in encoding space emits one
    signed event and moves the reference (additively by tau, or by
    resync, per params).
    """
    state = EventEmulatorState(params, cube.dims, sensor or cube.sensor)
    for t0, bits in cube.stream():
        state.feed(t0, bits.astype(np.float64))
    return state.result()


def accumulate_frame(events: EventStream | EventCube, t_start: int = 0,
                     t_end: int | None = None) -> IntensityImage:
    """Sum event polarities per pixel over planes [t_start, t_end)."""
    T, H, W = events.dims
    t_end = T if t_end is None else t_end
    if not (0 <= t_start < t_end <= T):
        raise ValueError(f"invalid plane range [{t_start}, {t_end}) for T={T}")
    out = np.zeros((H, W), dtype=np.float64)
    sel = (events.t >= t_start) & (events.t < t_end)
    np.add.at(out, (events.y[sel].astype(np.intp), events.x[sel].astype(np.intp)),
              events.p[sel].astype(np.float64))
    return IntensityImage(out)


def voxel_grid(events: EventStream, bins: int, t_range: tuple[int, int] | None = None) -> np.ndarray:
    """Distribute polarity mass into ``bins`` temporal bins.

    Each event's timestamp is normalized so ``t_range`` spans bin centers
    0 .. bins-1, and its polarity is split linearly between the two
    nearest bins. Total mass equals the polarity sum. ``t_range``
    defaults to the event timestamp extremes; a degenerate range (or
    bins == 1) puts all mass in bin 0.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    T, H, W = events.dims
    out = np.zeros((bins, H, W), dtype=np.float64)
    if len(events) == 0:
        return out
    t = events.t.astype(np.float64)
    lo, hi = (float(t.min()), float(t.max())) if t_range is None else map(float, t_range)
    if bins == 1 or hi <= lo:
        tstar = np.zeros_like(t)
    else:
        tstar = (bins - 1) * (t - lo) / (hi - lo)
    b0 = np.floor(tstar).astype(np.intp)
    w1 = tstar - b0
    ys = events.y.astype(np.intp)
    xs = events.x.astype(np.intp)
    ps = events.p.astype(np.float64)
    np.add.at(out, (np.clip(b0, 0, bins - 1), ys, xs), ps * (1.0 - w1))
    up = w1 > 0
    if up.any():
        np.add.at(out, (np.clip(b0[up] + 1, 0, bins - 1), ys[up], xs[up]), ps[up] * w1[up])
    return out


def event_stack(cube: PhotonCube, taus, params: EventParams,
                sensor: SensorParams | None = None) -> list[EventCube]:
    """Emulate several thresholds simultaneously in one pass.

    The running average is shared across thresholds (it does not depend
    on tau); each threshold keeps its own reference and event set. The
    k-th output is bit-identical to ``emulate_events`` with tau set to
    ``taus[k]``.
    """
    taus = [float(v) for v in taus]
    if not taus:
        raise ValueError("need at least one threshold")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("thresholds must be strictly increasing")
    if params.adaptive is not None:
        raise ValueError("event stacks take explicit thresholds, not adaptive maps")
    states = [EventEmulatorState(
        EventParams(tau=v, beta=params.beta, t0=params.t0, encoding=params.encoding,
                    ref_update=params.ref_update), cube.dims, sensor or cube.sensor)
        for v in taus]
    shared = states[0]
    for t0, bits in cube.stream():
        fb = bits.astype(np.float64)
        for i in range(fb.shape[0]):
            t = t0 + i
            shared.step(t, fb[i])
            for st in states[1:]:
                st.mu = shared.mu        # one EMA, per-tau references
                st.check(t)
    return [st.result()[1] for st in states]
