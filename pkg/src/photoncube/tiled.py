"""Behavioral simulator for a tiled near-sensor processor array.

Cores own fixed pixel tiles and run plane-synchronously: every core
processes plane t, exchanges any neighbor pixels the kernel needs, then
the whole array advances. The simulation is dataflow-equivalent, per-core
state sizing, barrier order, and neighbor-exchange traffic are modeled
exactly while arithmetic runs at full array width, so stitched outputs
are bit-identical to the corresponding global operations by
construction. Instruction timing is approximated by calibrated per-plane
costs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coded import BucketAccumulator, MaskSequence
from .core import PhotonCube, SensorParams, SumAccumulator
from .events import EventEmulatorState, EventParams, EventStream
from .motion import MotionAccumulator, Trajectory
from .resources import CALIBRATION_PLANES, DEFAULT_COSTS

__all__ = [
    "CoreGrid", "BudgetError", "TiledRun", "DutyCycle",
    "SumKernel", "VcsKernel", "EventKernel", "MotionKernel",
    "run_tiled", "estimate_duty_cycle", "default_cost_model", "tiled_run_csv",
]


class BudgetError(RuntimeError):
    """A per-core resource bound (RAM, exchange reach) would be violated."""


@dataclass(frozen=True)
class CoreGrid:
    """Processor-array geometry and per-core budgets.

    The default matches the reference design: 3x6 cores, 4x4 pixels per
    core, 512 bytes of working RAM and 256 program slots per core, and a
    neighbor-exchange fabric that can source pixels up to 8 away
    (one hop serves shifts up to 4, a second hop up to 8).
    """

    core_rows: int = 3
    core_cols: int = 6
    tile: int = 4
    ram_budget_bytes: int = 512
    program_slots: int = 256
    reach: int = 8

    def __post_init__(self):
        if self.core_rows < 1 or self.core_cols < 1 or self.tile < 1:
            raise ValueError("grid dimensions must be positive")
        if self.ram_budget_bytes < 1 or self.program_slots < 1 or self.reach < 0:
            raise ValueError("core budgets must be positive")

    @property
    def array_shape(self) -> tuple[int, int]:
        return self.core_rows * self.tile, self.core_cols * self.tile

    @property
    def cores(self) -> int:
        return self.core_rows * self.core_cols


def _tile_counts(fired_y, fired_x, grid: CoreGrid) -> np.ndarray:
    idx = (fired_y // grid.tile) * grid.core_cols + (fired_x // grid.tile)
    return np.bincount(idx, minlength=grid.cores)


class SumKernel:
    """Per-core 32-bit accumulators, one per pixel. No exchange."""

    name = "sum"

    def __init__(self, t_start: int = 0, t_end: int | None = None):
        self.t_start, self.t_end = t_start, t_end

    def bind(self, dims, grid):
        self.acc = SumAccumulator(dims, self.t_start, self.t_end)
        self.state_bytes = grid.tile * grid.tile * 4
        self.inbox_bytes = 0

    def plane(self, t, bits, book):
        self.acc.feed(t, bits[None])

    def result(self):
        return self.acc.result()


class VcsKernel:
    """Per-core bucket accumulators; mask bits stream in with the plane."""

    name = "vcs"

    def __init__(self, masks: MaskSequence):
        self.masks = masks

    def bind(self, dims, grid):
        self.acc = BucketAccumulator(self.masks, dims)
        J = self.masks.buckets
        self.state_bytes = J * grid.tile * grid.tile * 4
        # transient: one packed mask tile per bucket per plane
        self.inbox_bytes = J * ((grid.tile * grid.tile + 7) // 8)

    def plane(self, t, bits, book):
        self.acc.feed(t, bits[None])

    def result(self):
        return self.acc.result()


class EventKernel:
    """Per-pixel average and reference per core; single-slot event queue.

    The reference hardware exposes one event-address slot per core per
    plane; the simulator queues every fired pixel and reports the
    worst-case per-core multiplicity instead of dropping events.
    ``fixed_point`` switches to 16-bit state with 8 fractional bits.
    """

    name = "event"

    def __init__(self, params: EventParams, sensor: SensorParams | None = None,
                 fixed_point: bool = False):
        if fixed_point and params.encoding != "identity":
            raise ValueError("fixed-point mode supports the identity encoding only")
        self.params = params
        self.sensor = sensor
        self.fixed_point = fixed_point

    def bind(self, dims, grid):
        word = 2 if self.fixed_point else 8
        # per pixel: average + reference; constants: decay, its complement,
        # threshold, warmup counter, plane counter
        self.state_bytes = grid.tile * grid.tile * 2 * word + 5 * word
        self.inbox_bytes = 0
        self.grid = grid
        if self.fixed_point:
            self.state = _FixedPointEventState(self.params, dims, self.sensor)
        else:
            self.state = EventEmulatorState(self.params, dims, self.sensor)

    def plane(self, t, bits, book):
        fired = self.state.step(t, bits if self.fixed_point else bits.astype(np.float64))
        if fired is not None:
            ys, xs, _ = fired
            book["events"] += len(ys)
            per_core = _tile_counts(ys, xs, self.grid)
            book["event_peak"] = max(book["event_peak"], int(per_core.max()))

    def result(self):
        return self.state.result()


class _FixedPointEventState:
    """Identity-encoding emulator on 16-bit words, 8 fractional bits."""

    def __init__(self, params: EventParams, dims, sensor=None):
        if params.adaptive is not None:
            raise ValueError("fixed-point mode uses a scalar threshold")
        T, H, W = dims
        if params.t0 >= T:
            raise ValueError(f"warmup t0={params.t0} must be < T={T}")
        self.params = params
        self.sensor = sensor
        self.dims = dims
        self.beta_fp = int(round(params.beta * 256))
        self.comp_fp = 256 - self.beta_fp
        self.tau_fp = int(round(params.tau * 256))
        if not (0 < self.tau_fp):
            raise ValueError("threshold quantizes to zero at 8 fractional bits")
        self.mu = np.zeros((H, W), dtype=np.int32)
        self.ref = self.mu.copy()
        self._records = []

    def step(self, t, bits):
        prm = self.params
        self.mu = ((self.mu * self.beta_fp) >> 8) + bits.astype(np.int32) * self.comp_fp
        if t < prm.t0:
            self.ref = self.mu.copy()
            return None
        d = self.mu - self.ref
        fire = np.abs(d) > self.tau_fp
        if not fire.any():
            return None
        ys, xs = np.nonzero(fire)
        ps = np.where(d[ys, xs] > 0, 1, -1).astype(np.int8)
        if prm.ref_update == "additive":
            self.ref[ys, xs] += self.tau_fp * ps
        else:
            self.ref[ys, xs] = self.mu[ys, xs]
        self._records.append((np.full(len(ys), t, dtype=np.uint32),
                              ys.astype(np.uint16), xs.astype(np.uint16), ps))
        return ys, xs, ps

    def result(self):
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


class MotionKernel:
    """Shift-and-add with neighbor exchange for off-tile sources."""

    name = "motion"

    def __init__(self, traj: Trajectory, hot=None):
        self.traj = traj
        self.hot = hot

    def bind(self, dims, grid):
        worst = self.traj.max_abs_shift()
        if worst > grid.reach:
            raise BudgetError(
                f"trajectory shift {worst} px exceeds exchange reach {grid.reach}")
        self.acc = MotionAccumulator(self.traj, dims, hot=self.hot)
        self.grid = grid
        self.H, self.W = dims[1], dims[2]
        # per pixel: 32-bit sum + 16-bit valid-access count
        self.state_bytes = grid.tile * grid.tile * 4 + grid.tile * grid.tile * 2
        self.inbox_bytes = 0

    def plane(self, t, bits, book):
        dx, dy = (int(v) for v in self.traj.shifts[t])
        g = self.grid
        if dx or dy:
            h_in = _inbound_span(self.H, g.core_rows, g.tile, dy)
            w_in = _inbound_span(self.W, g.core_cols, g.tile, dx)
            local = max(0, g.tile - abs(dy)) * max(0, g.tile - abs(dx))
            fetched = np.outer(h_in, w_in) - local
            if fetched.any():
                book["exchange"] += fetched
                book["inbox_peak"] = max(book["inbox_peak"],
                                         int((int(fetched.max()) + 7) // 8))
                hop = max(-(-abs(dy) // g.tile), -(-abs(dx) // g.tile))
                book["max_hop"] = max(book["max_hop"], hop)
        self.acc.feed(t, bits[None])

    def result(self):
        return self.acc.result()


def _inbound_span(length, n_cores, tile, d):
    """In-bounds source rows/cols per core index for a shift of d."""
    starts = np.arange(n_cores) * tile
    lo = np.maximum(starts + d, 0)
    hi = np.minimum(starts + tile + d, length)
    return np.maximum(hi - lo, 0)


@dataclass
class TiledRun:
    """Outcome and accounting of one kernel over one cube."""

    kernel: str
    grid: CoreGrid
    planes: int
    output: object
    exchange_per_core: np.ndarray
    max_hop: int
    state_bytes: int
    inbox_peak_bytes: int
    events_total: int = 0
    event_peak_per_core_plane: int = 0

    @property
    def exchange_log(self) -> int:
        """Total pixels fetched across core boundaries."""
        return int(self.exchange_per_core.sum())

    @property
    def memory_high_water_bytes(self) -> int:
        return self.state_bytes + self.inbox_peak_bytes


def run_tiled(cube: PhotonCube, kernel, grid: CoreGrid = CoreGrid()) -> TiledRun:
    """Execute one kernel plane-synchronously over the core grid.

    Raises BudgetError when the kernel's per-core state cannot fit the
    RAM budget or a shift exceeds the exchange reach; raises ValueError
    when the cube does not tile onto the grid.
    """
    T, H, W = cube.dims
    if (H, W) != grid.array_shape:
        raise ValueError(f"cube frame {(H, W)} does not match core grid {grid.array_shape}")
    kernel.bind(cube.dims, grid)
    if kernel.state_bytes > grid.ram_budget_bytes:
        raise BudgetError(f"{kernel.name} kernel needs {kernel.state_bytes} B per core, "
                          f"budget is {grid.ram_budget_bytes} B")
    book = {"exchange": np.zeros((grid.core_rows, grid.core_cols), dtype=np.int64),
            "inbox_peak": 0, "max_hop": 0, "events": 0, "event_peak": 0}
    for t0, bits in cube.stream(chunk=128):
        for i in range(bits.shape[0]):
            kernel.plane(t0 + i, bits[i], book)
    return TiledRun(kernel=kernel.name, grid=grid, planes=T, output=kernel.result(),
                    exchange_per_core=book["exchange"], max_hop=book["max_hop"],
                    state_bytes=kernel.state_bytes,
                    inbox_peak_bytes=max(book["inbox_peak"], kernel.inbox_bytes),
                    events_total=book["events"],
                    event_peak_per_core_plane=book["event_peak"])


@dataclass
class DutyCycle:
    per_plane_s: float
    duty: float

    @property
    def over_budget(self) -> bool:
        return self.duty > 1.0


def default_cost_model() -> dict[str, float]:
    """Seconds of processing per plane per kernel, from the calibration runs."""
    name_map = {"sum": "sum", "vcs": "compressive", "event": "event", "motion": "motion"}
    return {k: DEFAULT_COSTS[v][0] * 1e-3 / CALIBRATION_PLANES for k, v in name_map.items()}


def estimate_duty_cycle(run: TiledRun, frame_rate: float,
                        cost_model: dict[str, float] | None = None) -> DutyCycle:
    """Fraction of each plane period spent processing.

    Duty above 1.0 means the kernel cannot keep up at this plane rate;
    the value is reported, not clamped.
    """
    if frame_rate <= 0:
        raise ValueError("frame rate must be > 0")
    model = default_cost_model() if cost_model is None else cost_model
    if run.kernel not in model:
        raise KeyError(f"cost model has no entry for kernel {run.kernel!r}")
    per_plane = model[run.kernel]
    return DutyCycle(per_plane_s=per_plane, duty=per_plane * frame_rate)


def tiled_run_csv(run: TiledRun, frame_rate: float | None = None,
                  cost_model: dict[str, float] | None = None) -> str:
    """Per-core accounting table (memory, exchange, duty cycle)."""
    duty = ""
    if frame_rate is not None:
        duty = f"{estimate_duty_cycle(run, frame_rate, cost_model).duty:.6g}"
    lines = ["core_row,core_col,state_bytes,inbox_peak_bytes,memory_high_water_bytes,"
             "exchange_pixels,max_hop,duty_cycle"]
    for r in range(run.grid.core_rows):
        for c in range(run.grid.core_cols):
            lines.append(f"{r},{c},{run.state_bytes},{run.inbox_peak_bytes},"
                         f"{run.memory_high_water_bytes},{int(run.exchange_per_core[r, c])},"
                         f"{run.max_hop},{duty}")
    return "\n".join(lines) + "\n"
