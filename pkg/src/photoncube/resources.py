"""Readout bandwidth and power budgeting for cube projections.

Bandwidth units are kb/s with 1 kb = 1024 bits. Readout power scales
linearly with bandwidth at a configured nW-per-kbps figure. Processing
time and power per projection are calibration constants measured on the
reference 3x6-core design (288 pixels, 40 Hz readout, 2500-plane
windows); all constants can be overridden through a key=value config
file.

The event projection carries two calibrated event rates: the streaming
benchmark rate (sets the bandwidth column) and the higher stimulus rate
used during the power characterization (sets the readout-power column).
In the combined three-projection configuration the event output is read
out as a quantized accumulation frame, so its bandwidth matches an
image-type projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "ReadoutSpec", "ResourceRow", "ResourceReport",
    "bandwidth", "power", "benchmark_table", "scale_to_array",
    "DEFAULT_COSTS", "EVENT_STREAM_RATE_HZ", "EVENT_POWER_TEST_RATE_HZ",
    "READOUT_NW_PER_KBPS", "CALIBRATION_PLANES",
]

KILOBIT = 1024.0

# calibration constants for the reference design (per 2500-plane window)
DEFAULT_COSTS = {
    "sum": (0.981, 0.3),
    "compressive": (1.678, 3.0),
    "motion": (1.096, 1.3),
    "event": (9.817, 2.4),
    "cube": (0.007, 0.0054),
}
EVENT_STREAM_RATE_HZ = 5760.0
EVENT_POWER_TEST_RATE_HZ = 6144.0
READOUT_NW_PER_KBPS = 54.0
CALIBRATION_PLANES = 2500


@dataclass(frozen=True)
class ReadoutSpec:
    """Array geometry and rates entering bandwidth accounting."""

    pixels: int
    readout_rate: float = 40.0        # projection frames/s
    bit_depth: int = 12
    timestamp_bits: int = 8
    photon_cube_rate: float = 100_000.0   # bit-planes/s when streaming raw

    def __post_init__(self):
        if self.pixels < 1:
            raise ValueError("pixels must be >= 1")
        if self.readout_rate <= 0 or self.photon_cube_rate <= 0:
            raise ValueError("rates must be > 0")
        if self.bit_depth < 1 or self.timestamp_bits < 0:
            raise ValueError("invalid bit widths")

    @property
    def event_bits(self) -> int:
        """Bits per event record: address + timestamp + polarity."""
        return math.ceil(math.log2(self.pixels)) + self.timestamp_bits + 1


def bandwidth(kind: str, spec: ReadoutSpec, event_rate: float | None = None) -> float:
    """Readout bandwidth in kb/s for one output kind.

    kind "image": quantized projection frames at the readout rate.
    kind "cube": raw binary planes at the photon-cube rate.
    kind "event": event records at ``event_rate`` events/s.
    """
    if kind == "image":
        return spec.pixels * spec.bit_depth * spec.readout_rate / KILOBIT
    if kind == "cube":
        return spec.pixels * spec.photon_cube_rate / KILOBIT
    if kind == "event":
        if event_rate is None or event_rate < 0:
            raise ValueError("event bandwidth needs a nonnegative event rate")
        return event_rate * spec.event_bits / KILOBIT
    raise ValueError(f"unknown bandwidth kind {kind!r}")


def power(bandwidth_kbps: float, processing_uw: float,
          nw_per_kbps: float = READOUT_NW_PER_KBPS) -> tuple[float, float]:
    """(readout_uW, total_uW) for a projection's bandwidth and compute power."""
    if bandwidth_kbps < 0 or processing_uw < 0:
        raise ValueError("bandwidth and processing power must be >= 0")
    readout = bandwidth_kbps * nw_per_kbps / 1000.0
    return readout, processing_uw + readout


@dataclass
class ResourceRow:
    name: str
    processing_ms: float
    bandwidth_kbps: float
    processing_uw: float
    readout_uw: float
    total_uw: float


@dataclass
class ResourceReport:
    spec: ReadoutSpec
    rows: list

    def row(self, name: str) -> ResourceRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_text(self) -> str:
        head = f"{'projection':<18}{'proc ms':>9}{'kb/s':>10}{'proc uW':>9}{'read uW':>9}{'total uW':>10}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(f"{r.name:<18}{r.processing_ms:>9.3f}{r.bandwidth_kbps:>10.2f}"
                         f"{r.processing_uw:>9.4g}{r.readout_uw:>9.2f}{r.total_uw:>10.1f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["projection,processing_ms,bandwidth_kbps,processing_uw,readout_uw,total_uw"]
        for r in self.rows:
            lines.append(f"{r.name},{r.processing_ms:.6g},{r.bandwidth_kbps:.6g},"
                         f"{r.processing_uw:.6g},{r.readout_uw:.6g},{r.total_uw:.6g}")
        return "\n".join(lines) + "\n"


def _apply_overrides(spec, costs, rates, overrides):
    costs = {k: list(v) for k, v in costs.items()}
    rates = dict(rates)
    spec_fields = {}
    for key, raw in (overrides or {}).items():
        val = float(raw)
        if key == "readout.rate_hz":
            spec_fields["readout_rate"] = val
        elif key == "readout.bit_depth":
            spec_fields["bit_depth"] = int(val)
        elif key == "readout.timestamp_bits":
            spec_fields["timestamp_bits"] = int(val)
        elif key == "cube.rate_hz":
            spec_fields["photon_cube_rate"] = val
        elif key == "power.readout_nw_per_kbps":
            rates["nw_per_kbps"] = val
        elif key == "event.stream_rate_hz":
            rates["stream"] = val
        elif key == "event.power_test_rate_hz":
            rates["power_test"] = val
        elif key.startswith("cost.") and key.count(".") == 2:
            _, row, which = key.split(".")
            if row not in costs or which not in ("processing_ms", "processing_uw"):
                raise ValueError(f"unknown config key {key!r}")
            costs[row][0 if which == "processing_ms" else 1] = val
        else:
            raise ValueError(f"unknown config key {key!r}")
    if spec_fields:
        spec = replace(spec, **spec_fields)
    return spec, {k: tuple(v) for k, v in costs.items()}, rates


def benchmark_table(spec: ReadoutSpec, overrides: dict | None = None) -> ResourceReport:
    """Per-projection budget table for one array configuration.

    Rows: the three single projections (sum, compressive, motion), the
    event stream, the combined three-projection configuration
    (compressive + event + motion, event read out as a frame), and the
    raw photon-cube readout baseline.
    """
    rates = {"nw_per_kbps": READOUT_NW_PER_KBPS,
             "stream": EVENT_STREAM_RATE_HZ,
             "power_test": EVENT_POWER_TEST_RATE_HZ}
    spec, costs, rates = _apply_overrides(spec, DEFAULT_COSTS, rates, overrides)
    nw = rates["nw_per_kbps"]

    def img_row(name, cost_key):
        ms, uw = costs[cost_key]
        bw = bandwidth("image", spec)
        ro, tot = power(bw, uw, nw)
        return ResourceRow(name, ms, bw, uw, ro, tot)

    rows = [img_row("sum", "sum"), img_row("compressive", "compressive"),
            img_row("motion", "motion")]

    ev_ms, ev_uw = costs["event"]
    ev_bw = bandwidth("event", spec, event_rate=rates["stream"])
    # readout power characterized at its own stimulus rate
    ev_ro, _ = power(bandwidth("event", spec, event_rate=rates["power_test"]), 0.0, nw)
    rows.append(ResourceRow("event", ev_ms, ev_bw, ev_uw, ev_ro, ev_uw + ev_ro))

    combo_ms = costs["compressive"][0] + costs["event"][0] + costs["motion"][0]
    combo_uw = costs["compressive"][1] + costs["event"][1] + costs["motion"][1]
    combo_bw = 3 * bandwidth("image", spec)
    combo_ro, combo_tot = power(combo_bw, combo_uw, nw)
    rows.append(ResourceRow("three-projection", combo_ms, combo_bw, combo_uw,
                            combo_ro, combo_tot))

    cube_ms, cube_uw = costs["cube"]
    cube_bw = bandwidth("cube", spec)
    cube_ro, cube_tot = power(cube_bw, cube_uw, nw)
    rows.append(ResourceRow("photon-cube", cube_ms, cube_bw, cube_uw, cube_ro, cube_tot))
    return ResourceReport(spec, rows)


def scale_to_array(report: ResourceReport, pixels: int,
                   detection_uw: float = 0.0) -> ResourceReport:
    """Rescale a report to a different pixel count.

    Bandwidth and readout power scale linearly with pixel count;
    photon-detection power, which depends on light level rather than
    readout, is added to every total as a flat configured term.
    Processing figures are left as calibrated.
    """
    if pixels < 1:
        raise ValueError("pixels must be >= 1")
    if detection_uw < 0:
        raise ValueError("detection power must be >= 0")
    ratio = pixels / report.spec.pixels
    rows = [ResourceRow(r.name, r.processing_ms, r.bandwidth_kbps * ratio,
                        r.processing_uw, r.readout_uw * ratio,
                        r.processing_uw + r.readout_uw * ratio + detection_uw)
            for r in report.rows]
    return ResourceReport(replace(report.spec, pixels=pixels), rows)
