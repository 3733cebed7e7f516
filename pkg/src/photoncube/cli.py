"""Command-line front end.

Subcommands:
  synthesize   sample a photon cube from a synthetic scene or PFM frames
  project      fan one cube out to several projections in a single pass
  tiled        run a projection kernel on the tiled core-array simulator

Exit codes: 0 on success, 2 on validation errors, 3 on budget or
constraint violations. A key=value config file (--config or the
PHOTONCUBE_CONFIG environment variable) can override resource-model
constants.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io as pio
from .coded import (BucketAccumulator, FlutterAccumulator, GlobalCode,
                    apply_roi_coding, detect_dynamic_roi, generate_masks)
from .core import (FluxVideo, SensorParams, SumAccumulator, sample_photon_cube)
from .events import EventEmulatorState, EventParams
from .motion import (MotionAccumulator, Trajectory, make_linear_trajectory,
                     make_parabolic_trajectory)
from .resources import ReadoutSpec, benchmark_table
from .scenes import (constant_scene, moving_dot_scene, moving_square_scene,
                     ramp_scene)
from .tiled import (BudgetError, CoreGrid, EventKernel, MotionKernel, SumKernel,
                    VcsKernel, run_tiled, tiled_run_csv)

_RESOURCE_KEYS = ("readout.rate_hz", "readout.bit_depth", "readout.timestamp_bits",
                  "cube.rate_hz", "power.readout_nw_per_kbps", "event.stream_rate_hz",
                  "event.power_test_rate_hz")


def _parse_kv(spec: str) -> dict[str, str]:
    out = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _parse_size(s: str) -> tuple[int, int]:
    try:
        w, h = s.lower().split("x")
        return int(w), int(h)
    except Exception:
        raise ValueError(f"size must look like WIDTHxHEIGHT, got {s!r}") from None


def _parse_pair(s: str) -> tuple[float, float]:
    try:
        a, b = s.split(",")
        return float(a), float(b)
    except Exception:
        raise ValueError(f"expected two comma-separated numbers, got {s!r}") from None


def _parse_range(s: str, T: int) -> tuple[int, int]:
    try:
        a, b = s.split(":")
        lo = int(a) if a else 0
        hi = int(b) if b else T
        return lo, hi
    except ValueError:
        raise ValueError(f"range must look like START:STOP, got {s!r}") from None


def _load_config(args) -> dict[str, str]:
    path = args.config or os.environ.get("PHOTONCUBE_CONFIG")
    if not path:
        return {}
    return pio.read_config(path)


def _sensor_from_args(args) -> SensorParams:
    w_exp = args.exposure if args.exposure and args.exposure > 0 else None
    return SensorParams(eta=args.eta, r_q=args.dark_rate, w_exp=w_exp,
                        frame_rate=args.frame_rate)


def _motion_trajectory(spec: str, n_planes: int) -> Trajectory:
    if ":" not in spec:
        raise ValueError("motion spec must look like linear:v=1[,dir=DX,DY], "
                         "parabolic:vmax=2[,dir=DX,DY], or file:PATH")
    kind, rest = spec.split(":", 1)
    if kind == "file":
        traj = pio.read_trajectory_text(rest)
        if traj.n_planes != n_planes:
            raise ValueError(f"trajectory file has {traj.n_planes} planes, cube has {n_planes}")
        return traj
    # dir=DX,DY carries its own comma; pull it out before splitting pairs
    kv = {}
    direction = (1.0, 0.0)
    if "dir=" in rest:
        head, d = rest.split("dir=", 1)
        direction = _parse_pair(d)
        rest = head.rstrip(",")
    if rest:
        kv = _parse_kv(rest)
    if kind == "linear":
        return make_linear_trajectory(float(kv.get("v", 1.0)), direction, n_planes)
    if kind == "parabolic":
        return make_parabolic_trajectory(float(kv.get("vmax", 1.0)), direction, n_planes)
    raise ValueError(f"unknown motion kind {kind!r}")


def _event_params(spec: str) -> EventParams:
    kv = _parse_kv(spec) if spec else {}
    return EventParams(tau=float(kv.get("tau", 0.4)), beta=float(kv.get("beta", 0.95)),
                       t0=int(kv.get("t0", 80)), encoding=kv.get("encoding", "identity"),
                       ref_update=kv.get("ref_update", "additive"))


def cmd_synthesize(args) -> int:
    sensor = _sensor_from_args(args)
    if args.frames:
        paths = sorted(Path(args.frames).glob("*.pfm"))
        if not paths:
            raise ValueError(f"no .pfm frames under {args.frames}")
        flux = FluxVideo(np.stack([pio.read_pfm(p) for p in paths]))
    else:
        W, H = _parse_size(args.size)
        dims = (args.planes, H, W)
        if args.scene == "constant":
            flux = constant_scene(dims, args.flux)
        elif args.scene == "ramp":
            flux = ramp_scene(dims, args.flux)
        elif args.scene == "moving-dot":
            flux = moving_dot_scene(dims, args.flux, velocity=_parse_pair(args.velocity),
                                    background=args.background)
        elif args.scene == "moving-square":
            flux = moving_square_scene(dims, args.flux, size=args.object_size,
                                       velocity=_parse_pair(args.velocity),
                                       background=args.background)
        else:
            raise ValueError(f"unknown scene {args.scene!r}")
    cube = sample_photon_cube(flux, sensor, seed=args.seed)
    pio.write_pcube(args.output, cube)
    T, H, W = cube.dims
    print(f"wrote {args.output}: {T} planes of {H}x{W}, {cube.nbytes()} packed bytes")
    return 0


def cmd_project(args) -> int:
    config = _load_config(args)
    sensor = None
    if args.eta != 1.0 or args.dark_rate != 0.0 or (args.exposure and args.exposure > 0):
        # keep header frame rate, override the rest
        probe = pio.read_pcube(args.cube)
        rate = probe.sensor.frame_rate if probe.sensor else args.frame_rate
        sensor = SensorParams(eta=args.eta, r_q=args.dark_rate,
                              w_exp=args.exposure if args.exposure else None,
                              frame_rate=rate)
    cube = pio.read_pcube(args.cube, sensor=sensor)
    T, H, W = cube.dims
    outdir = Path(args.output)

    tasks = []
    if args.sum:
        lo, hi = _parse_range(args.range, T) if args.range else (0, T)
        tasks.append(("sum", SumAccumulator(cube.dims, lo, hi)))
    if args.flutter is not None:
        kv = _parse_kv(args.flutter) if args.flutter else {}
        code = GlobalCode.random(T, density=float(kv.get("density", 0.5)),
                                 seed=int(kv.get("seed", args.seed)))
        tasks.append(("flutter", FlutterAccumulator(code, cube.dims)))
    masks = None
    if args.vcs is not None:
        kv = _parse_kv(args.vcs) if args.vcs else {}
        scheme = kv.get("scheme", "multi-bucket-one-hot")
        buckets = int(kv["j"]) if "j" in kv else (int(kv["J"]) if "J" in kv else None)
        masks = generate_masks(scheme, cube.dims, buckets=buckets,
                               seed=int(kv.get("seed", args.seed)))
        tasks.append(("vcs", BucketAccumulator(masks, cube.dims)))
    if args.event is not None:
        state = EventEmulatorState(_event_params(args.event), cube.dims, cube.sensor)
        tasks.append(("event", state))
    if args.motion is not None:
        traj = _motion_trajectory(args.motion, T)
        tasks.append(("motion", MotionAccumulator(traj, cube.dims)))

    if not tasks and not args.report:
        raise ValueError("nothing to do: pass --sum/--flutter/--vcs/--event/--motion/--report")
    outdir.mkdir(parents=True, exist_ok=True)

    needs_float = any(name == "event" for name, _ in tasks)
    for t0, bits in cube.stream():
        fbits = bits.astype(np.float64) if needs_float else None
        for name, acc in tasks:
            acc.feed(t0, fbits if name == "event" else bits)

    for name, acc in tasks:
        if name == "sum":
            img = acc.result()
            pio.write_pfm(outdir / "sum.pfm", img.values)
            pio.write_pgm16(outdir / "sum.pgm", img.values,
                            scale=float(acc.t_end - acc.t_start))
            print(f"sum: planes [{acc.t_start}, {acc.t_end}), max count {img.values.max():.0f}")
        elif name == "flutter":
            img = acc.result()
            pio.write_pfm(outdir / "flutter.pfm", img.values)
            print(f"flutter: code density {acc.code.mean():.3f}, max count {img.values.max():.0f}")
        elif name == "vcs":
            caps = acc.result()
            for j, im in enumerate(caps.images):
                pio.write_pfm(outdir / f"vcs_bucket{j}.pfm", im.values)
            line = f"vcs: {caps.buckets} buckets ({caps.scheme})"
            if args.roi_percentile is not None:
                roi = detect_dynamic_roi(caps, percentile=args.roi_percentile)
                coded = apply_roi_coding(caps, roi)
                pio.write_pbm(outdir / "roi.pbm", roi.mask)
                base = caps.images[0].bit_depth * H * W
                line += (f", RoI {roi.mask.sum()} px, coded readout "
                         f"{coded.bandwidth_bits} b ({coded.bandwidth_bits / base:.3g}x single)")
            print(line)
        elif name == "event":
            stream, _ = acc.result()
            pio.write_pevt(outdir / "events.pevt", stream)
            from .events import accumulate_frame
            pio.write_accumulation(outdir / "events_accum", accumulate_frame(stream).values)
            rate = ""
            if cube.sensor is not None:
                rate = f", {len(stream) / (T / cube.sensor.frame_rate):.1f} ev/s"
            print(f"event: {len(stream)} events{rate}")
        elif name == "motion":
            shift = acc.result()
            pio.write_pfm(outdir / "motion.pfm", shift.values)
            pio.write_pfm(outdir / "motion_counts.pfm", shift.counts.astype(np.float64))
            pio.write_trajectory_text(outdir / "motion_traj.txt", acc.traj)
            print(f"motion: {acc.traj.kind} trajectory, max |shift| {acc.traj.max_abs_shift()} px")

    if args.report:
        overrides = {k: v for k, v in config.items() if k in _RESOURCE_KEYS
                     or k.startswith("cost.")}
        spec = ReadoutSpec(pixels=H * W, readout_rate=args.readout_rate)
        report = benchmark_table(spec, overrides=overrides)
        (outdir / "report.txt").write_text(report.to_text())
        (outdir / "report.csv").write_text(report.to_csv())
        print(report.to_text(), end="")
    return 0


def cmd_tiled(args) -> int:
    cube = pio.read_pcube(args.cube)
    T, H, W = cube.dims
    rows, cols = (int(v) for v in args.grid.lower().split("x"))
    grid = CoreGrid(core_rows=rows, core_cols=cols, tile=args.tile,
                    ram_budget_bytes=args.ram, reach=args.reach)
    if args.kernel == "sum":
        kernel = SumKernel()
    elif args.kernel == "vcs":
        kv = _parse_kv(args.vcs) if args.vcs else {}
        buckets = int(kv["j"]) if "j" in kv else (int(kv["J"]) if "J" in kv else None)
        masks = generate_masks(kv.get("scheme", "multi-bucket-one-hot"), cube.dims,
                               buckets=buckets, seed=int(kv.get("seed", args.seed)))
        kernel = VcsKernel(masks)
    elif args.kernel == "event":
        kernel = EventKernel(_event_params(args.event or ""), cube.sensor,
                             fixed_point=args.fixed_point)
    elif args.kernel == "motion":
        if not args.motion:
            raise ValueError("the motion kernel needs --motion")
        kernel = MotionKernel(_motion_trajectory(args.motion, T))
    else:
        raise ValueError(f"unknown kernel {args.kernel!r}")

    run = run_tiled(cube, kernel, grid)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    rate = cube.sensor.frame_rate if cube.sensor is not None else None
    (outdir / "run.csv").write_text(tiled_run_csv(run, frame_rate=rate))

    if run.kernel == "sum":
        pio.write_pfm(outdir / "tiled_sum.pfm", run.output.values)
    elif run.kernel == "vcs":
        for j, im in enumerate(run.output.images):
            pio.write_pfm(outdir / f"tiled_vcs_bucket{j}.pfm", im.values)
    elif run.kernel == "event":
        stream, _ = run.output
        pio.write_pevt(outdir / "tiled_events.pevt", stream)
    elif run.kernel == "motion":
        pio.write_pfm(outdir / "tiled_motion.pfm", run.output.values)
    print(f"{run.kernel}: {run.planes} planes on {grid.core_rows}x{grid.core_cols} cores, "
          f"state {run.state_bytes} B/core, high water {run.memory_high_water_bytes} B, "
          f"exchanged {run.exchange_log} px (max hop {run.max_hop})")
    if run.kernel == "event":
        print(f"events: {run.events_total} total, "
              f"peak {run.event_peak_per_core_plane} per core-plane")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="photoncube",
                                 description="Photon-cube projections and simulators")
    ap.add_argument("--config", help="key=value config file (or set PHOTONCUBE_CONFIG)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="sample a photon cube")
    s.add_argument("--scene", default="constant",
                   choices=("constant", "ramp", "moving-dot", "moving-square"))
    s.add_argument("--frames", help="directory of PFM flux frames (overrides --scene)")
    s.add_argument("--planes", type=int, default=1000)
    s.add_argument("--size", default="24x12", help="frame size WIDTHxHEIGHT")
    s.add_argument("--flux", type=float, default=5000.0, help="peak flux, photons/s")
    s.add_argument("--background", type=float, default=0.0)
    s.add_argument("--velocity", default="1,0", help="object velocity vx,vy in px/plane")
    s.add_argument("--object-size", type=int, default=3)
    s.add_argument("--eta", type=float, default=0.25)
    s.add_argument("--dark-rate", type=float, default=0.0)
    s.add_argument("--exposure", type=float, default=0.0,
                   help="per-plane exposure in seconds (default: full plane period)")
    s.add_argument("--frame-rate", type=float, default=100_000.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", default="cube.pcube")
    s.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("project", help="project a cube (single pass, many outputs)")
    p.add_argument("--cube", required=True)
    p.add_argument("-o", "--output", default="projections")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sum", action="store_true")
    p.add_argument("--range", help="plane range START:STOP for --sum")
    p.add_argument("--flutter", nargs="?", const="", metavar="density=0.5[,seed=N]")
    p.add_argument("--vcs", nargs="?", const="", metavar="j=4[,scheme=NAME][,seed=N]")
    p.add_argument("--roi-percentile", type=float,
                   help="with --vcs: emit the dynamic RoI at this percentile")
    p.add_argument("--event", nargs="?", const="",
                   metavar="tau=0.4,beta=0.95[,t0=80][,encoding=identity]")
    p.add_argument("--motion", metavar="linear:v=1[,dir=DX,DY] | parabolic:vmax=2 | file:PATH")
    p.add_argument("--report", action="store_true", help="emit the resource budget table")
    p.add_argument("--readout-rate", type=float, default=40.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--dark-rate", type=float, default=0.0)
    p.add_argument("--exposure", type=float, default=0.0)
    p.add_argument("--frame-rate", type=float, default=100_000.0,
                   help="fallback when the cube header carries no rate")
    p.set_defaults(func=cmd_project)

    t = sub.add_parser("tiled", help="run a kernel on the tiled core array")
    t.add_argument("--cube", required=True)
    t.add_argument("--kernel", required=True, choices=("sum", "vcs", "event", "motion"))
    t.add_argument("--vcs", nargs="?", const="")
    t.add_argument("--event", nargs="?", const="")
    t.add_argument("--motion")
    t.add_argument("--grid", default="3x6", help="core rows x cols")
    t.add_argument("--tile", type=int, default=4)
    t.add_argument("--ram", type=int, default=512)
    t.add_argument("--reach", type=int, default=8)
    t.add_argument("--fixed-point", action="store_true")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("-o", "--output", default="tiled_out")
    t.set_defaults(func=cmd_tiled)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as e:
        print(f"budget violation: {e}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
