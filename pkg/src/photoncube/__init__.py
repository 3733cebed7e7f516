"""Single-photon cube sampling and software projections.

The package models a binary single-photon sensor as a dense stream of
bit-planes (a photon cube) and recovers conventional camera outputs
from it after capture: exposure-bracketed sums, coded exposures,
event streams, and motion-compensated projections. A small resource
model and a tiled near-sensor simulator estimate what each projection
costs to compute next to the array.
"""

from .core import (FluxVideo, HotPixelMask, IntensityImage, PhotonCube,
                   SensorParams, SumAccumulator, detect_hot_pixels,
                   detection_probability, flux_mle, inpaint_mask, pack_plane,
                   sample_photon_cube, sum_image, unpack_plane)
from .coded import (BucketAccumulator, BucketCaptures, DynamicRoi,
                    FlutterAccumulator, GlobalCode, MaskSequence, RoiCoded,
                    apply_roi_coding, detect_dynamic_roi, flutter_shutter,
                    generate_masks, multi_bucket_capture)
from .events import (AdaptiveThreshold, EventCube, EventEmulatorState,
                     EventParams, EventStream, accumulate_frame,
                     brightness_encode, emulate_events, event_stack,
                     voxel_grid)
from .motion import (MotionAccumulator, MotionStack, ShiftImage, Trajectory,
                     blend_stack, extract_psf, make_linear_trajectory,
                     make_parabolic_trajectory, motion_project, motion_stack)
from .resources import (ReadoutSpec, ResourceReport, ResourceRow, bandwidth,
                        benchmark_table, power, scale_to_array)
from .tiled import (BudgetError, CoreGrid, DutyCycle, EventKernel,
                    MotionKernel, SumKernel, TiledRun, VcsKernel,
                    default_cost_model, estimate_duty_cycle, run_tiled,
                    tiled_run_csv)
from .scenes import (constant_scene, delta_track_cube, moving_dot_scene,
                     moving_square_scene, ramp_scene)

__version__ = "0.1.0"

__all__ = [
    "FluxVideo", "HotPixelMask", "IntensityImage", "PhotonCube", "SensorParams",
    "SumAccumulator", "detect_hot_pixels", "detection_probability", "flux_mle",
    "inpaint_mask", "pack_plane", "sample_photon_cube", "sum_image", "unpack_plane",
    "BucketAccumulator", "BucketCaptures", "DynamicRoi", "FlutterAccumulator",
    "GlobalCode", "MaskSequence", "RoiCoded", "apply_roi_coding",
    "detect_dynamic_roi", "flutter_shutter", "generate_masks", "multi_bucket_capture",
    "AdaptiveThreshold", "EventCube", "EventEmulatorState", "EventParams",
    "EventStream", "accumulate_frame", "brightness_encode", "emulate_events",
    "event_stack", "voxel_grid",
    "MotionAccumulator", "MotionStack", "ShiftImage", "Trajectory", "blend_stack",
    "extract_psf", "make_linear_trajectory", "make_parabolic_trajectory",
    "motion_project", "motion_stack",
    "ReadoutSpec", "ResourceReport", "ResourceRow", "bandwidth", "benchmark_table",
    "power", "scale_to_array",
    "BudgetError", "CoreGrid", "DutyCycle", "EventKernel", "MotionKernel",
    "SumKernel", "TiledRun", "VcsKernel", "default_cost_model",
    "estimate_duty_cycle", "run_tiled", "tiled_run_csv",
    "constant_scene", "delta_track_cube", "moving_dot_scene",
    "moving_square_scene", "ramp_scene",
]
