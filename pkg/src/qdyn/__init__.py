"""Quadratic difference-equation dynamics, escape rasters, synthetic ECG and
cardiac timing features."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    MapParams,
    OrbitState,
    SystemParams,
    SystemState,
    classify_linear,
    iterate_orbit,
    iterate_system,
    linear_roots,
    sampled_map_step,
    signed_power,
    step_map,
    step_system,
)
from .raster import GridSpec, EscapeGrid, render_escape_grid, white_fraction, mask_diff  # noqa: E402
from .stability import fixed_points, stability_report  # noqa: E402
from .ecg import EcgEvent, EcgParams, integrate_ecg, synthesize_ecg  # noqa: E402
from .frame import SignalFrame  # noqa: E402
from .features import sg_kernel, convolve_same, extract_features  # noqa: E402
