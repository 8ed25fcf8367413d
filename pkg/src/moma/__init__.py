"""Metric depth recovery for monocular depth predictions.

Fits alignment parameters (scale/shift, per-pixel scale/shift fields, or
scale-shift-rotation with pseudo-intrinsics) against sparse ground-truth
depth samples once per fixed camera pose, then applies them to later
predictions from the same pose.
"""

from .core import (
    DepthMap,
    Mask,
    SamplePoint,
    SampleSet,
    concat_samples,
    pair_predictions,
    sample_points,
)
from .errors import (
    DegenerateDesign,
    DegenerateG,
    DegenerateMAD,
    DegenerateRange,
    DimensionMismatch,
    EmptyAfterPairing,
    EmptyScene,
    InvalidArgument,
    MomaError,
    NoValidPixels,
    NonFinite,
    ZeroFocal,
)
from .gssa import GlobalScaleShift, apply_gssa, fit_gssa
from .lwlr import LwlrConfig, ScaleShiftField, apply_lwlr, fit_lwlr, lwlr_weight
from .metrics import MetricsReport, evaluate
from .model import AlignmentModel, CalibrationInfo, LwlrModel, apply_model, calibrate
from .normalize import NormalizationMethod, NormStats, normalize, renormalize
from .ssra import (
    PseudoPoint3D,
    SolverConfig,
    SolverReport,
    ThetaParams,
    apply_ssra,
    back_project,
    fit_ssra,
    forward_model,
    forward_model_jacobian,
    pixel_gain_field,
)
from .synth import (
    Box,
    CameraModel,
    PerturbationSpec,
    Plane,
    SceneSpec,
    load_scene_config,
    perturb,
    render_scene,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentModel",
    "Box",
    "CalibrationInfo",
    "CameraModel",
    "DegenerateDesign",
    "DegenerateG",
    "DegenerateMAD",
    "DegenerateRange",
    "DepthMap",
    "DimensionMismatch",
    "EmptyAfterPairing",
    "EmptyScene",
    "GlobalScaleShift",
    "InvalidArgument",
    "LwlrConfig",
    "LwlrModel",
    "Mask",
    "MetricsReport",
    "MomaError",
    "NoValidPixels",
    "NonFinite",
    "NormStats",
    "NormalizationMethod",
    "PerturbationSpec",
    "Plane",
    "PseudoPoint3D",
    "SamplePoint",
    "SampleSet",
    "SceneSpec",
    "ScaleShiftField",
    "SolverConfig",
    "SolverReport",
    "ThetaParams",
    "ZeroFocal",
    "apply_gssa",
    "apply_lwlr",
    "apply_model",
    "apply_ssra",
    "back_project",
    "calibrate",
    "concat_samples",
    "evaluate",
    "fit_gssa",
    "fit_lwlr",
    "fit_ssra",
    "forward_model",
    "forward_model_jacobian",
    "load_scene_config",
    "lwlr_weight",
    "normalize",
    "pair_predictions",
    "perturb",
    "pixel_gain_field",
    "render_scene",
    "renormalize",
    "sample_points",
    "__version__",
]
