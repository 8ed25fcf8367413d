"""Synthetic scenes and an exact forward-model oracle.

Renders ground-truth depth for a virtual pinhole camera looking at a
plane plus axis-aligned boxes, then manufactures pseudo-predictions by
inverting the SSRA forward model: since F = z_p * g(u, v) + t3, the
prediction z_p = (z_c - t3) / g(u, v) reconstructs z_c exactly under the
generating parameters. Per-image affine jitter and ground-truth noise
emulate the fluctuation and sensor error a real pipeline sees, which lets
every solver be verified end to end without hardware.

Depth is the z-coordinate along the optical axis (not Euclidean ray
length), matching the pinhole back-projection used by the aligners.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DepthMap, FloatArray
from .errors import DegenerateG, EmptyScene, InvalidArgument
from .ssra import ThetaParams, pixel_gain_field

#: |g| below this cannot be inverted to build a pseudo-prediction.
GAIN_FLOOR = 1e-9


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: raster size plus intrinsics in pixels."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InvalidArgument("camera raster must be at least 1x1")
        if self.fx == 0.0 or self.fy == 0.0:
            raise InvalidArgument("focal lengths must be nonzero")


@dataclass(frozen=True)
class Plane:
    """Infinite plane n . X = offset with unit normal n."""

    normal: tuple[float, float, float]
    offset: float

    def __post_init__(self) -> None:
        n = np.asarray(self.normal, dtype=np.float64)
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            raise InvalidArgument("plane normal must be nonzero")
        object.__setattr__(self, "normal", tuple(float(x) for x in n / norm))


@dataclass(frozen=True)
class Box:
    """Axis-aligned cuboid given by center and half-extents in meters."""

    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]

    def __post_init__(self) -> None:
        if any(h <= 0.0 for h in self.half_extents):
            raise InvalidArgument("box half-extents must be > 0")


@dataclass(frozen=True)
class SceneSpec:
    camera: CameraModel
    plane: Plane | None = None
    boxes: tuple[Box, ...] = ()


@dataclass(frozen=True)
class PerturbationSpec:
    """How a pseudo-prediction is derived from ground truth.

    theta_star generates the prediction; (jitter_a, jitter_b) is the
    per-image affine fluctuation applied to it; gt_noise_sigma is the
    Gaussian sensor noise added to the paired ground truth.
    """

    theta_star: ThetaParams
    gt_noise_sigma: float = 0.0
    jitter_a: float = 1.0
    jitter_b: float = 0.0

    def __post_init__(self) -> None:
        if self.gt_noise_sigma < 0.0:
            raise InvalidArgument("noise sigma must be >= 0")
        if self.jitter_a == 0.0:
            raise InvalidArgument("jitter scale must be nonzero")


def render_scene(spec: SceneSpec) -> DepthMap:
    """Ray-cast z-depth of the nearest surface at every pixel.

    Pixels that hit nothing (possible in box-only scenes) come back
    invalid. Raises EmptyScene when there is no geometry at all, and
    InvalidArgument when the plane is not fully visible from the camera.
    """
    if spec.plane is None and not spec.boxes:
        raise EmptyScene("scene has neither a plane nor boxes")
    cam = spec.camera
    v_grid, u_grid = np.mgrid[0 : cam.height, 0 : cam.width]
    # Ray through pixel: X(t) = t * (dx, dy, 1), so t is the z-depth.
    dx = (u_grid.astype(np.float64) - cam.cx) / cam.fx
    dy = (v_grid.astype(np.float64) - cam.cy) / cam.fy

    depth = np.full((cam.height, cam.width), np.inf)

    if spec.plane is not None:
        nx, ny, nz = spec.plane.normal
        denom = nx * dx + ny * dy + nz
        with np.errstate(divide="ignore", invalid="ignore"):
            t = spec.plane.offset / denom
        if not np.all(np.isfinite(t) & (t > 0.0)):
            raise InvalidArgument("plane is not visible at every pixel")
        depth = np.minimum(depth, t)

    for box in spec.boxes:
        t_near, t_far = _box_span(box, dx, dy)
        hit = (t_near <= t_far) & (t_near > 0.0)
        depth = np.where(hit & (t_near < depth), t_near, depth)

    return DepthMap(depth)  # rays that miss everything stay inf -> NaN


def _box_span(box: Box, dx: FloatArray, dy: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Slab intersection spans in the z-depth parameter for rays from the origin."""
    t_near = None
    t_far = None
    dirs = (dx, dy, 1.0)
    for axis in range(3):
        lo_plane = box.center[axis] - box.half_extents[axis]
        hi_plane = box.center[axis] + box.half_extents[axis]
        d = dirs[axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = lo_plane / d
            t2 = hi_plane / d
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        t_near = lo if t_near is None else np.maximum(t_near, lo)
        t_far = hi if t_far is None else np.minimum(t_far, hi)
    return t_near, t_far


def perturb(
    gt: DepthMap, pspec: PerturbationSpec, seed: int = 0
) -> tuple[DepthMap, DepthMap]:
    """Manufacture a (prediction, paired ground truth) pair from clean depth.

    The prediction is z_p = (z_c - t3) / g(u, v) under theta_star, then
    jittered to a*z_p + b. The paired ground truth gets Gaussian noise of
    gt_noise_sigma on valid pixels (seeded); with zero sigma it is the
    input unchanged. forward_model over the unjittered prediction
    reconstructs the clean depth exactly.

    Raises:
        DegenerateG: the gain field vanishes at some valid pixel.
    """
    theta = pspec.theta_star
    g = pixel_gain_field(theta, (gt.width, gt.height))
    valid = gt.valid_mask()
    if np.any(np.abs(g[valid]) <= GAIN_FLOOR):
        raise DegenerateG("gain field vanishes inside the valid region")
    z_p = np.where(valid, (gt.values - theta.t3) / g, np.nan)
    pred = DepthMap(pspec.jitter_a * z_p + pspec.jitter_b)

    if pspec.gt_noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, pspec.gt_noise_sigma, size=gt.shape)
        gt_out = DepthMap(np.where(valid, gt.values + noise, gt.values))
    else:
        gt_out = gt
    return pred, gt_out


# --------------------------------------------------------------------------
# Configuration document: flat "dotted.key = value" lines.
# --------------------------------------------------------------------------

_CONFIG_EXAMPLE = """\
camera.width = 320
camera.height = 240
camera.fx = 300
camera.fy = 300
camera.cx = 160
camera.cy = 120
plane.normal = 0.05 -0.08 1.0
plane.offset = 1.05
box.1.center = -0.15 0.10 0.90
box.1.half_extents = 0.06 0.05 0.07
perturb.s = 1.4
perturb.theta = 0.12
perturb.phi = -0.08
perturb.t3 = 0.25
perturb.cxp = 160
perturb.cyp = 120
perturb.fp = 320
perturb.jitter_a = 1.0
perturb.jitter_b = 0.0
perturb.gt_noise_sigma = 0.0
"""


def config_example() -> str:
    """A complete sample configuration document."""
    return _CONFIG_EXAMPLE


def parse_config_text(text: str) -> dict[str, list[float]]:
    """Parse "dotted.key = numbers" lines; '#' starts a comment."""
    entries: dict[str, list[float]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            numbers = [float(tok) for tok in value.replace(",", " ").split()]
        except ValueError as exc:
            raise InvalidArgument(f"config line {lineno}: bad number in {value!r}") from exc
        if not key or not numbers:
            raise InvalidArgument(f"config line {lineno}: empty key or value")
        entries[key] = numbers
    return entries


def _scalar(entries: dict, key: str, default: float | None = None) -> float:
    if key not in entries:
        if default is None:
            raise InvalidArgument(f"config is missing required key {key!r}")
        return default
    vals = entries[key]
    if len(vals) != 1:
        raise InvalidArgument(f"config key {key!r} must hold a single number")
    return vals[0]


def _triple(entries: dict, key: str) -> tuple[float, float, float]:
    vals = entries.get(key)
    if vals is None or len(vals) != 3:
        raise InvalidArgument(f"config key {key!r} must hold three numbers")
    return (vals[0], vals[1], vals[2])


def load_scene_config(text: str) -> tuple[SceneSpec, PerturbationSpec]:
    """Build a scene and its perturbation from a configuration document."""
    entries = parse_config_text(text)
    cam = CameraModel(
        width=int(_scalar(entries, "camera.width")),
        height=int(_scalar(entries, "camera.height")),
        fx=_scalar(entries, "camera.fx"),
        fy=_scalar(entries, "camera.fy"),
        cx=_scalar(entries, "camera.cx"),
        cy=_scalar(entries, "camera.cy"),
    )
    plane = None
    if "plane.normal" in entries or "plane.offset" in entries:
        plane = Plane(
            normal=_triple(entries, "plane.normal"),
            offset=_scalar(entries, "plane.offset"),
        )
    box_ids = sorted(
        {key.split(".")[1] for key in entries if key.startswith("box.")},
        key=lambda s: (len(s), s),
    )
    boxes = tuple(
        Box(
            center=_triple(entries, f"box.{bid}.center"),
            half_extents=_triple(entries, f"box.{bid}.half_extents"),
        )
        for bid in box_ids
    )
    scene = SceneSpec(camera=cam, plane=plane, boxes=boxes)

    theta = ThetaParams(
        s=_scalar(entries, "perturb.s", 1.0),
        theta=_scalar(entries, "perturb.theta", 0.0),
        phi=_scalar(entries, "perturb.phi", 0.0),
        t3=_scalar(entries, "perturb.t3", 0.0),
        cxp=_scalar(entries, "perturb.cxp", cam.width / 2.0),
        cyp=_scalar(entries, "perturb.cyp", cam.height / 2.0),
        fp=_scalar(entries, "perturb.fp", float(max(cam.width, cam.height))),
    )
    pspec = PerturbationSpec(
        theta_star=theta,
        gt_noise_sigma=_scalar(entries, "perturb.gt_noise_sigma", 0.0),
        jitter_a=_scalar(entries, "perturb.jitter_a", 1.0),
        jitter_b=_scalar(entries, "perturb.jitter_b", 0.0),
    )
    return scene, pspec
