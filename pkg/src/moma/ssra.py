"""Scale-shift-rotation alignment (SSRA).

The prediction is treated as the output of a *pseudo depth sensor* with
unknown pinhole intrinsics (c_xp, c_yp, f_p). Back-projecting a pixel
through those intrinsics,

    x_p = z_p * (u - c_xp) / f_p,   y_p = z_p * (v - c_yp) / f_p,

and keeping only the depth row of a scaled rotation plus translation
gives the forward model

    F(u, v, z_p | Theta) = s * (-x_p sin(phi) + y_p sin(theta) cos(phi)
                                + z_p cos(theta) cos(phi)) + T3,

with parameter vector Theta = [s, theta, phi, T3, c_xp, c_yp, f_p].
Because x_p and y_p are proportional to z_p at a fixed pixel, F factors
as z_p * g(u, v) + T3 where g is affine in the pixel coordinates; several
Theta produce the same g (gauge freedom), so fits are judged on the depth
they produce, never on the recovered parameters.

Fitting minimizes the mean squared depth residual over the calibration
samples with a damped Gauss-Newton descent (Levenberg-style diagonal
augmentation, multiplicative damping adaptation), started from the global
scale-shift solution with zero rotation and centered pseudo-intrinsics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DepthMap, FloatArray, SampleSet
from .errors import (
    DegenerateDesign,
    InvalidArgument,
    NonFinite,
    ZeroFocal,
)
from .gssa import VARIANCE_FLOOR, fit_gssa

_GRID_CACHE: dict[tuple[int, int], tuple[FloatArray, FloatArray]] = {}


def wrap_angle(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    w = math.fmod(x + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class ThetaParams:
    """SSRA parameter vector [s, theta, phi, t3, cxp, cyp, fp].

    Angles are wrapped into (-pi, pi] on construction. fp must be nonzero;
    its sign, like the sign of s, is unconstrained (gauge freedom).
    """

    s: float
    theta: float
    phi: float
    t3: float
    cxp: float
    cyp: float
    fp: float

    def __post_init__(self) -> None:
        vals = (self.s, self.theta, self.phi, self.t3, self.cxp, self.cyp, self.fp)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidArgument("all parameters must be finite")
        if self.fp == 0.0:
            raise ZeroFocal("pseudo focal length must be nonzero")
        object.__setattr__(self, "theta", wrap_angle(self.theta))
        object.__setattr__(self, "phi", wrap_angle(self.phi))

    def to_array(self) -> FloatArray:
        return np.array(
            [self.s, self.theta, self.phi, self.t3, self.cxp, self.cyp, self.fp]
        )

    @classmethod
    def from_array(cls, p: np.ndarray) -> "ThetaParams":
        return cls(*(float(x) for x in p))

    @classmethod
    def identity(cls, cxp: float = 0.0, cyp: float = 0.0, fp: float = 1.0) -> "ThetaParams":
        return cls(s=1.0, theta=0.0, phi=0.0, t3=0.0, cxp=cxp, cyp=cyp, fp=fp)


@dataclass(frozen=True)
class SolverConfig:
    """Damped Gauss-Newton settings.

    cost_tol is a relative cost-decrease threshold checked on accepted
    steps; step_tol bounds the parameter step norm. Damping shrinks x0.3
    on accepted steps and grows x3 on rejections.
    """

    max_iter: int = 200
    cost_tol: float = 1e-12
    step_tol: float = 1e-12
    init_damping: float = 1e-3

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise InvalidArgument("max_iter must be >= 1")
        if self.cost_tol <= 0 or self.step_tol <= 0 or self.init_damping <= 0:
            raise InvalidArgument("tolerances and damping must be > 0")


@dataclass(frozen=True)
class SolverReport:
    """Outcome of one fit: mean squared residual before/after and the path."""

    final_cost: float
    iterations: int
    converged: bool
    init_cost: float
    cost_history: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class PseudoPoint3D:
    """Back-projected pseudo-camera coordinates; fields may be arrays."""

    x_p: float | FloatArray
    y_p: float | FloatArray
    z_p: float | FloatArray


def back_project(u, v, z_p, cxp: float, cyp: float, fp: float) -> PseudoPoint3D:
    """Lift pixel(s) with pseudo depth into pseudo-camera 3D coordinates."""
    if fp == 0.0:
        raise ZeroFocal("pseudo focal length must be nonzero")
    x = z_p * (np.asarray(u, dtype=np.float64) - cxp) / fp
    y = z_p * (np.asarray(v, dtype=np.float64) - cyp) / fp
    if np.ndim(x) == 0:
        return PseudoPoint3D(float(x), float(y), float(z_p))
    return PseudoPoint3D(x, y, np.asarray(z_p, dtype=np.float64))


def forward_model(u, v, z_p, theta: ThetaParams):
    """Metric depth predicted by Theta for pixel(s) (u, v) with pseudo depth z_p.

    With theta == phi == 0 this collapses to s * z_p + t3 for every pixel.
    """
    pt = back_project(u, v, z_p, theta.cxp, theta.cyp, theta.fp)
    st, ct = math.sin(theta.theta), math.cos(theta.theta)
    sf, cf = math.sin(theta.phi), math.cos(theta.phi)
    out = theta.s * (-pt.x_p * sf + pt.y_p * st * cf + pt.z_p * ct * cf) + theta.t3
    if np.ndim(out) == 0:
        return float(out)
    return out


def forward_model_jacobian(u, v, z_p, theta: ThetaParams) -> FloatArray:
    """Analytic derivatives of the forward model w.r.t. all 7 parameters.

    Returns an array of shape (..., 7) ordered [s, theta, phi, t3, cxp,
    cyp, fp].
    """
    if theta.fp == 0.0:
        raise ZeroFocal("pseudo focal length must be nonzero")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    z = np.asarray(z_p, dtype=np.float64)
    a = (u - theta.cxp) / theta.fp
    b = (v - theta.cyp) / theta.fp
    st, ct = math.sin(theta.theta), math.cos(theta.theta)
    sf, cf = math.sin(theta.phi), math.cos(theta.phi)
    g_unit = -a * sf + b * st * cf + ct * cf  # F = s * z * g_unit + t3
    sz = theta.s * z
    out = np.empty(np.broadcast(u, v, z).shape + (7,), dtype=np.float64)
    out[..., 0] = z * g_unit
    out[..., 1] = sz * cf * (b * ct - st)
    out[..., 2] = sz * (-a * cf - b * st * sf - ct * sf)
    out[..., 3] = 1.0
    out[..., 4] = sz * sf / theta.fp
    out[..., 5] = -sz * st * cf / theta.fp
    out[..., 6] = sz * (a * sf - b * st * cf) / theta.fp
    return out


def pixel_gain_field(theta: ThetaParams, dims: tuple[int, int]) -> FloatArray:
    """The per-pixel factor g(u, v) with F = z_p * g + t3, including s.

    g is affine in (u, v):
        g = s * (-sin(phi) (u-cxp)/fp + sin(theta) cos(phi) (v-cyp)/fp
                 + cos(theta) cos(phi)).
    """
    width, height = dims
    u_grid, v_grid = _pixel_grids(width, height)
    st, ct = math.sin(theta.theta), math.cos(theta.theta)
    sf, cf = math.sin(theta.phi), math.cos(theta.phi)
    alpha = -theta.s * sf / theta.fp
    beta = theta.s * st * cf / theta.fp
    gamma = theta.s * (ct * cf + sf * theta.cxp / theta.fp - st * cf * theta.cyp / theta.fp)
    return alpha * u_grid + beta * v_grid + gamma


def _pixel_grids(width: int, height: int) -> tuple[FloatArray, FloatArray]:
    key = (width, height)
    grids = _GRID_CACHE.get(key)
    if grids is None:
        v_grid, u_grid = np.mgrid[0:height, 0:width]
        grids = (u_grid.astype(np.float64), v_grid.astype(np.float64))
        for g in grids:
            g.flags.writeable = False
        _GRID_CACHE[key] = grids
    return grids


# Indices into the parameter vector.
_I_THETA, _I_PHI = 1, 2


def fit_ssra(
    samples: SampleSet,
    dims: tuple[int, int],
    cfg: SolverConfig | None = None,
    freeze_rotation: bool = False,
) -> tuple[ThetaParams, SolverReport]:
    """Fit Theta to paired samples by damped Gauss-Newton descent.

    Initialization: (s, t3) from the global scale-shift fit, zero rotation,
    principal point at the raster center, focal max(width, height). Only
    cost-reducing steps are accepted, so the reported cost sequence is
    non-increasing and final_cost <= init_cost always. Seven or more
    samples are recommended (one per parameter); two are accepted because
    gauge freedom keeps the damped solve well-posed regardless.

    Args:
        samples: paired sample set; z_p should already be normalized when
            the calibration uses a normalization method.
        dims: (width, height) of the calibration raster.
        cfg: solver settings.
        freeze_rotation: hold theta = phi = 0, reducing the model to the
            global scale-shift family (the intrinsics then have no effect).

    Raises:
        DegenerateDesign: all predicted depths equal.
        NonFinite: samples contain NaN/inf.
    """
    cfg = cfg or SolverConfig()
    z_p = samples.require_paired()
    z_c = samples.z_c
    if samples.n < 2:
        raise InvalidArgument("need at least 2 samples")
    if not (np.all(np.isfinite(z_p)) and np.all(np.isfinite(z_c))):
        raise NonFinite("samples contain non-finite values")
    if float(np.var(z_p)) < VARIANCE_FLOOR:
        raise DegenerateDesign("predicted depths are all (nearly) equal")
    width, height = dims
    u = samples.u.astype(np.float64)
    v = samples.v.astype(np.float64)

    init = fit_gssa(samples)
    p = np.array(
        [init.s, 0.0, 0.0, init.t, width / 2.0, height / 2.0, float(max(width, height))]
    )
    free = np.ones(7, dtype=bool)
    if freeze_rotation:
        free[_I_THETA] = False
        free[_I_PHI] = False

    def cost_of(vec: np.ndarray) -> tuple[float, FloatArray | None]:
        try:
            r = z_c - forward_model(u, v, z_p, ThetaParams.from_array(vec))
        except ZeroFocal:  # a step may land exactly on fp == 0
            return math.inf, None
        return float(np.mean(r * r)), r

    cost, resid = cost_of(p)
    if not math.isfinite(cost):
        raise NonFinite("initial residuals are non-finite")
    init_cost = cost
    history = [cost]
    lam = cfg.init_damping
    iterations = 0
    converged = False

    for _ in range(cfg.max_iter):
        iterations += 1
        theta_now = ThetaParams.from_array(p)
        jac_f = forward_model_jacobian(u, v, z_p, theta_now)[:, free]
        jr = jac_f.T @ resid  # gradient of 0.5*sum r^2 w.r.t. params is -jr
        jtj = jac_f.T @ jac_f
        try:
            step = np.linalg.solve(jtj + lam * np.eye(jtj.shape[0]), jr)
        except np.linalg.LinAlgError:
            lam *= 3.0
            continue
        step_norm = float(np.linalg.norm(step))
        candidate = p.copy()
        candidate[free] += step
        new_cost, new_resid = cost_of(candidate)
        if math.isfinite(new_cost) and new_cost < cost:
            rel_drop = (cost - new_cost) / max(cost, np.finfo(float).tiny)
            p, cost, resid = candidate, new_cost, new_resid
            history.append(cost)
            lam *= 0.3
            if rel_drop < cfg.cost_tol:
                converged = True
                break
        else:
            lam *= 3.0
        if step_norm < cfg.step_tol:
            converged = True
            break

    theta_hat = ThetaParams.from_array(p)
    report = SolverReport(
        final_cost=cost,
        iterations=iterations,
        converged=converged,
        init_cost=init_cost,
        cost_history=tuple(history),
    )
    return theta_hat, report


def apply_ssra(pred_norm: DepthMap, theta: ThetaParams) -> DepthMap:
    """Run the forward model over a whole map; NaN pixels pass through.

    Vectorized as z * g(u, v) + t3 with a cached coordinate grid, sized to
    stay within a few milliseconds on VGA rasters.
    """
    if theta.fp == 0.0:
        raise ZeroFocal("pseudo focal length must be nonzero")
    g = pixel_gain_field(theta, (pred_norm.width, pred_norm.height))
    return DepthMap(pred_norm.values * g + theta.t3)
